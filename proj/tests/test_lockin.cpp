#include "capimg/error.hpp"
#include "capimg/lockin.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace capimg;

namespace {

constexpr double kPi = std::numbers::pi;

// Plain multiply-and-average demodulator, valid when the record holds an
// integer number of samples per period.
std::pair<double, double> boxcar(const TimeSeries& ts, const ReferenceSignal& ref) {
    double x = 0, y = 0;
    for (std::size_t n = 0; n < ts.samples.size(); ++n) {
        const double a = 2 * kPi * ref.f_in * ts.time(n) + ref.theta_ref;
        x += ts.samples[n] * ref.v_ref * std::sin(a);
        y += ts.samples[n] * ref.v_ref * std::cos(a);
    }
    const double n = static_cast<double>(ts.samples.size());
    return {x / n, y / n};
}

double ang_diff(double a, double b) { return std::abs(std::remainder(a - b, 2 * kPi)); }

}  // namespace

TEST_CASE("wrap_phase maps to (-pi, pi]") {
    CHECK(wrap_phase(kPi) == doctest::Approx(kPi));
    CHECK(wrap_phase(-kPi) == doctest::Approx(kPi));
    CHECK(wrap_phase(3 * kPi / 2) == doctest::Approx(-kPi / 2));
    CHECK(wrap_phase(0.25) == 0.25);
    CHECK(wrap_phase(-7 * kPi + 0.1) == doctest::Approx(-kPi + 0.1));
}

TEST_CASE("noiseless tone demodulates to half amplitude and the phase difference") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> ph(-kPi, kPi);
    for (double fs : {1.5e6, 1e6}) {  // 100 and 66.67 samples per period
        for (int t = 0; t < 10; ++t) {
            const double th_out = ph(rng), th_ref = ph(rng);
            const ReferenceSignal ref{15e3, 0.8, th_ref};
            const TimeSeries ts = synthesize(1.3, th_out, ref, fs, 40, {});
            const Demodulation d = demodulate(ts, ref);
            CHECK(d.r == doctest::Approx(0.5 * 1.3 * 0.8).epsilon(1e-10));
            CHECK(ang_diff(d.phi, th_out - th_ref) < 1e-10);
            CHECK(d.x == doctest::Approx(d.r * std::cos(d.phi)).epsilon(1e-12));
            CHECK(d.y == doctest::Approx(d.r * std::sin(d.phi)).epsilon(1e-12));
        }
    }
}

TEST_CASE("matches the boxcar average when samples per period is an integer") {
    const ReferenceSignal ref{10e3, 1.0, 0.3};
    TimeSeries ts;
    ts.fs = 400e3;  // 40 samples per period
    std::mt19937_64 rng(11);
    std::normal_distribution<double> nd(0.0, 1.0);
    for (int n = 0; n < 40 * 25; ++n) ts.samples.push_back(0.7 * std::sin(2 * kPi * 10e3 * n / ts.fs - 1.1) + 0.2 * nd(rng));
    const auto [bx, by] = boxcar(ts, ref);
    const Demodulation d = demodulate(ts, ref);
    CHECK(d.x == doctest::Approx(bx).epsilon(1e-9));
    CHECK(d.y == doctest::Approx(by).epsilon(1e-9));
}

TEST_CASE("harmonic and subharmonic tones are rejected") {
    const double f = 15e3, fs = 1e6;
    const ReferenceSignal ref{f, 1.0, 0.4};
    for (double mult : {2.0, 0.5}) {
        // 60 reference periods = 120 periods at 2f, 30 at f/2.
        const ReferenceSignal tone{f * mult, 1.0, 0.0};
        const auto n = static_cast<std::size_t>(std::llround(60 * mult));
        const TimeSeries ts = synthesize(1.0, 0.9, tone, fs, n, {});
        const Demodulation d = demodulate(ts, ref);
        CHECK(std::abs(d.x) < 1e-10);
        CHECK(std::abs(d.y) < 1e-10);
    }
}

TEST_CASE("DC offset is rejected") {
    const ReferenceSignal ref{15e3, 1.0, 0.0};
    for (std::size_t periods : {30, 100}) {  // 2000 and 6666.67 samples
        TimeSeries ts = synthesize(1.0, 0.2, ref, 1e6, periods, {});
        for (double& v : ts.samples) v += 3.0;
        const Demodulation d = demodulate(ts, ref);
        CHECK(d.r == doctest::Approx(0.5).epsilon(1e-10));
        CHECK(ang_diff(d.phi, 0.2) < 1e-10);
    }
}

TEST_CASE("record must span whole reference periods") {
    const ReferenceSignal ref{15e3, 1.0, 0.0};
    TimeSeries ts = synthesize(1.0, 0.0, ref, 1e6, 10, {});
    ts.samples.resize(ts.samples.size() - 20);
    CHECK_THROWS_AS(demodulate(ts, ref), AlignmentError);
    TimeSeries empty;
    empty.fs = 1e6;
    CHECK_THROWS_AS(demodulate(empty, ref), Error);
}

TEST_CASE("sampling limits") {
    const ReferenceSignal ref{15e3, 1.0, 0.0};
    CHECK_THROWS_AS(synthesize(1.0, 0.0, ref, 30e3, 10, {}), SamplingError);
    CHECK_THROWS_AS(synthesize(1.0, 0.0, ref, 1e6, 0, {}), SamplingError);
    const TimeSeries ts = synthesize(1.0, 0.0, ref, 1e6, 3, {});
    CHECK(ts.samples.size() == 200);
}

TEST_CASE("seeded noise is reproducible and has the requested spread") {
    const ReferenceSignal ref{15e3, 1.0, 0.0};
    const NoiseModel nm{NoiseKind::white_gaussian, 0.05, 1234};
    const TimeSeries a = synthesize(0.0, 0.0, ref, 1e6, 300, nm);
    const TimeSeries b = synthesize(0.0, 0.0, ref, 1e6, 300, nm);
    CHECK(a.samples == b.samples);
    const TimeSeries c = synthesize(0.0, 0.0, ref, 1e6, 300, {NoiseKind::white_gaussian, 0.05, 1235});
    CHECK(a.samples != c.samples);
    double m = 0, s = 0;
    for (double v : a.samples) m += v;
    m /= static_cast<double>(a.samples.size());
    for (double v : a.samples) s += (v - m) * (v - m);
    s = std::sqrt(s / static_cast<double>(a.samples.size()));
    CHECK(s == doctest::Approx(0.05).epsilon(0.02));
    CHECK(std::abs(m) < 5 * 0.05 / std::sqrt(static_cast<double>(a.samples.size())));
}

TEST_CASE("amplitude error shrinks with record length") {
    const ReferenceSignal ref{15e3, 1.0, 0.0};
    auto spread = [&](std::size_t periods) {
        double s = 0;
        const int trials = 60;
        for (int t = 0; t < trials; ++t) {
            const NoiseModel nm{NoiseKind::white_gaussian, 0.2, static_cast<std::uint64_t>(1000 + t)};
            const Demodulation d = demodulate(synthesize(1.0, 0.3, ref, 1e6, periods, nm), ref);
            s += (d.r - 0.5) * (d.r - 0.5);
        }
        return std::sqrt(s / trials);
    };
    const double ratio = spread(10) / spread(90);
    CHECK(ratio > 2.0);
    CHECK(ratio < 4.5);  // nominal 3
}

TEST_CASE("charge amplifier") {
    const InducedCharge q{Complex(-3e-13, 1e-15)};
    const AmplifierOutput a = charge_to_voltage(q, 1e12, kPi);
    CHECK(a.v_out == doctest::Approx(std::abs(q.q) * 1e12));
    CHECK(ang_diff(a.theta_out, std::arg(q.q) + kPi) < 1e-15);
    CHECK(a.theta_out > -kPi);
    CHECK(a.theta_out <= kPi);
    CHECK_THROWS_AS(charge_to_voltage(q, 0.0, 0.0), Error);
}
