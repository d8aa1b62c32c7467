#include "capimg/lockin.hpp"

#include "capimg/error.hpp"
#include "capimg/kernels.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace capimg {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Reference phase at sample n, reduced before the trig call so long records
// keep full precision.
double reference_phase(double f_in, const TimeSeries& ts, std::size_t n, double theta) {
    const double cycles = f_in * ts.time(n);
    return kTwoPi * (cycles - std::floor(cycles)) + theta;
}

}  // namespace

double wrap_phase(double a) {
    double w = std::remainder(a, kTwoPi);  // [-pi, pi]
    if (w <= -std::numbers::pi) w += kTwoPi;
    return w;
}

TimeSeries synthesize(double v_out, double theta_out, const ReferenceSignal& ref, double fs,
                      std::size_t n_periods, const NoiseModel& noise) {
    if (!(ref.f_in > 0.0)) throw SamplingError("f_in must be positive");
    if (!(fs > 2.0 * ref.f_in)) {
        throw SamplingError("sample rate " + std::to_string(fs) + " Hz does not exceed 2 f_in = " +
                            std::to_string(2.0 * ref.f_in) + " Hz");
    }
    if (n_periods < 1) throw SamplingError("n_periods must be >= 1");
    if (noise.kind == NoiseKind::white_gaussian && !(noise.sigma >= 0.0)) {
        throw SamplingError("noise sigma must be >= 0");
    }

    TimeSeries ts;
    ts.fs = fs;
    ts.t0 = 0.0;
    const auto count = static_cast<std::size_t>(std::llround(static_cast<double>(n_periods) * fs / ref.f_in));
    ts.samples.resize(count);
    for (std::size_t n = 0; n < count; ++n) {
        ts.samples[n] = v_out * std::sin(reference_phase(ref.f_in, ts, n, theta_out));
    }
    if (noise.kind == NoiseKind::white_gaussian && noise.sigma > 0.0) {
        std::mt19937_64 rng(noise.seed);
        std::normal_distribution<double> dist(0.0, noise.sigma);
        for (auto& s : ts.samples) s += dist(rng);
    }
    return ts;
}

Demodulation demodulate(const TimeSeries& ts, const ReferenceSignal& ref) {
    if (!(ref.f_in > 0.0) || !(ref.v_ref > 0.0)) throw SamplingError("reference needs f_in > 0 and v_ref > 0");
    if (!(ts.fs > 2.0 * ref.f_in)) {
        throw SamplingError("sample rate " + std::to_string(ts.fs) + " Hz does not exceed 2 f_in");
    }
    const std::size_t n = ts.samples.size();
    const double samples_per_period = ts.fs / ref.f_in;
    const double periods = static_cast<double>(n) / samples_per_period;
    const double nearest = std::round(periods);
    if (nearest < 1.0 || std::abs(periods - nearest) * samples_per_period > 0.5 + 1e-9) {
        throw AlignmentError("record of " + std::to_string(n) + " samples spans " + std::to_string(periods) +
                             " reference periods; expected an integer count within half a sample");
    }

    std::vector<double> s(n), c(n);
    double s1 = 0.0, c1 = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double ph = reference_phase(ref.f_in, ts, k, ref.theta_ref);
        s[k] = std::sin(ph);
        c[k] = std::cos(ph);
        s1 += s[k];
        c1 += c[k];
    }
    const auto& K = kernels::active();
    const double* y = ts.samples.data();
    double y1 = 0.0;
    for (std::size_t k = 0; k < n; ++k) y1 += y[k];
    const double sss = K.dot(n, s.data(), s.data());
    const double scc = K.dot(n, c.data(), c.data());
    const double ssc = K.dot(n, s.data(), c.data());
    const double sys = K.dot(n, y, s.data());
    const double syc = K.dot(n, y, c.data());

    // Least-squares fit of y = a sin + b cos + d. With an integer number of
    // samples per period the off-diagonal terms vanish and this is the plain
    // boxcar mean; otherwise they remove end-of-record leakage of the tone
    // and of any DC offset.
    const double m[3][3] = {{sss, ssc, s1}, {ssc, scc, c1}, {s1, c1, static_cast<double>(n)}};
    const double rhs[3] = {sys, syc, y1};
    auto det3 = [](const double q[3][3]) {
        return q[0][0] * (q[1][1] * q[2][2] - q[1][2] * q[2][1]) - q[0][1] * (q[1][0] * q[2][2] - q[1][2] * q[2][0]) +
               q[0][2] * (q[1][0] * q[2][1] - q[1][1] * q[2][0]);
    };
    const double det = det3(m);
    double sol[2];
    for (int col = 0; col < 2; ++col) {
        double q[3][3];
        for (int r = 0; r < 3; ++r) {
            for (int cc = 0; cc < 3; ++cc) q[r][cc] = cc == col ? rhs[r] : m[r][cc];
        }
        sol[col] = det3(q) / det;
    }
    const double a = sol[0], b = sol[1];

    Demodulation d;
    d.x = 0.5 * ref.v_ref * a;
    d.y = 0.5 * ref.v_ref * b;
    d.r = std::sqrt(d.x * d.x + d.y * d.y);
    d.phi = wrap_phase(std::atan2(d.y, d.x));
    return d;
}

AmplifierOutput charge_to_voltage(const InducedCharge& q, double gain, double extra_phase) {
    if (!(gain > 0.0)) throw Error("amplifier", "gain must be positive");
    return AmplifierOutput{gain * q.magnitude(), wrap_phase(q.phase() + extra_phase)};
}

}  // namespace capimg
