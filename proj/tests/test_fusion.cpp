#include "capimg/error.hpp"
#include "capimg/fusion.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace capimg;

namespace {

ScanImage make(Channel c, std::size_t nx, std::size_t ny, std::vector<double> v) {
    ScanImage img(c, nx, ny);
    img.values = std::move(v);
    return img;
}

ScanImage random_image(Channel c, std::size_t nx, std::size_t ny, std::mt19937_64& rng, double lo, double hi) {
    std::uniform_real_distribution<double> u(lo, hi);
    ScanImage img(c, nx, ny);
    for (auto& v : img.values) v = u(rng);
    return img;
}

double max_abs_diff(const ScanImage& a, const ScanImage& b) {
    double d = 0;
    for (std::size_t k = 0; k < a.size(); ++k) d = std::max(d, std::abs(a.values[k] - b.values[k]));
    return d;
}

}  // namespace

TEST_CASE("min-max normalization") {
    const ScanImage img = make(Channel::R, 2, 2, {0, 5, 10, 5});
    const ScanImage n = minmax_normalize(img);
    CHECK(n.channel == Channel::R_NORM);
    CHECK(n.values == std::vector<double>{0, 0.5, 1, 0.5});
    CHECK(minmax_normalize(n).values == n.values);
    CHECK(minmax_normalize(make(Channel::PHI, 2, 1, {-1, 1})).channel == Channel::PHI_NORM);
    CHECK_THROWS_AS(minmax_normalize(make(Channel::R, 2, 1, {3, 3})), DegenerateRangeError);
    CHECK_THROWS_AS(minmax_normalize(make(Channel::R, 2, 1, {3, NAN})), DegenerateRangeError);
}

TEST_CASE("normalization is invariant to positive affine maps") {
    std::mt19937_64 rng(3);
    const ScanImage img = random_image(Channel::R, 7, 5, rng, -2, 9);
    ScanImage t = img;
    for (auto& v : t.values) v = 3.7 * v - 11.2;
    CHECK(max_abs_diff(minmax_normalize(img), minmax_normalize(t)) < 1e-12);
}

TEST_CASE("delta arithmetic") {
    const ScanImage r = make(Channel::R_NORM, 3, 1, {0.25, 0.0, 1.0});
    const ScanImage p = make(Channel::PHI_NORM, 3, 1, {0.5, 1.0, 0.7});
    const ScanImage d = fuse_delta(r, p);
    CHECK(d.channel == Channel::DELTA);
    CHECK(d.values == std::vector<double>{0.375, 1.0, 0.0});
    CHECK_THROWS_AS(fuse_delta(r, make(Channel::PHI_NORM, 1, 3, {0, 0, 0})), DimensionError);
}

TEST_CASE("xi arithmetic and argmax") {
    const ScanImage r = make(Channel::R_NORM, 1, 1, {0.5});
    const ScanImage p = make(Channel::PHI_NORM, 1, 1, {0.5});
    CHECK(fuse_xi(r, p, 0.0, false).values[0] == 1.0);
    CHECK_THROWS_AS(fuse_xi(make(Channel::R_NORM, 2, 1, {0.0, 1.0}), make(Channel::PHI_NORM, 2, 1, {1, 1}), 0.0, false),
                    Error);

    ScanImage r2(Channel::R_NORM, 5, 4);
    std::fill(r2.values.begin(), r2.values.end(), 1.0);
    r2.at(2, 3) = 0.0;
    ScanImage p2(Channel::PHI_NORM, 5, 4);
    std::fill(p2.values.begin(), p2.values.end(), 1.0);
    const ScanImage xi = fuse_xi(r2, p2, 1e-3, true);
    CHECK(xi.channel == Channel::XI);
    CHECK(xi.at(2, 3) == 1.0);
    CHECK(std::max_element(xi.values.begin(), xi.values.end()) - xi.values.begin() == 2 * 5 + 3);
}

TEST_CASE("xi guard sensitivity") {
    std::mt19937_64 rng(5);
    const ScanImage r = random_image(Channel::R_NORM, 9, 9, rng, 0.1, 1.0);
    const ScanImage p = random_image(Channel::PHI_NORM, 9, 9, rng, 0.0, 1.0);
    const ScanImage a = fuse_xi(r, p, 1e-3, false);
    const ScanImage b = fuse_xi(r, p, 5e-4, false);
    double rel = 0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        if (a.values[k] > 0) rel = std::max(rel, std::abs(a.values[k] - b.values[k]) / a.values[k]);
    }
    CHECK(rel < 0.01);
    const auto am = std::max_element(a.values.begin(), a.values.end()) - a.values.begin();
    const auto bm = std::max_element(b.values.begin(), b.values.end()) - b.values.begin();
    CHECK(am == bm);
}

TEST_CASE("primed operators flip the phase exactly") {
    std::mt19937_64 rng(9);
    const ScanImage r = random_image(Channel::R_NORM, 6, 4, rng, 0, 1);
    const ScanImage p = random_image(Channel::PHI_NORM, 6, 4, rng, 0, 1);
    ScanImage flipped = p;
    for (auto& v : flipped.values) v = 1.0 - v;
    CHECK(fuse_delta_prime(r, p).values == fuse_delta(r, flipped).values);
    CHECK(fuse_xi_prime(r, p, 1e-3, true).values == fuse_xi(r, flipped, 1e-3, true).values);
    CHECK(fuse_delta_prime(r, p).channel == Channel::DELTA_P);
    CHECK(fuse_xi_prime(r, p, 1e-3, false).channel == Channel::XI_P);
    ScanImage ones = p;
    std::fill(ones.values.begin(), ones.values.end(), 1.0);
    for (double v : fuse_delta_prime(r, ones).values) CHECK(v == 0.0);
}

TEST_CASE("range and monotonicity on random pairs") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0, 1);
    for (int t = 0; t < 200; ++t) {
        const ScanImage r = random_image(Channel::R_NORM, 4, 3, rng, 0, 1);
        const ScanImage p = random_image(Channel::PHI_NORM, 4, 3, rng, 0, 1);
        const ScanImage d = fuse_delta(r, p);
        const ScanImage dp = fuse_delta_prime(r, p);
        const ScanImage x = fuse_xi(r, p, 1e-3, true);
        for (std::size_t k = 0; k < d.size(); ++k) {
            CHECK(d.values[k] >= 0.0);
            CHECK(d.values[k] <= 1.0);
            CHECK(dp.values[k] >= 0.0);
            CHECK(dp.values[k] <= 1.0);
            CHECK(x.values[k] >= 0.0);
            CHECK(x.values[k] <= 1.0);
        }
        // Raise phi and lower r at one pixel.
        ScanImage p2 = p, r2 = r;
        p2.values[5] = std::min(1.0, p.values[5] + u(rng) * 0.3);
        r2.values[5] = std::max(0.0, r.values[5] - u(rng) * 0.3);
        CHECK(fuse_delta(r, p2).values[5] >= d.values[5]);
        CHECK(fuse_delta(r2, p).values[5] >= d.values[5]);
        CHECK(fuse_xi(r, p2, 1e-3, false).values[5] >= fuse_xi(r, p, 1e-3, false).values[5]);
        CHECK(fuse_xi(r2, p, 1e-3, false).values[5] >= fuse_xi(r, p, 1e-3, false).values[5]);
    }
}

TEST_CASE("end-to-end affine invariance") {
    std::mt19937_64 rng(23);
    FusionConfig cfg;
    cfg.unwrap_phase = false;
    SUBCASE("dyadic data and power-of-two scales: bitwise") {
        // Values on a 2^-10 lattice; scaling by 2^k and shifting by dyadic
        // offsets is exact, so the normalized images match bit for bit.
        std::uniform_int_distribution<int> ui(-512, 512);
        ScanImage r(Channel::R, 8, 6), p(Channel::PHI, 8, 6);
        for (auto& v : r.values) v = ui(rng) / 1024.0;
        for (auto& v : p.values) v = ui(rng) / 1024.0;
        ScanImage r2 = r, p2 = p;
        for (auto& v : r2.values) v = 4.0 * v + 3.0;
        for (auto& v : p2.values) v = 0.5 * v - 0.25;
        cfg.mode = FusionMode::delta;
        CHECK(fuse(r, p, cfg).values == fuse(r2, p2, cfg).values);
        cfg.mode = FusionMode::xi;
        CHECK(fuse(r, p, cfg).values == fuse(r2, p2, cfg).values);
    }
    SUBCASE("general affine maps: within rounding") {
        const ScanImage r = random_image(Channel::R, 8, 6, rng, 0.3, 0.5);
        const ScanImage p = random_image(Channel::PHI, 8, 6, rng, -0.01, 0.01);
        ScanImage r2 = r, p2 = p;
        for (auto& v : r2.values) v = 2.9 * v + 0.7;
        for (auto& v : p2.values) v = 13.1 * v - 0.05;
        for (auto m : {FusionMode::delta, FusionMode::xi, FusionMode::delta_prime, FusionMode::xi_prime}) {
            cfg.mode = m;
            CHECK(max_abs_diff(fuse(r, p, cfg), fuse(r2, p2, cfg)) < 1e-12);
        }
    }
}

TEST_CASE("phase centering removes wrap-around") {
    // Phases straddling +-pi become a contiguous block around zero.
    ScanImage p = make(Channel::PHI, 4, 1, {3.1, -3.1, 3.05, -3.12});
    const ScanImage c = center_phase(p);
    for (double v : c.values) CHECK(std::abs(v) < 0.2);
    CHECK(c.values[0] < c.values[1]);  // 3.1 sits below -3.1 once unwrapped
}

TEST_CASE("fusion config and modes") {
    CHECK(parse_mode("xi_prime") == FusionMode::xi_prime);
    CHECK_THROWS_AS(parse_mode("gamma"), Error);
    CHECK(output_channel(FusionMode::delta) == Channel::DELTA);
    FusionConfig cfg;
    cfg.mode = FusionMode::xi;
    cfg.xi_guard = 0.0;
    CHECK_THROWS_AS(validate(cfg), Error);
    cfg.mode = FusionMode::delta;
    CHECK_NOTHROW(validate(cfg));
}

TEST_CASE("crop and threshold") {
    ScanImage img(Channel::R, 10, 10);
    for (std::size_t k = 0; k < img.size(); ++k) img.values[k] = static_cast<double>(k);
    img.meta.x0 = 1.0;
    img.meta.y0 = 2.0;
    img.meta.dx = 0.5;
    img.meta.dy = 0.25;
    CHECK(crop_margin(img, 0).values == img.values);
    const ScanImage c = crop_margin(img, 2);
    CHECK(c.nx == 6);
    CHECK(c.ny == 6);
    CHECK(c.at(0, 0) == img.at(2, 2));
    CHECK(c.at(5, 5) == img.at(7, 7));
    CHECK(c.meta.x0 == 2.0);
    CHECK(c.meta.y0 == 2.5);
    CHECK_THROWS_AS(crop_margin(img, 5), DimensionError);

    const ScanImage all = threshold(img, -1.0);
    CHECK(std::all_of(all.values.begin(), all.values.end(), [](double v) { return v == 1.0; }));
    const ScanImage none = threshold(img, 1000.0);
    CHECK(std::all_of(none.values.begin(), none.values.end(), [](double v) { return v == 0.0; }));
    CHECK(threshold(minmax_normalize(img), 0.5).values == threshold(img, 0.0 + 0.5 * 99.0).values);
    CHECK(threshold(img, 0.0).channel == Channel::MASK);
}
