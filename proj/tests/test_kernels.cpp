#include "capimg/fieldsolver.hpp"
#include "capimg/fusion.hpp"
#include "capimg/geometry.hpp"
#include "capimg/kernels.hpp"

#include <doctest.h>

#include <array>
#include <cmath>
#include <random>

using namespace capimg;
namespace K = capimg::kernels;

namespace {

const std::size_t kLengths[] = {0, 1, 2, 3, 4, 5, 7, 8, 9, 15, 16, 17, 33, 1000, 1027};

std::vector<double> randv(std::size_t n, std::mt19937_64& rng, double lo = -1, double hi = 1) {
    std::uniform_real_distribution<double> u(lo, hi);
    std::vector<double> v(n);
    for (auto& x : v) x = u(rng);
    return v;
}

const K::KernelTable* simd() {
    const auto* t = K::avx2_table();
    if (t == nullptr) MESSAGE("AVX2 backend unavailable on this machine; equivalence checks skipped");
    return t;
}

// Padded lattice with random coefficients and zero ghosts.
struct Lattice {
    std::size_t nx, ny, nz, sy, sz, n;
    std::vector<double> d_re, d_im, cx_re, cx_im, cy_re, cy_im, cz_re, cz_im, xr, xi;

    Lattice(std::size_t a, std::size_t b, std::size_t c, std::mt19937_64& rng)
        : nx(a), ny(b), nz(c), sy(a + 2), sz((a + 2) * (b + 2)), n((a + 2) * (b + 2) * (c + 2)) {
        for (auto* v : {&d_re, &d_im, &cx_re, &cx_im, &cy_re, &cy_im, &cz_re, &cz_im, &xr, &xi}) {
            *v = randv(n, rng);
            for (std::size_t p = 0; p < n; ++p) {
                if (!interior(p)) (*v)[p] = 0.0;
            }
        }
    }
    bool interior(std::size_t p) const {
        const std::size_t i = p % sy, j = (p / sy) % (ny + 2), k = p / sz;
        return i >= 1 && i <= nx && j >= 1 && j <= ny && k >= 1 && k <= nz;
    }
    K::StencilView view() const {
        return {nx, ny, nz, sy, sz, d_re.data(), d_im.data(), cx_re.data(), cx_im.data(),
                cy_re.data(), cy_im.data(), cz_re.data(), cz_im.data()};
    }
};

}  // namespace

TEST_CASE("backend registry") {
    const auto names = K::available();
    REQUIRE(!names.empty());
    CHECK(names.front() == "scalar");
    CHECK(!K::select("sse9"));
    const std::string before = K::active().name;
    CHECK(K::select("scalar"));
    CHECK(std::string(K::active().name) == "scalar");
    CHECK(K::select(before));
}

TEST_CASE("elementwise kernels are bitwise identical across backends") {
    const K::KernelTable& s = K::scalar_table();
    const K::KernelTable* v = simd();
    if (v == nullptr) return;
    std::mt19937_64 rng(31);
    const std::complex<double> alpha(0.37, -1.21);
    for (std::size_t n : kLengths) {
        CAPTURE(n);
        const auto ar = randv(n, rng), ai = randv(n, rng), br = randv(n, rng), bi = randv(n, rng);
        const auto r01 = randv(n, rng, 0, 1), p01 = randv(n, rng, 0, 1);

        auto y1r = br, y1i = bi, y2r = br, y2i = bi;
        s.caxpy(n, alpha, ar.data(), ai.data(), y1r.data(), y1i.data());
        v->caxpy(n, alpha, ar.data(), ai.data(), y2r.data(), y2i.data());
        CHECK(y1r == y2r);
        CHECK(y1i == y2i);

        y1r = br, y1i = bi, y2r = br, y2i = bi;
        s.cxpby(n, ar.data(), ai.data(), alpha, y1r.data(), y1i.data());
        v->cxpby(n, ar.data(), ai.data(), alpha, y2r.data(), y2i.data());
        CHECK(y1r == y2r);
        CHECK(y1i == y2i);

        s.cmul(n, ar.data(), ai.data(), br.data(), bi.data(), y1r.data(), y1i.data());
        v->cmul(n, ar.data(), ai.data(), br.data(), bi.data(), y2r.data(), y2i.data());
        CHECK(y1r == y2r);
        CHECK(y1i == y2i);

        std::vector<double> o1(n), o2(n);
        s.normalize(n, ar.data(), -1.0, 2.0, o1.data());
        v->normalize(n, ar.data(), -1.0, 2.0, o2.data());
        CHECK(o1 == o2);
        s.fuse_delta(n, r01.data(), p01.data(), o1.data());
        v->fuse_delta(n, r01.data(), p01.data(), o2.data());
        CHECK(o1 == o2);
        s.fuse_xi(n, r01.data(), p01.data(), 1e-3, o1.data());
        v->fuse_xi(n, r01.data(), p01.data(), 1e-3, o2.data());
        CHECK(o1 == o2);
        s.complement(n, r01.data(), o1.data());
        v->complement(n, r01.data(), o2.data());
        CHECK(o1 == o2);

        if (n > 0) {
            double lo1, hi1, lo2, hi2;
            s.minmax(n, ar.data(), &lo1, &hi1);
            v->minmax(n, ar.data(), &lo2, &hi2);
            CHECK(lo1 == lo2);
            CHECK(hi1 == hi2);
        }
    }
}

TEST_CASE("reductions agree within rounding") {
    const K::KernelTable& s = K::scalar_table();
    const K::KernelTable* v = simd();
    if (v == nullptr) return;
    std::mt19937_64 rng(37);
    for (std::size_t n : kLengths) {
        CAPTURE(n);
        const auto ar = randv(n, rng), ai = randv(n, rng), br = randv(n, rng), bi = randv(n, rng);
        // Bound on the rounding of a length-n sum of products of magnitude <= 2.
        const double tol = 4.0 * static_cast<double>(n + 1) * 2.3e-16 * 2.0 * static_cast<double>(n + 1);
        const auto d1 = s.cdotu(n, ar.data(), ai.data(), br.data(), bi.data());
        const auto d2 = v->cdotu(n, ar.data(), ai.data(), br.data(), bi.data());
        CHECK(std::abs(d1 - d2) <= tol);
        CHECK(std::abs(s.cnorm2(n, ar.data(), ai.data()) - v->cnorm2(n, ar.data(), ai.data())) <= tol);
        CHECK(std::abs(s.dot(n, ar.data(), br.data()) - v->dot(n, ar.data(), br.data())) <= tol);
    }
    // Exact on integer-valued data.
    std::vector<double> a(101), b(101);
    for (std::size_t k = 0; k < a.size(); ++k) {
        a[k] = static_cast<double>(k % 7) - 3;
        b[k] = static_cast<double>(k % 5);
    }
    CHECK(s.dot(a.size(), a.data(), b.data()) == v->dot(a.size(), a.data(), b.data()));
}

TEST_CASE("scalar stencil matches a direct complex evaluation") {
    std::mt19937_64 rng(41);
    Lattice L(5, 4, 3, rng);
    std::vector<double> yr(L.n, 7.0), yi(L.n, 7.0);
    K::scalar_table().stencil_apply(L.view(), L.xr.data(), L.xi.data(), yr.data(), yi.data());
    using C = std::complex<double>;
    auto cpx = [&](const std::vector<double>& re, const std::vector<double>& im, std::size_t p) { return C(re[p], im[p]); };
    for (std::size_t p = 0; p < L.n; ++p) {
        if (!L.interior(p)) {
            CHECK(yr[p] == 7.0);
            continue;
        }
        C y = cpx(L.d_re, L.d_im, p) * cpx(L.xr, L.xi, p);
        y -= cpx(L.cx_re, L.cx_im, p) * cpx(L.xr, L.xi, p + 1);
        y -= cpx(L.cx_re, L.cx_im, p - 1) * cpx(L.xr, L.xi, p - 1);
        y -= cpx(L.cy_re, L.cy_im, p) * cpx(L.xr, L.xi, p + L.sy);
        y -= cpx(L.cy_re, L.cy_im, p - L.sy) * cpx(L.xr, L.xi, p - L.sy);
        y -= cpx(L.cz_re, L.cz_im, p) * cpx(L.xr, L.xi, p + L.sz);
        y -= cpx(L.cz_re, L.cz_im, p - L.sz) * cpx(L.xr, L.xi, p - L.sz);
        CHECK(std::abs(y - C(yr[p], yi[p])) < 1e-13);
    }
}

TEST_CASE("stencil kernels are bitwise identical across backends") {
    const K::KernelTable* v = simd();
    if (v == nullptr) return;
    std::mt19937_64 rng(43);
    for (auto [a, b, c] : {std::array<std::size_t, 3>{1, 1, 1}, {3, 2, 2}, {4, 4, 4}, {7, 3, 5}, {16, 9, 4}, {21, 6, 3}}) {
        CAPTURE(a);
        Lattice L(a, b, c, rng);
        std::vector<double> r1(L.n, 0.0), i1(L.n, 0.0), r2(L.n, 0.0), i2(L.n, 0.0);
        K::scalar_table().stencil_apply(L.view(), L.xr.data(), L.xi.data(), r1.data(), i1.data());
        v->stencil_apply(L.view(), L.xr.data(), L.xi.data(), r2.data(), i2.data());
        CHECK(r1 == r2);
        CHECK(i1 == i2);
    }
}

TEST_CASE("solver and fusion agree across backends") {
    if (simd() == nullptr) return;
    SampleSpec sample;
    sample.width = sample.length = 0.06;
    sample.thickness = 6e-3;
    sample.eps_r = {2.7, -0.027};
    Probe p = make_back_to_back(4e-3, 8e-3, 8e-3);
    p.x = p.y = 0.03;
    p.lift_off = 2e-3;
    GridOptions opt;
    opt.padding = 6e-3;
    const GridBuild g = build_grid(sample, p, opt);
    SolverConfig cfg;
    cfg.tol = 1e-11;

    const std::string before = K::active().name;
    REQUIRE(K::select("scalar"));
    const auto q1 = induced_charge(solve_potential(g.grid, g.bc, 1.0, cfg), g.grid, g.bc, 1.0);
    std::mt19937_64 rng(47);
    ScanImage r(Channel::R, 9, 7), ph(Channel::PHI, 9, 7);
    r.values = randv(r.size(), rng, 1, 2);
    ph.values = randv(ph.size(), rng, -0.1, 0.1);
    FusionConfig fc;
    fc.mode = FusionMode::xi;
    const ScanImage f1 = fuse(r, ph, fc);
    REQUIRE(K::select("avx2"));
    const auto q2 = induced_charge(solve_potential(g.grid, g.bc, 1.0, cfg), g.grid, g.bc, 1.0);
    const ScanImage f2 = fuse(r, ph, fc);
    K::select(before);

    CHECK(std::abs(q1.q - q2.q) / std::abs(q1.q) < 1e-9);
    CHECK(f1.values == f2.values);
}
