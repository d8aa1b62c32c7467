#include "capimg/kernels.hpp"

#include <algorithm>

namespace capimg::kernels {

namespace {

void stencil_apply(const StencilView& s, const double* xr, const double* xi, double* yr, double* yi) {
    const std::size_t sx = 1, sy = s.sy, sz = s.sz;
    for (std::size_t k = 1; k <= s.nz; ++k) {
        for (std::size_t j = 1; j <= s.ny; ++j) {
            const std::size_t row = k * sz + j * sy;
            for (std::size_t i = 1; i <= s.nx; ++i) {
                const std::size_t p = row + i;
                double re = s.diag_re[p] * xr[p] - s.diag_im[p] * xi[p];
                double im = s.diag_re[p] * xi[p] + s.diag_im[p] * xr[p];
                // neighbor order: +x, -x, +y, -y, +z, -z
                const std::size_t nb[6] = {p + sx, p - sx, p + sy, p - sy, p + sz, p - sz};
                const std::size_t face[6] = {p, p - sx, p, p - sy, p, p - sz};
                const double* cre[6] = {s.cx_re, s.cx_re, s.cy_re, s.cy_re, s.cz_re, s.cz_re};
                const double* cim[6] = {s.cx_im, s.cx_im, s.cy_im, s.cy_im, s.cz_im, s.cz_im};
                for (int n = 0; n < 6; ++n) {
                    const double cr = cre[n][face[n]], ci = cim[n][face[n]];
                    const double vr = xr[nb[n]], vi = xi[nb[n]];
                    re = re - (cr * vr - ci * vi);
                    im = im - (cr * vi + ci * vr);
                }
                yr[p] = re;
                yi[p] = im;
            }
        }
    }
}

std::complex<double> cdotu(std::size_t n, const double* ar, const double* ai, const double* br,
                           const double* bi) {
    double re = 0.0, im = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        re += ar[k] * br[k] - ai[k] * bi[k];
        im += ar[k] * bi[k] + ai[k] * br[k];
    }
    return {re, im};
}

double cnorm2(std::size_t n, const double* ar, const double* ai) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += ar[k] * ar[k] + ai[k] * ai[k];
    return acc;
}

void caxpy(std::size_t n, std::complex<double> alpha, const double* xr, const double* xi, double* yr,
           double* yi) {
    const double a = alpha.real(), b = alpha.imag();
    for (std::size_t k = 0; k < n; ++k) {
        yr[k] = yr[k] + (a * xr[k] - b * xi[k]);
        yi[k] = yi[k] + (a * xi[k] + b * xr[k]);
    }
}

void cxpby(std::size_t n, const double* xr, const double* xi, std::complex<double> beta, double* yr,
           double* yi) {
    const double a = beta.real(), b = beta.imag();
    for (std::size_t k = 0; k < n; ++k) {
        const double r = a * yr[k] - b * yi[k];
        const double i = a * yi[k] + b * yr[k];
        yr[k] = xr[k] + r;
        yi[k] = xi[k] + i;
    }
}

void cmul(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi,
          double* yr, double* yi) {
    for (std::size_t k = 0; k < n; ++k) {
        const double r = ar[k] * br[k] - ai[k] * bi[k];
        const double i = ar[k] * bi[k] + ai[k] * br[k];
        yr[k] = r;
        yi[k] = i;
    }
}

double dot(std::size_t n, const double* a, const double* b) {
    double acc = 0.0;
    for (std::size_t k = 0; k < n; ++k) acc += a[k] * b[k];
    return acc;
}

void minmax(std::size_t n, const double* a, double* lo, double* hi) {
    double l = a[0], h = a[0];
    for (std::size_t k = 1; k < n; ++k) {
        l = std::min(l, a[k]);
        h = std::max(h, a[k]);
    }
    *lo = l;
    *hi = h;
}

void normalize(std::size_t n, const double* a, double lo, double range, double* out) {
    for (std::size_t k = 0; k < n; ++k) out[k] = (a[k] - lo) / range;
}

void fuse_delta(std::size_t n, const double* r, const double* phi, double* out) {
    for (std::size_t k = 0; k < n; ++k) out[k] = phi[k] * (1.0 - r[k]);
}

void fuse_xi(std::size_t n, const double* r, const double* phi, double guard, double* out) {
    for (std::size_t k = 0; k < n; ++k) out[k] = phi[k] / (r[k] + guard);
}

void complement(std::size_t n, const double* a, double* out) {
    for (std::size_t k = 0; k < n; ++k) out[k] = 1.0 - a[k];
}

const KernelTable kScalar{
    "scalar", stencil_apply, cdotu,    cnorm2,     caxpy,   cxpby,      cmul,
    dot,      minmax,        normalize, fuse_delta, fuse_xi, complement,
};

}  // namespace

const KernelTable& scalar_table() { return kScalar; }

}  // namespace capimg::kernels
