// Compiled with -mavx2. Only reached through avx2_table(), which checks the
// CPU first.

#include "capimg/kernels.hpp"

#include <immintrin.h>

#include <algorithm>

namespace capimg::kernels {

namespace {

// (cr + i ci)(vr + i vi), same operation order as the scalar path.
inline void cmul4(__m256d cr, __m256d ci, __m256d vr, __m256d vi, __m256d& re, __m256d& im) {
    re = _mm256_sub_pd(_mm256_mul_pd(cr, vr), _mm256_mul_pd(ci, vi));
    im = _mm256_add_pd(_mm256_mul_pd(cr, vi), _mm256_mul_pd(ci, vr));
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void stencil_point(const StencilView& s, const double* xr, const double* xi, double* yr, double* yi,
                   std::size_t p) {
    const std::size_t sy = s.sy, sz = s.sz;
    double re = s.diag_re[p] * xr[p] - s.diag_im[p] * xi[p];
    double im = s.diag_re[p] * xi[p] + s.diag_im[p] * xr[p];
    const std::size_t nb[6] = {p + 1, p - 1, p + sy, p - sy, p + sz, p - sz};
    const std::size_t face[6] = {p, p - 1, p, p - sy, p, p - sz};
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

void stencil_apply(const StencilView& s, const double* xr, const double* xi, double* yr, double* yi) {
    const std::size_t sy = s.sy, sz = s.sz;
    const std::ptrdiff_t off[6] = {1, -1, static_cast<std::ptrdiff_t>(sy), -static_cast<std::ptrdiff_t>(sy),
                                   static_cast<std::ptrdiff_t>(sz), -static_cast<std::ptrdiff_t>(sz)};
    const std::ptrdiff_t face_off[6] = {0, -1, 0, -static_cast<std::ptrdiff_t>(sy), 0,
                                        -static_cast<std::ptrdiff_t>(sz)};
    const double* cre[6] = {s.cx_re, s.cx_re, s.cy_re, s.cy_re, s.cz_re, s.cz_re};
    const double* cim[6] = {s.cx_im, s.cx_im, s.cy_im, s.cy_im, s.cz_im, s.cz_im};
    for (std::size_t k = 1; k <= s.nz; ++k) {
        for (std::size_t j = 1; j <= s.ny; ++j) {
            const std::size_t row = k * sz + j * sy;
            std::size_t i = 1;
            for (; i + 3 <= s.nx; i += 4) {
                const std::size_t p = row + i;
                const __m256d dr = _mm256_loadu_pd(s.diag_re + p);
                const __m256d di = _mm256_loadu_pd(s.diag_im + p);
                const __m256d vr0 = _mm256_loadu_pd(xr + p);
                const __m256d vi0 = _mm256_loadu_pd(xi + p);
                __m256d re, im;
                cmul4(dr, di, vr0, vi0, re, im);
                for (int n = 0; n < 6; ++n) {
                    const std::size_t q = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + off[n]);
                    const std::size_t f = static_cast<std::size_t>(static_cast<std::ptrdiff_t>(p) + face_off[n]);
                    __m256d tr, ti;
                    cmul4(_mm256_loadu_pd(cre[n] + f), _mm256_loadu_pd(cim[n] + f), _mm256_loadu_pd(xr + q),
                          _mm256_loadu_pd(xi + q), tr, ti);
                    re = _mm256_sub_pd(re, tr);
                    im = _mm256_sub_pd(im, ti);
                }
                _mm256_storeu_pd(yr + p, re);
                _mm256_storeu_pd(yi + p, im);
            }
            for (; i <= s.nx; ++i) stencil_point(s, xr, xi, yr, yi, row + i);
        }
    }
}

std::complex<double> cdotu(std::size_t n, const double* ar, const double* ai, const double* br,
                           const double* bi) {
    __m256d re = _mm256_setzero_pd(), im = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d a_r = _mm256_loadu_pd(ar + k), a_i = _mm256_loadu_pd(ai + k);
        const __m256d b_r = _mm256_loadu_pd(br + k), b_i = _mm256_loadu_pd(bi + k);
        re = _mm256_add_pd(re, _mm256_sub_pd(_mm256_mul_pd(a_r, b_r), _mm256_mul_pd(a_i, b_i)));
        im = _mm256_add_pd(im, _mm256_add_pd(_mm256_mul_pd(a_r, b_i), _mm256_mul_pd(a_i, b_r)));
    }
    double sr = hsum(re), si = hsum(im);
    for (; k < n; ++k) {
        sr += ar[k] * br[k] - ai[k] * bi[k];
        si += ar[k] * bi[k] + ai[k] * br[k];
    }
    return {sr, si};
}

double cnorm2(std::size_t n, const double* ar, const double* ai) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d a = _mm256_loadu_pd(ar + k), b = _mm256_loadu_pd(ai + k);
        acc = _mm256_add_pd(acc, _mm256_add_pd(_mm256_mul_pd(a, a), _mm256_mul_pd(b, b)));
    }
    double s = hsum(acc);
    for (; k < n; ++k) s += ar[k] * ar[k] + ai[k] * ai[k];
    return s;
}

void caxpy(std::size_t n, std::complex<double> alpha, const double* xr, const double* xi, double* yr,
           double* yi) {
    const double a = alpha.real(), b = alpha.imag();
    const __m256d va = _mm256_set1_pd(a), vb = _mm256_set1_pd(b);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d x_r = _mm256_loadu_pd(xr + k), x_i = _mm256_loadu_pd(xi + k);
        __m256d tr, ti;
        cmul4(va, vb, x_r, x_i, tr, ti);
        _mm256_storeu_pd(yr + k, _mm256_add_pd(_mm256_loadu_pd(yr + k), tr));
        _mm256_storeu_pd(yi + k, _mm256_add_pd(_mm256_loadu_pd(yi + k), ti));
    }
    for (; k < n; ++k) {
        yr[k] = yr[k] + (a * xr[k] - b * xi[k]);
        yi[k] = yi[k] + (a * xi[k] + b * xr[k]);
    }
}

void cxpby(std::size_t n, const double* xr, const double* xi, std::complex<double> beta, double* yr,
           double* yi) {
    const double a = beta.real(), b = beta.imag();
    const __m256d va = _mm256_set1_pd(a), vb = _mm256_set1_pd(b);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        __m256d tr, ti;
        const __m256d y_r = _mm256_loadu_pd(yr + k), y_i = _mm256_loadu_pd(yi + k);
        tr = _mm256_sub_pd(_mm256_mul_pd(va, y_r), _mm256_mul_pd(vb, y_i));
        ti = _mm256_add_pd(_mm256_mul_pd(va, y_i), _mm256_mul_pd(vb, y_r));
        _mm256_storeu_pd(yr + k, _mm256_add_pd(_mm256_loadu_pd(xr + k), tr));
        _mm256_storeu_pd(yi + k, _mm256_add_pd(_mm256_loadu_pd(xi + k), ti));
    }
    for (; k < n; ++k) {
        const double r = a * yr[k] - b * yi[k];
        const double i = a * yi[k] + b * yr[k];
        yr[k] = xr[k] + r;
        yi[k] = xi[k] + i;
    }
}

void cmul(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi,
          double* yr, double* yi) {
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        __m256d tr, ti;
        cmul4(_mm256_loadu_pd(ar + k), _mm256_loadu_pd(ai + k), _mm256_loadu_pd(br + k),
              _mm256_loadu_pd(bi + k), tr, ti);
        _mm256_storeu_pd(yr + k, tr);
        _mm256_storeu_pd(yi + k, ti);
    }
    for (; k < n; ++k) {
        const double r = ar[k] * br[k] - ai[k] * bi[k];
        const double i = ar[k] * bi[k] + ai[k] * br[k];
        yr[k] = r;
        yi[k] = i;
    }
}

double dot(std::size_t n, const double* a, const double* b) {
    __m256d acc0 = _mm256_setzero_pd(), acc1 = _mm256_setzero_pd();
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_mul_pd(_mm256_loadu_pd(a + k), _mm256_loadu_pd(b + k)));
        acc1 = _mm256_add_pd(acc1, _mm256_mul_pd(_mm256_loadu_pd(a + k + 4), _mm256_loadu_pd(b + k + 4)));
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; k < n; ++k) s += a[k] * b[k];
    return s;
}

void minmax(std::size_t n, const double* a, double* lo, double* hi) {
    double l = a[0], h = a[0];
    std::size_t k = 0;
    if (n >= 4) {
        __m256d vl = _mm256_loadu_pd(a), vh = vl;
        for (k = 4; k + 4 <= n; k += 4) {
            const __m256d v = _mm256_loadu_pd(a + k);
            vl = _mm256_min_pd(vl, v);
            vh = _mm256_max_pd(vh, v);
        }
        alignas(32) double bl[4], bh[4];
        _mm256_store_pd(bl, vl);
        _mm256_store_pd(bh, vh);
        l = *std::min_element(bl, bl + 4);
        h = *std::max_element(bh, bh + 4);
    }
    for (; k < n; ++k) {
        l = std::min(l, a[k]);
        h = std::max(h, a[k]);
    }
    *lo = l;
    *hi = h;
}

void normalize(std::size_t n, const double* a, double lo, double range, double* out) {
    const __m256d vlo = _mm256_set1_pd(lo), vr = _mm256_set1_pd(range);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        _mm256_storeu_pd(out + k, _mm256_div_pd(_mm256_sub_pd(_mm256_loadu_pd(a + k), vlo), vr));
    }
    for (; k < n; ++k) out[k] = (a[k] - lo) / range;
}

void fuse_delta(std::size_t n, const double* r, const double* phi, double* out) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d v = _mm256_mul_pd(_mm256_loadu_pd(phi + k), _mm256_sub_pd(one, _mm256_loadu_pd(r + k)));
        _mm256_storeu_pd(out + k, v);
    }
    for (; k < n; ++k) out[k] = phi[k] * (1.0 - r[k]);
}

void fuse_xi(std::size_t n, const double* r, const double* phi, double guard, double* out) {
    const __m256d g = _mm256_set1_pd(guard);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) {
        const __m256d v = _mm256_div_pd(_mm256_loadu_pd(phi + k), _mm256_add_pd(_mm256_loadu_pd(r + k), g));
        _mm256_storeu_pd(out + k, v);
    }
    for (; k < n; ++k) out[k] = phi[k] / (r[k] + guard);
}

void complement(std::size_t n, const double* a, double* out) {
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t k = 0;
    for (; k + 4 <= n; k += 4) _mm256_storeu_pd(out + k, _mm256_sub_pd(one, _mm256_loadu_pd(a + k)));
    for (; k < n; ++k) out[k] = 1.0 - a[k];
}

}  // namespace

extern const KernelTable kAvx2Table;
const KernelTable kAvx2Table{
    "avx2", stencil_apply, cdotu,    cnorm2,     caxpy,   cxpby,      cmul,
    dot,    minmax,        normalize, fuse_delta, fuse_xi, complement,
};

}  // namespace capimg::kernels
