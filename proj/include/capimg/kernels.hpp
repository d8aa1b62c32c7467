#pragma once

// Data-parallel inner loops used by the solver, the lock-in model and the
// fusion operators. Every kernel has a scalar reference implementation; an
// AVX2 variant is selected at runtime when the CPU supports it.
//
// Elementwise kernels produce bit-identical results on every backend (no FMA
// contraction, same operation order). Reductions differ only in summation
// order.

#include <complex>
#include <cstddef>
#include <string_view>
#include <vector>

namespace capimg::kernels {

/// 7-point operator on a ghost-padded lattice. Arrays are indexed by padded
/// position p = ((k + 1) * (ny + 2) + (j + 1)) * (nx + 2) + (i + 1); ghost
/// entries of every array are zero. cx[p] couples p with p + 1, cy[p] with
/// p + sy, cz[p] with p + sz.
struct StencilView {
    std::size_t nx = 0, ny = 0, nz = 0;
    std::size_t sy = 0, sz = 0;
    const double* diag_re = nullptr;
    const double* diag_im = nullptr;
    const double* cx_re = nullptr;
    const double* cx_im = nullptr;
    const double* cy_re = nullptr;
    const double* cy_im = nullptr;
    const double* cz_re = nullptr;
    const double* cz_im = nullptr;
};

struct KernelTable {
    const char* name;

    /// y = A x on interior cells; ghost entries of y are left untouched.
    void (*stencil_apply)(const StencilView& s, const double* xr, const double* xi, double* yr,
                          double* yi);
    /// sum a_k b_k (no conjugation).
    std::complex<double> (*cdotu)(std::size_t n, const double* ar, const double* ai, const double* br,
                                  const double* bi);
    /// sum |a_k|^2.
    double (*cnorm2)(std::size_t n, const double* ar, const double* ai);
    /// y += alpha x.
    void (*caxpy)(std::size_t n, std::complex<double> alpha, const double* xr, const double* xi,
                  double* yr, double* yi);
    /// y = x + beta y.
    void (*cxpby)(std::size_t n, const double* xr, const double* xi, std::complex<double> beta,
                  double* yr, double* yi);
    /// y = a * b elementwise.
    void (*cmul)(std::size_t n, const double* ar, const double* ai, const double* br, const double* bi,
                 double* yr, double* yi);

    /// sum a_k b_k.
    double (*dot)(std::size_t n, const double* a, const double* b);

    /// NaN-free input assumed.
    void (*minmax)(std::size_t n, const double* a, double* lo, double* hi);
    /// out = (a - lo) / range.
    void (*normalize)(std::size_t n, const double* a, double lo, double range, double* out);
    /// out = phi * (1 - r).
    void (*fuse_delta)(std::size_t n, const double* r, const double* phi, double* out);
    /// out = phi / (r + guard).
    void (*fuse_xi)(std::size_t n, const double* r, const double* phi, double guard, double* out);
    /// out = 1 - a.
    void (*complement)(std::size_t n, const double* a, double* out);
};

const KernelTable& scalar_table();
/// nullptr when the build lacks AVX2 code or the CPU lacks AVX2.
const KernelTable* avx2_table();

/// Backend in use. Chosen on first call: CAPIMG_KERNELS=scalar|avx2 when set,
/// otherwise the widest backend the CPU supports.
const KernelTable& active();
/// Switches the backend by name; returns false for unknown or unsupported names.
bool select(std::string_view name);
/// Names of backends usable on this machine.
std::vector<std::string_view> available();

}  // namespace capimg::kernels
