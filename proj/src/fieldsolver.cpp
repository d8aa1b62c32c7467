#include "capimg/fieldsolver.hpp"

#include "capimg/error.hpp"
#include "capimg/kernels.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace capimg {

namespace {

Complex harmonic(Complex a, Complex b) { return 2.0 * a * b / (a + b); }

/// Split complex vector on the ghost-padded lattice.
struct SplitVec {
    std::vector<double> re, im;
    explicit SplitVec(std::size_t n = 0) : re(n, 0.0), im(n, 0.0) {}
};

/// Assembled operator restricted to free nodes plus the right-hand side
/// produced by the fixed nodes.
class System {
  public:
    System(const PermittivityGrid& g, const BoundaryConditions& bc, double v_drive)
        : nx_(g.nx), ny_(g.ny), nz_(g.nz), sy_(g.nx + 2), sz_((g.nx + 2) * (g.ny + 2)),
          n_((g.nx + 2) * (g.ny + 2) * (g.nz + 2)), diag_(n_), inv_diag_(n_), cx_(n_), cy_(n_), cz_(n_), rhs_(n_) {
        auto fixed_value = [&](std::size_t idx) { return bc.role[idx] == NodeRole::drive ? v_drive : 0.0; };
        for (std::size_t k = 0; k < nz_; ++k) {
            for (std::size_t j = 0; j < ny_; ++j) {
                for (std::size_t i = 0; i < nx_; ++i) {
                    const std::size_t a = g.index(i, j, k);
                    if (bc.is_fixed(a)) continue;
                    const std::size_t p = padded(i, j, k);
                    Complex d{0.0, 0.0}, b{0.0, 0.0};
                    auto face = [&](bool inside, std::size_t nb_idx, SplitVec* store, std::size_t store_at) {
                        if (!inside) {
                            if (bc.outer == OuterBoundary::dirichlet_zero) d += 2.0 * g.eps[a];
                            return;
                        }
                        const Complex c = harmonic(g.eps[a], g.eps[nb_idx]);
                        d += c;
                        if (bc.is_fixed(nb_idx)) {
                            b += c * fixed_value(nb_idx);
                        } else if (store != nullptr) {
                            store->re[store_at] = c.real();
                            store->im[store_at] = c.imag();
                        }
                    };
                    // Each interior face is stored once, on its lower cell.
                    face(i + 1 < nx_, i + 1 < nx_ ? g.index(i + 1, j, k) : 0, &cx_, p);
                    face(i > 0, i > 0 ? g.index(i - 1, j, k) : 0, nullptr, 0);
                    face(j + 1 < ny_, j + 1 < ny_ ? g.index(i, j + 1, k) : 0, &cy_, p);
                    face(j > 0, j > 0 ? g.index(i, j - 1, k) : 0, nullptr, 0);
                    face(k + 1 < nz_, k + 1 < nz_ ? g.index(i, j, k + 1) : 0, &cz_, p);
                    face(k > 0, k > 0 ? g.index(i, j, k - 1) : 0, nullptr, 0);
                    diag_.re[p] = d.real();
                    diag_.im[p] = d.imag();
                    const Complex inv = 1.0 / d;
                    inv_diag_.re[p] = inv.real();
                    inv_diag_.im[p] = inv.imag();
                    rhs_.re[p] = b.real();
                    rhs_.im[p] = b.imag();
                }
            }
        }
    }

    std::size_t padded(std::size_t i, std::size_t j, std::size_t k) const {
        return (k + 1) * sz_ + (j + 1) * sy_ + (i + 1);
    }
    std::size_t size() const { return n_; }
    const SplitVec& rhs() const { return rhs_; }
    const SplitVec& inv_diag() const { return inv_diag_; }

    kernels::StencilView view() const {
        kernels::StencilView s;
        s.nx = nx_;
        s.ny = ny_;
        s.nz = nz_;
        s.sy = sy_;
        s.sz = sz_;
        s.diag_re = diag_.re.data();
        s.diag_im = diag_.im.data();
        s.cx_re = cx_.re.data();
        s.cx_im = cx_.im.data();
        s.cy_re = cy_.re.data();
        s.cy_im = cy_.im.data();
        s.cz_re = cz_.re.data();
        s.cz_im = cz_.im.data();
        return s;
    }

  private:
    std::size_t nx_, ny_, nz_, sy_, sz_, n_;
    SplitVec diag_, inv_diag_, cx_, cy_, cz_, rhs_;
};

double relative_residual(const kernels::KernelTable& K, const System& sys, const SplitVec& x, SplitVec& r,
                         double bnorm) {
    const std::size_t n = sys.size();
    K.stencil_apply(sys.view(), x.re.data(), x.im.data(), r.re.data(), r.im.data());
    // r = b - A x, ghosts of r stay zero
    for (std::size_t p = 0; p < n; ++p) {
        r.re[p] = sys.rhs().re[p] - r.re[p];
        r.im[p] = sys.rhs().im[p] - r.im[p];
    }
    return std::sqrt(K.cnorm2(n, r.re.data(), r.im.data())) / bnorm;
}

}  // namespace

double InducedCharge::magnitude() const { return std::abs(q); }

double InducedCharge::phase() const {
    const double a = std::arg(q);
    return a == -std::numbers::pi ? std::numbers::pi : a;
}

PotentialField solve_potential(const PermittivityGrid& grid, const BoundaryConditions& bc, double v_drive,
                               const SolverConfig& cfg, const PotentialField* warm_start) {
    validate(grid, bc);
    if (!(cfg.tol > 0.0)) throw Error("solver-config", "solver tolerance must be positive");

    const auto& K = kernels::active();
    const System sys(grid, bc, v_drive);
    const std::size_t n = sys.size();

    SplitVec x(n), r(n), z(n), p(n), q(n);
    const bool warm = warm_start != nullptr && warm_start->nx == grid.nx && warm_start->ny == grid.ny &&
                      warm_start->nz == grid.nz;
    if (warm) {
        for (std::size_t k = 0; k < grid.nz; ++k) {
            for (std::size_t j = 0; j < grid.ny; ++j) {
                for (std::size_t i = 0; i < grid.nx; ++i) {
                    const std::size_t a = grid.index(i, j, k);
                    if (bc.is_fixed(a)) continue;
                    const std::size_t pp = sys.padded(i, j, k);
                    x.re[pp] = warm_start->v[a].real();
                    x.im[pp] = warm_start->v[a].imag();
                }
            }
        }
    }

    PotentialField out;
    out.nx = grid.nx;
    out.ny = grid.ny;
    out.nz = grid.nz;

    const double bnorm = std::sqrt(K.cnorm2(n, sys.rhs().re.data(), sys.rhs().im.data()));
    std::size_t it = 0;
    double res = 0.0;
    if (bnorm > 0.0) {
        res = relative_residual(K, sys, x, r, bnorm);
        bool restart = true;
        Complex rho{0.0, 0.0};
        while (res > cfg.tol) {
            if (it >= cfg.max_iter) {
                throw ConvergenceError(res, it,
                                       "potential solve did not reach tol " + std::to_string(cfg.tol) +
                                           " in " + std::to_string(it) + " iterations (residual " +
                                           std::to_string(res) + ")");
            }
            if (restart) {
                K.cmul(n, sys.inv_diag().re.data(), sys.inv_diag().im.data(), r.re.data(), r.im.data(),
                       p.re.data(), p.im.data());
                rho = K.cdotu(n, r.re.data(), r.im.data(), p.re.data(), p.im.data());
                restart = false;
            }
            K.stencil_apply(sys.view(), p.re.data(), p.im.data(), q.re.data(), q.im.data());
            const Complex pq = K.cdotu(n, p.re.data(), p.im.data(), q.re.data(), q.im.data());
            if (pq == Complex{0.0, 0.0} || rho == Complex{0.0, 0.0}) {
                // COCG breakdown: restart from the true residual.
                res = relative_residual(K, sys, x, r, bnorm);
                restart = true;
                ++it;
                continue;
            }
            const Complex alpha = rho / pq;
            K.caxpy(n, alpha, p.re.data(), p.im.data(), x.re.data(), x.im.data());
            K.caxpy(n, -alpha, q.re.data(), q.im.data(), r.re.data(), r.im.data());
            ++it;
            res = std::sqrt(K.cnorm2(n, r.re.data(), r.im.data())) / bnorm;
            if (res <= cfg.tol) {
                res = relative_residual(K, sys, x, r, bnorm);
                if (res > cfg.tol) restart = true;
                continue;
            }
            K.cmul(n, sys.inv_diag().re.data(), sys.inv_diag().im.data(), r.re.data(), r.im.data(),
                   z.re.data(), z.im.data());
            const Complex rho_next = K.cdotu(n, r.re.data(), r.im.data(), z.re.data(), z.im.data());
            const Complex beta = rho_next / rho;
            rho = rho_next;
            K.cxpby(n, z.re.data(), z.im.data(), beta, p.re.data(), p.im.data());
        }
    }
    out.residual_norm = res;
    out.iterations = it;

    out.v.assign(grid.size(), Complex{0.0, 0.0});
    for (std::size_t k = 0; k < grid.nz; ++k) {
        for (std::size_t j = 0; j < grid.ny; ++j) {
            for (std::size_t i = 0; i < grid.nx; ++i) {
                const std::size_t a = grid.index(i, j, k);
                switch (bc.role[a]) {
                    case NodeRole::drive: out.v[a] = v_drive; break;
                    case NodeRole::sense:
                    case NodeRole::shield: break;
                    case NodeRole::free: {
                        const std::size_t pp = sys.padded(i, j, k);
                        out.v[a] = Complex{x.re[pp], x.im[pp]};
                        break;
                    }
                }
            }
        }
    }
    return out;
}

namespace {

/// Gauss-surface charge leaving every cell of `role`, plus the charge on the
/// Dirichlet outer boundary faces.
void accumulate_charges(const PotentialField& field, const PermittivityGrid& g, const BoundaryConditions& bc,
                        ChargeBalance& out) {
    const double scale = kVacuumPermittivity * g.h;
    auto slot = [&](NodeRole r) -> Complex* {
        switch (r) {
            case NodeRole::drive: return &out.drive;
            case NodeRole::sense: return &out.sense;
            case NodeRole::shield: return &out.shield;
            case NodeRole::free: return nullptr;
        }
        return nullptr;
    };
    const bool dirichlet = bc.outer == OuterBoundary::dirichlet_zero;
    for (std::size_t k = 0; k < g.nz; ++k) {
        for (std::size_t j = 0; j < g.ny; ++j) {
            for (std::size_t i = 0; i < g.nx; ++i) {
                const std::size_t a = g.index(i, j, k);
                Complex* acc = slot(bc.role[a]);
                const Complex va = field.v[a];
                auto face = [&](bool inside, std::size_t b) {
                    if (!inside) {
                        if (!dirichlet) return;
                        // boundary face at half a cell, held at 0
                        const Complex flux = scale * 2.0 * g.eps[a] * (Complex{0.0, 0.0} - va);
                        if (acc != nullptr) *acc -= flux;
                        out.outer += flux;
                        return;
                    }
                    if (acc == nullptr || bc.role[b] == bc.role[a]) return;
                    *acc -= scale * harmonic(g.eps[a], g.eps[b]) * (field.v[b] - va);
                };
                if (acc == nullptr && !dirichlet) continue;
                face(i + 1 < g.nx, i + 1 < g.nx ? g.index(i + 1, j, k) : 0);
                face(i > 0, i > 0 ? g.index(i - 1, j, k) : 0);
                face(j + 1 < g.ny, j + 1 < g.ny ? g.index(i, j + 1, k) : 0);
                face(j > 0, j > 0 ? g.index(i, j - 1, k) : 0);
                face(k + 1 < g.nz, k + 1 < g.nz ? g.index(i, j, k + 1) : 0);
                face(k > 0, k > 0 ? g.index(i, j, k - 1) : 0);
            }
        }
    }
}

}  // namespace

ChargeBalance charge_balance(const PotentialField& field, const PermittivityGrid& grid,
                             const BoundaryConditions& bc, double /*v_drive*/) {
    if (field.v.size() != grid.size() || bc.role.size() != grid.size()) {
        throw DimensionError("field, grid and boundary conditions disagree in size");
    }
    ChargeBalance out{};
    accumulate_charges(field, grid, bc, out);
    return out;
}

InducedCharge induced_charge(const PotentialField& field, const PermittivityGrid& grid,
                             const BoundaryConditions& bc, double v_drive) {
    return InducedCharge{charge_balance(field, grid, bc, v_drive).sense};
}

SensitivityMap sensitivity_map(const PermittivityGrid& grid, const BoundaryConditions& bc, double v_drive,
                               double delta_eps, const SolverConfig& cfg,
                               std::span<const std::uint8_t> perturb) {
    if (!(delta_eps > 0.0)) throw Error("sensitivity", "delta_eps must be positive");
    if (perturb.size() != grid.size()) throw DimensionError("perturbation mask does not match the grid");

    const PotentialField base = solve_potential(grid, bc, v_drive, cfg);
    const double q0 = induced_charge(base, grid, bc, v_drive).magnitude();

    SensitivityMap out;
    out.nx = grid.nx;
    out.ny = grid.ny;
    out.nz = grid.nz;
    out.delta_eps = delta_eps;
    out.values.assign(grid.size(), 0.0);

    PermittivityGrid work = grid;
    for (std::size_t a = 0; a < grid.size(); ++a) {
        if (perturb[a] == 0 || bc.is_fixed(a)) continue;
        work.eps[a] = grid.eps[a] + delta_eps;
        const PotentialField f = solve_potential(work, bc, v_drive, cfg, &base);
        out.values[a] = (induced_charge(f, work, bc, v_drive).magnitude() - q0) / delta_eps;
        work.eps[a] = grid.eps[a];
    }
    return out;
}

}  // namespace capimg
