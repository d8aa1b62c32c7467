#pragma once

#include "capimg/geometry.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace capimg {

inline constexpr double kVacuumPermittivity = 8.8541878128e-12;  // F/m

struct SolverConfig {
    double tol = 1e-8;  ///< relative residual ||b - A x|| / ||b||
    std::size_t max_iter = 20000;
};

/// Complex potential per voxel center, same layout as the grid.
struct PotentialField {
    std::size_t nx = 0, ny = 0, nz = 0;
    std::vector<Complex> v;
    double residual_norm = 0.0;
    std::size_t iterations = 0;

    Complex at(std::size_t i, std::size_t j, std::size_t k) const { return v[(k * ny + j) * nx + i]; }
};

struct InducedCharge {
    Complex q;
    double magnitude() const;
    /// arg(q) in (-pi, pi].
    double phase() const;
};

/// Solves div(eps grad V) = 0 with drive nodes at v_drive and sense/shield
/// nodes at 0. Finite-volume 7-point stencil, face permittivity is the
/// harmonic mean of the two voxels; complex-symmetric conjugate gradient
/// (COCG) with a Jacobi preconditioner. `warm_start`, when given and of
/// matching shape, seeds the free nodes.
///
/// Throws BoundaryConditionError for missing drive/sense nodes and
/// ConvergenceError (carrying the last residual) past max_iter.
PotentialField solve_potential(const PermittivityGrid& grid, const BoundaryConditions& bc, double v_drive,
                               const SolverConfig& cfg, const PotentialField* warm_start = nullptr);

/// Charge on the sensing electrode from a discrete Gauss surface:
/// q = -sum eps0 eps_face (dV/dn) A over every face leaving the sense set.
InducedCharge induced_charge(const PotentialField& field, const PermittivityGrid& grid,
                             const BoundaryConditions& bc, double v_drive);

/// Gauss-surface charge on each conductor. `outer` is the charge on the
/// Dirichlet outer boundary (zero for Neumann).
struct ChargeBalance {
    Complex drive, sense, shield, outer;
    Complex total() const { return drive + sense + shield + outer; }
};
ChargeBalance charge_balance(const PotentialField& field, const PermittivityGrid& grid,
                             const BoundaryConditions& bc, double v_drive);

struct SensitivityMap {
    std::size_t nx = 0, ny = 0, nz = 0;
    std::vector<double> values;  ///< d|q| / d eps' per voxel, C per unit relative permittivity
    double delta_eps = 0.0;
};

/// Brute-force sensitivity: for every voxel flagged in `perturb` (free nodes
/// only), eps' += delta_eps, re-solve from the base field and record
/// (|q'| - |q|) / delta_eps. Unflagged voxels stay zero.
SensitivityMap sensitivity_map(const PermittivityGrid& grid, const BoundaryConditions& bc, double v_drive,
                               double delta_eps, const SolverConfig& cfg,
                               std::span<const std::uint8_t> perturb);

}  // namespace capimg
