/// @file elliptic.hpp
/// @brief Modified Helmholtz solves (tau^2 - Lap_h) v = f outside the
///        obstacles, and the energies J and E built from them.
#pragma once

#include <utility>

#include "encl/grid.hpp"
#include "encl/linear_solver.hpp"

namespace encl {

struct LaplaceField {
  double tau = 0.0;
  ScalarField values;
  double residual = 0.0;
};

/// Solves (tau^2 - Lap_h) v = f with Neumann obstacle faces (D0, plus D when
/// include_D) and zero on the outermost layer. Throws ConfigError when
/// tau < 0.5 or tau*h > 0.5, SolverError when the iteration cap is hit.
std::pair<LaplaceField, SolveStats> solve_modified_helmholtz(const Mask& mask, bool include_D,
                                                             const ScalarField& f, double tau,
                                                             const SolverOptions& opts = {});

/// The field eps = w - v of the problem with D, given the solution v of the
/// problem without D: solves A_D eps = (A_0 - A_D) v, whose right side lives
/// on exterior cells adjacent to D. Avoids the cancellation of w - v.
std::pair<LaplaceField, SolveStats> solve_scattered(const Mask& mask, const LaplaceField& v,
                                                    const SolverOptions& opts = {});

/// w = v + eps outside D0 and D, zero on solid cells.
LaplaceField assemble_w(const Mask& mask, const LaplaceField& v, const LaplaceField& eps);

/// Sum over D cells of (|grad v|^2 + tau^2 v^2) h^3, gradients taken as if D
/// were absent. Zero when the scene has no D.
double compute_J(const LaplaceField& v, const Mask& mask);

/// Sum over exterior and source_B cells (sponge excluded) of
/// (|grad(w - v)|^2 + tau^2 (w - v)^2) h^3. Throws DomainError when the
/// fields carry different tau.
double compute_E(const LaplaceField& w, const LaplaceField& v, const Mask& mask);

}  // namespace encl
