/// @file linear_solver.hpp
/// @brief Matrix-free shifted Laplacian on a masked voxel grid and a
///        preconditioned conjugate gradient solver for it.
///
/// The operator is A = shift*I - kappa*Lap_h acting on the "unknown" cells:
/// every non-solid cell except the outermost layer, which is held at zero.
/// Obstacle faces are either mirrored (Neumann ghost equal to the cell value)
/// or pinned to zero (Dirichlet ghost). Vectors passed in and out must be
/// zero on all non-unknown cells.
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "encl/grid.hpp"

namespace encl {

enum class ObstacleBC { neumann, dirichlet };
enum class Preconditioner { jacobi, multigrid };

struct SolverOptions {
  double tol = 1e-10;  ///< relative residual target ||b - Ax|| / ||b||
  int max_iter = 0;    ///< 0: 10 * largest grid dimension
  Preconditioner precond = Preconditioner::multigrid;
};

struct SolveStats {
  int iterations = 0;
  double relative_residual = 0.0;
};

class ShiftedLaplacian {
 public:
  ShiftedLaplacian(const Mask& mask, bool include_D, ObstacleBC bc, double shift, double kappa);

  const Grid3& grid() const { return grid_; }
  double shift() const { return shift_; }
  double kappa() const { return kappa_; }
  bool unknown(std::size_t i) const { return code_[i] >= 0; }
  /// Number of neighbours contributing to the diagonal (-1 for non-unknowns).
  int open_faces(std::size_t i) const { return code_[i]; }
  double diag(std::size_t i) const { return shift_ + kappa_ * inv_h2_ * code_[i]; }

  /// y = A x.
  void apply(std::span<const double> x, std::span<double> y) const;
  /// y = Lap_h x on unknown cells, 0 elsewhere.
  void laplacian(std::span<const double> x, std::span<double> y) const;

 private:
  friend class MultigridPreconditioner;
  Grid3 grid_;
  std::vector<std::int8_t> code_;
  double shift_;
  double kappa_;
  double inv_h2_;
};

/// Solves A x = b by PCG starting from the given x. Throws SolverError when
/// the iteration cap is reached before the tolerance.
SolveStats solve_pcg(const ShiftedLaplacian& op, std::span<const double> b, std::span<double> x,
                     const SolverOptions& opts);

/// Symmetric V-cycle over piecewise-constant aggregates; exposed for tests.
class MultigridPreconditioner {
 public:
  explicit MultigridPreconditioner(const ShiftedLaplacian& op);
  ~MultigridPreconditioner();
  MultigridPreconditioner(const MultigridPreconditioner&) = delete;
  MultigridPreconditioner& operator=(const MultigridPreconditioner&) = delete;

  /// z = B r with B symmetric positive definite.
  void apply(std::span<const double> r, std::span<double> z);
  int levels() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace encl
