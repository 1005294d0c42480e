/// @file heatkernel.hpp
/// @brief Ball Dirichlet heat kernel at the center, Gaussian lower bounds,
///        Crank-Nicolson heat evolution outside obstacles, Dirichlet/Neumann
///        domination, and the Laplace-Gaussian identity for the Yukawa kernel.
#pragma once

#include <vector>

#include "encl/grid.hpp"
#include "encl/linear_solver.hpp"
#include "encl/wavesim.hpp"

namespace encl {

/// Eigenfunction series (pi / (2 eps^3)) sum_n n^2 exp(-(n pi / eps)^2 t).
/// n_terms = 0 picks the count from the tail bound; counts above 1e6 switch
/// to the image sum. Where both representations are well conditioned they
/// are compared and a relative gap above 1e-10 throws ConsistencyError.
double ball_kernel_center(double eps, double t, int n_terms = 0);

/// Natural log of the series value; finite where the value underflows.
double log_ball_kernel_center(double eps, double t);

/// Method-of-images form
/// (4 pi t)^{-3/2} sum_{m in Z} (1 - 2 m^2 eps^2 / t) exp(-m^2 eps^2 / t).
/// `condition` receives sum |terms| / |sum|.
double ball_kernel_center_images(double eps, double t, double* condition = nullptr);

/// True where the image sum has condition number <= 1e3 (so both forms are
/// accurate to ~1e-13).
bool kernel_overlap_region(double eps, double t);

struct Lemma42Row {
  double t = 0.0;
  double lhs = 0.0;      ///< K_eps(0,0;t)
  double rhs = 0.0;      ///< (4 pi t)^{-3/2} exp(-9 pi^2 t / (4 eps^2))
  double log_lhs = 0.0;
  double log_rhs = 0.0;
  bool pass = false;
};

/// Compares in log space so that both sides stay finite for large t.
std::vector<Lemma42Row> lemma42_check(double eps, const std::vector<double>& t_grid);

/// Crank-Nicolson evolution of Z_t = Lap Z from f up to time t with steps
/// <= dt, obstacle faces mirrored (neumann) or pinned to zero (dirichlet),
/// zero on the outermost layer. Throws DomainError when f has a negative
/// cell or dt is not in (0, t]. Discrete positivity requires dt <= h^2/3.
ScalarField heat_evolve(const Mask& mask, ObstacleBC bc, const ScalarField& f, double t,
                        double dt, const SolverOptions& opts = {1e-13, 0,
                                                               Preconditioner::multigrid});

struct DominationResult {
  double max_violation = 0.0;  ///< max over non-solid cells of Z_dirichlet - Z_neumann
  double scale = 0.0;          ///< max Z_neumann
  bool pass = false;           ///< max_violation <= 1e-10 * scale
};

DominationResult domination_check(const Mask& mask, const ScalarField& f, double t, double dt);

struct IdentityResult {
  double numeric = 0.0;
  double closed_form = 0.0;
  double rel_err = 0.0;
};

/// Adaptive Gauss-Kronrod value of
/// int_0^{t_max} (4 pi t)^{-3/2} exp(-s^2/(4t)) exp(-tau^2 t) dt against
/// exp(-tau s)/(4 pi s). Requires t_max >= 50/tau^2.
IdentityResult identity_quadrature(double s, double tau, double t_max);

/// int_{t_max}^inf of the same integrand: the truncation defect.
double identity_tail(double s, double tau, double t_max);

/// closed_form - int_0^{t_max} for any t_max > 0, by quadrature; used to fit
/// the decay of the defect in t_max.
double identity_defect(double s, double tau, double t_max);

struct Lemma41Probe {
  Point3 x;
  double t = 0.0;
  double z_dirichlet = 0.0;
  double lower_bound = 0.0;  ///< int_B exp(-d_eps(x,y)^2/(4t)) K_eps(0,0;t) f(y) dy
  bool pass = false;         ///< z_dirichlet >= (1 - slack) * lower_bound
};

/// Evolves f with Dirichlet obstacle faces and compares against the Gaussian
/// lower bound with voxel geodesic distances; source cells closer than eps
/// to D0 are left out of the bound.
std::vector<Lemma41Probe> lemma41_check(const SceneSpec& scene, const Mask& mask,
                                        const SourceField& f, double eps,
                                        const std::vector<Point3>& probes,
                                        const std::vector<double>& times, double dt,
                                        double slack = 0.1);

}  // namespace encl
