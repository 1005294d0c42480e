/// @file heatkernel.cpp
#include "encl/heatkernel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "encl/errors.hpp"

namespace encl {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr long kMaxSeriesTerms = 1000000;

void check_positive(double eps, double t) {
  if (!(eps > 0.0) || !(t > 0.0) || !std::isfinite(eps) || !std::isfinite(t))
    throw DomainError("kernel needs eps > 0 and t > 0");
}

// Terms needed so that n^2 exp(-a (n^2 - 1)) < 1e-17 beyond the cut.
long series_terms(double a) {
  const double need = std::sqrt(1.0 + 45.0 / a);
  if (need > static_cast<double>(kMaxSeriesTerms)) return kMaxSeriesTerms + 1;
  long n = static_cast<long>(std::ceil(need));
  while (static_cast<double>(n + 1) * (n + 1) * std::exp(-a * ((n + 1.0) * (n + 1.0) - 1.0)) >= 1e-17)
    ++n;
  return n;
}

// log of the eigenseries; the sum is factored around the leading mode.
double log_series(double eps, double t, long n_terms) {
  const double a = (kPi / eps) * (kPi / eps) * t;
  double sum = 0.0;
  for (long n = n_terms; n >= 1; --n) {
    const double nn = static_cast<double>(n) * n;
    sum += nn * std::exp(-a * (nn - 1.0));
  }
  return std::log(kPi / (2.0 * eps * eps * eps)) - a + std::log(sum);
}

}  // namespace

double ball_kernel_center_images(double eps, double t, double* condition) {
  check_positive(eps, t);
  const double r = eps * eps / t;
  const long m_max = static_cast<long>(std::ceil(std::sqrt(45.0 / r))) + 1;
  double sum = 0.0, abs_sum = 0.0;
  for (long m = m_max; m >= 1; --m) {
    const double mm = static_cast<double>(m) * m;
    const double term = 2.0 * (1.0 - 2.0 * mm * r) * std::exp(-mm * r);
    sum += term;
    abs_sum += std::abs(term);
  }
  sum += 1.0;
  abs_sum += 1.0;
  if (condition) *condition = sum != 0.0 ? abs_sum / std::abs(sum) : INFINITY;
  return std::pow(4.0 * kPi * t, -1.5) * sum;
}

bool kernel_overlap_region(double eps, double t) {
  check_positive(eps, t);
  double cond = 0.0;
  ball_kernel_center_images(eps, t, &cond);
  const double a = (kPi / eps) * (kPi / eps) * t;
  return cond <= 1e3 && series_terms(a) <= kMaxSeriesTerms;
}

double log_ball_kernel_center(double eps, double t) {
  check_positive(eps, t);
  const double a = (kPi / eps) * (kPi / eps) * t;
  const long n = series_terms(a);
  if (n > kMaxSeriesTerms) return std::log(ball_kernel_center_images(eps, t));
  return log_series(eps, t, n);
}

double ball_kernel_center(double eps, double t, int n_terms) {
  check_positive(eps, t);
  const double a = (kPi / eps) * (kPi / eps) * t;
  long n = n_terms > 0 ? n_terms : series_terms(a);
  if (n_terms > 0 && n < kMaxSeriesTerms) {
    const double nn = (n + 1.0) * (n + 1.0);
    if (nn * std::exp(-a * (nn - 1.0)) >= 1e-15)
      throw DomainError("n_terms leaves a series tail above 1e-15 of the value");
  }
  if (n > kMaxSeriesTerms) return ball_kernel_center_images(eps, t);
  const double value = std::exp(log_series(eps, t, n));
  double cond = 0.0;
  const double images = ball_kernel_center_images(eps, t, &cond);
  if (cond <= 1e3 && std::abs(images - value) > 1e-10 * value) {
    std::ostringstream os;
    os.precision(17);
    os << "kernel representations disagree at eps=" << eps << ", t=" << t << ": series " << value
       << ", images " << images;
    throw ConsistencyError(os.str());
  }
  return value;
}

std::vector<Lemma42Row> lemma42_check(double eps, const std::vector<double>& t_grid) {
  std::vector<Lemma42Row> rows;
  for (double t : t_grid) {
    Lemma42Row r;
    r.t = t;
    r.log_lhs = log_ball_kernel_center(eps, t);
    r.log_rhs = -1.5 * std::log(4.0 * kPi * t) - 9.0 * kPi * kPi * t / (4.0 * eps * eps);
    r.lhs = std::exp(r.log_lhs);
    r.rhs = std::exp(r.log_rhs);
    r.pass = r.log_lhs >= r.log_rhs + std::log1p(-1e-12);
    rows.push_back(r);
  }
  return rows;
}

ScalarField heat_evolve(const Mask& mask, ObstacleBC bc, const ScalarField& f, double t,
                        double dt, const SolverOptions& opts) {
  const Grid3& g = mask.grid;
  if (!(f.grid == g)) throw DomainError("field and mask grids differ");
  if (!(t > 0.0) || !(dt > 0.0) || dt > t * (1.0 + 1e-12))
    throw DomainError("heat evolution needs 0 < dt <= t");
  for (double x : f.values)
    if (x < 0.0) throw DomainError("heat evolution data must be nonnegative");
  const int steps = static_cast<int>(std::ceil(t / dt - 1e-9));
  const double step = t / steps;
  const ShiftedLaplacian op(mask, true, bc, 1.0, 0.5 * step);
  ScalarField z(g);
  for (std::size_t i = 0; i < g.size(); ++i)
    if (op.unknown(i)) z[i] = f[i];
  std::vector<double> az(g.size()), b(g.size());
  for (int n = 0; n < steps; ++n) {
    op.apply(z.values, az);
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = op.unknown(i) ? 2.0 * z[i] - az[i] : 0.0;
    solve_pcg(op, b, z.values, opts);
  }
  return z;
}

DominationResult domination_check(const Mask& mask, const ScalarField& f, double t, double dt) {
  const ScalarField zd = heat_evolve(mask, ObstacleBC::dirichlet, f, t, dt);
  const ScalarField zn = heat_evolve(mask, ObstacleBC::neumann, f, t, dt);
  DominationResult r;
  r.max_violation = -INFINITY;
  for (std::size_t i = 0; i < zd.values.size(); ++i) {
    if (mask.is_solid(i, true)) continue;
    r.max_violation = std::max(r.max_violation, zd[i] - zn[i]);
    r.scale = std::max(r.scale, zn[i]);
  }
  r.max_violation = std::max(r.max_violation, 0.0);
  r.pass = r.max_violation <= 1e-10 * r.scale;
  return r;
}

namespace {

double identity_integrand(double t, double s, double tau) {
  if (t <= 0.0) return 0.0;
  return std::pow(4.0 * kPi * t, -1.5) * std::exp(-s * s / (4.0 * t) - tau * tau * t);
}

}  // namespace

IdentityResult identity_quadrature(double s, double tau, double t_max) {
  if (!(s > 0.0) || !(tau > 0.0)) throw DomainError("identity needs s > 0 and tau > 0");
  if (!(t_max >= 50.0 / (tau * tau))) throw DomainError("t_max must be >= 50/tau^2");
  auto f = [&](double t) { return identity_integrand(t, s, tau); };
  double err = 0.0, l1 = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, t_max, 15, 1e-12, &err, &l1);
  if (!(err <= 1e-9 * std::abs(value)) || !std::isfinite(value))
    throw SolverError("adaptive quadrature did not converge");
  IdentityResult r;
  r.numeric = value;
  r.closed_form = std::exp(-tau * s) / (4.0 * kPi * s);
  r.rel_err = std::abs(r.numeric - r.closed_form) / r.closed_form;
  return r;
}

double identity_defect(double s, double tau, double t_max) {
  if (!(s > 0.0) || !(tau > 0.0) || !(t_max > 0.0)) throw DomainError("defect needs positive inputs");
  auto f = [&](double t) { return identity_integrand(t, s, tau); };
  double err = 0.0;
  const double value =
      boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, 0.0, t_max, 15, 1e-13, &err);
  return std::exp(-tau * s) / (4.0 * kPi * s) - value;
}

double identity_tail(double s, double tau, double t_max) {
  if (!(s > 0.0) || !(tau > 0.0) || !(t_max > 0.0)) throw DomainError("tail needs positive inputs");
  boost::math::quadrature::exp_sinh<double> integrator;
  // Shift to [0, inf) and factor out the decay at t_max to keep the scale O(1).
  const double scale = identity_integrand(t_max, s, tau);
  if (scale == 0.0) return 0.0;
  auto f = [&](double u) { return identity_integrand(t_max + u, s, tau) / scale; };
  double err = 0.0;
  const double v = integrator.integrate(f, 0.0, std::numeric_limits<double>::infinity(), 1e-13, &err);
  return v * scale;
}

std::vector<Lemma41Probe> lemma41_check(const SceneSpec& scene, const Mask& mask,
                                        const SourceField& f, double eps,
                                        const std::vector<Point3>& probes,
                                        const std::vector<double>& times, double dt,
                                        double slack) {
  const Grid3& g = mask.grid;
  std::vector<std::size_t> src_cells;
  std::vector<Point3> src_points;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (f.field[i] <= 0.0) continue;
    const Point3 y = g.center(i);
    if (signed_distance(scene.d0_bodies, y) < eps) continue;
    src_cells.push_back(i);
    src_points.push_back(y);
  }
  std::vector<Lemma41Probe> out;
  std::vector<ScalarField> z;
  for (double t : times) z.push_back(heat_evolve(mask, ObstacleBC::dirichlet, f.field, t, dt));
  for (const Point3& x : probes) {
    const VoxelGeodesic geo(scene.d0_bodies, eps, g.h, x, src_points);
    std::vector<double> d(src_points.size());
    for (std::size_t c = 0; c < d.size(); ++c) d[c] = geo.distance_to(src_points[c]);
    const std::size_t xi = g.locate(x);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double t = times[k];
      const double log_k = log_ball_kernel_center(eps, t);
      double lb = 0.0;
      for (std::size_t c = 0; c < d.size(); ++c)
        if (std::isfinite(d[c])) lb += std::exp(-d[c] * d[c] / (4.0 * t) + log_k) * f.field[src_cells[c]];
      lb *= g.cell_volume();
      Lemma41Probe p{x, t, z[k][xi], lb, false};
      p.pass = p.z_dirichlet >= (1.0 - slack) * p.lower_bound;
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace encl
