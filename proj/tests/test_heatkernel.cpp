#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>

#include "encl/errors.hpp"
#include "encl/heatkernel.hpp"
#include "encl/verification.hpp"

using namespace encl;
using doctest::Approx;
using std::numbers::pi;

namespace {

// Radial Dirichlet modes sin(n pi r / eps) / r, summed in long double.
long double eigen_oracle(long double eps, long double t) {
  long double s = 0;
  for (int n = 400; n >= 1; --n) s += n * n * std::exp(-(n * pi / eps) * (n * pi / eps) * t);
  return pi / (2 * eps * eps * eps) * s;
}

// Free-space Gaussian convolution of (eta - r)_+^2 seen at distance R.
double gaussian_oracle(double R, double eta, double t) {
  const int n = 2000;
  const double dr = eta / n;
  auto q = [&](double r) {
    const double f = (eta - r) * (eta - r);
    if (R == 0.0) return 4 * pi * r * r * f * std::exp(-r * r / (4 * t)) / std::pow(4 * pi * t, 1.5);
    return f * r / (R * std::sqrt(4 * pi * t)) *
           (std::exp(-(R - r) * (R - r) / (4 * t)) - std::exp(-(R + r) * (R + r) / (4 * t)));
  };
  double s = q(0) + q(eta);
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * q(i * dr);
  return s * dr / 3.0;
}

Mask free_mask(double h, double clearance) {
  SceneSpec sc;
  sc.source = {{0, 0, 0}, 0.4};
  return voxelize(sc, Grid3::fit(sc, h, 0, clearance));
}

Mask ball_mask(int n) {
  SceneSpec sc;
  sc.d0_bodies = {ConvexBodySpec::ball({0, 0, 0}, 1.0)};
  sc.source = {{-1.4, 0, 0}, 0.3};
  Grid3 g;
  g.origin = {-2, -2, -2};
  g.h = 4.0 / n;
  g.dims = {n, n, n};
  return voxelize(sc, g);
}

double mass(const ScalarField& z) {
  double s = 0;
  for (double x : z.values) s += x;
  return s * z.grid.cell_volume();
}

}  // namespace

TEST_CASE("ball kernel at the center") {
  CHECK(static_cast<double>(eigen_oracle(1.0L, 0.1L)) == Approx(0.708655746614).epsilon(1e-12));
  CHECK(ball_kernel_center(1.0, 0.1) == Approx(0.708655746614).epsilon(1e-12));
  CHECK(ball_kernel_center_images(1.0, 0.1) == Approx(0.708655746614).epsilon(1e-12));
  for (double eps : {0.5, 1.0, 2.0})
    for (double t : {0.05, 0.2, 1.0})
      CHECK(ball_kernel_center(eps, t) == Approx(static_cast<double>(eigen_oracle(eps, t))).epsilon(1e-13));
}

TEST_CASE("kernel limits") {
  for (double eps : {0.5, 1.0}) {
    const double t = 2.0 * eps * eps;
    const double lead = pi / (2 * eps * eps * eps) * std::exp(-(pi / eps) * (pi / eps) * t);
    CHECK(ball_kernel_center(eps, t) / lead == Approx(1.0).epsilon(1e-12));
    const double ts = 1e-3 * eps * eps;
    CHECK(ball_kernel_center(eps, ts) * std::pow(4 * pi * ts, 1.5) == Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("kernel monotonicity") {
  for (double eps : {0.5, 1.0, 2.0}) {
    double prev = INFINITY;
    for (double t = 0.01; t < 3.0; t *= 1.3) {
      const double k = ball_kernel_center(eps, t);
      CHECK(k < prev);
      CHECK(k > 0.0);
      prev = k;
    }
  }
  for (double t : {0.05, 0.3, 1.0}) {
    double prev = 0;
    for (double eps = 0.3; eps < 3.0; eps *= 1.2) {
      const double k = ball_kernel_center(eps, t);
      // Strict where the boundary effect exp(-eps^2/t) is resolvable.
      if (std::exp(-eps * eps / t) > 1e-12) CHECK(k > prev);
      else CHECK(k >= prev * (1 - 1e-14));
      prev = k;
    }
  }
}

TEST_CASE("kernel arguments") {
  CHECK_THROWS_AS(ball_kernel_center(0.0, 1.0), DomainError);
  CHECK_THROWS_AS(ball_kernel_center(1.0, -1.0), DomainError);
  CHECK_THROWS_AS(ball_kernel_center(1.0, 0.001, 2), DomainError);
  CHECK(ball_kernel_center(1.0, 0.1, 50) == Approx(0.708655746614).epsilon(1e-12));
  // Tiny t goes through the image sum.
  CHECK(ball_kernel_center(1.0, 1e-9) * std::pow(4 * pi * 1e-9, 1.5) == Approx(1.0).epsilon(1e-12));
}

TEST_CASE("representations agree on their overlap") {
  int compared = 0;
  for (double eps : {0.5, 1.0, 2.0})
    for (double t = 1e-3; t <= 10.0; t *= 1.5) {
      if (!kernel_overlap_region(eps, t)) continue;
      ++compared;
      const double a = ball_kernel_center(eps, t), b = ball_kernel_center_images(eps, t);
      CHECK(std::abs(a - b) <= 1e-10 * a);
    }
  CHECK(compared > 20);
  // Outside the overlap the image sum is checked in 300-digit arithmetic.
  for (double t : {0.5, 2.0})
    CHECK(ball_kernel_center_multiprecision(1.0, t) == Approx(ball_kernel_center(1.0, t)).epsilon(1e-12));
}

TEST_CASE("Gaussian lower bound for the ball kernel") {
  const auto rows = lemma42_check(1.0, {1e-3, 0.1, 1.0, 10.0});
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) CHECK(r.pass);
  const double rhs = std::pow(4 * pi * 0.1, -1.5) * std::exp(-9 * pi * pi * 0.1 / 4);
  CHECK(rows[1].lhs == Approx(0.708655746614).epsilon(1e-12));
  CHECK(rows[1].rhs == Approx(rhs).epsilon(1e-14));
  CHECK(rows[1].rhs == Approx(0.07703).epsilon(1e-3));
  CHECK(rows[0].lhs * std::pow(4 * pi * 1e-3, 1.5) == Approx(1.0).epsilon(1e-12));
  CHECK(rows[0].rhs / rows[0].lhs == Approx(std::exp(-9 * pi * pi * 1e-3 / 4)).epsilon(1e-12));
  // Asymptotic ratio at t = 10, compared in log space.
  const double t = 10.0;
  const double log_ratio = (9 * pi * pi / 4 - pi * pi) * t + std::log(pi / 2) + 1.5 * std::log(4 * pi * t);
  CHECK(rows[3].log_lhs - rows[3].log_rhs == Approx(log_ratio).epsilon(1e-12));
  CHECK(rows[3].log_lhs > rows[3].log_rhs);
}

TEST_CASE("free-space heat evolution against the Gaussian convolution") {
  const Mask m = free_mask(0.0625, 1.6);
  const Grid3& g = m.grid;
  SceneSpec sc;
  sc.source = {{0, 0, 0}, 0.4};
  const SourceField f = make_source(sc, m);
  const double t = 0.1;
  const ScalarField z = heat_evolve(m, ObstacleBC::neumann, f.field, t, g.h * g.h / 3);
  for (double R : {0.0, 0.25, 0.5, 0.75}) {
    const double ref = gaussian_oracle(R, 0.4, t);
    CHECK(z[g.locate({R, 0, 0})] == Approx(ref).epsilon(0.02));
    CHECK(z[g.locate({0, -R, 0})] == Approx(ref).epsilon(0.02));
  }
}

TEST_CASE("positivity and mass") {
  const Mask m = ball_mask(32);
  SceneSpec sc;
  sc.source = {{-1.4, 0, 0}, 0.3};
  const SourceField f = make_source(sc, m);
  const double dt = m.grid.h * m.grid.h / 3;
  const double m0 = mass(f.field);
  double prev_d = m0;
  for (double t : {0.02, 0.05, 0.1}) {
    const ScalarField zd = heat_evolve(m, ObstacleBC::dirichlet, f.field, t, dt);
    const ScalarField zn = heat_evolve(m, ObstacleBC::neumann, f.field, t, dt);
    for (double x : zd.values) CHECK(x >= -1e-12);
    for (double x : zn.values) CHECK(x >= -1e-12);
    const double md = mass(zd);
    CHECK(md <= prev_d * (1 + 1e-12));
    prev_d = md;
    // Spread sqrt(4t) stays well inside the box.
    CHECK(mass(zn) == Approx(m0).epsilon(0.005));
  }
  ScalarField neg = f.field;
  neg[m.grid.locate({-1.4, 0, 0})] = -1e-3;
  CHECK_THROWS_AS(heat_evolve(m, ObstacleBC::neumann, neg, 0.1, dt), DomainError);
  CHECK_THROWS_AS(heat_evolve(m, ObstacleBC::neumann, f.field, 0.1, 0.2), DomainError);
}

TEST_CASE("Dirichlet evolution is dominated by Neumann") {
  const Mask m = ball_mask(32);
  SceneSpec sc;
  sc.source = {{-1.4, 0, 0}, 0.3};
  const SourceField f = make_source(sc, m);
  const double dt = m.grid.h * m.grid.h / 3;
  const DominationResult r = domination_check(m, f.field, 0.5, dt);
  CHECK(r.pass);
  CHECK(r.max_violation <= 1e-10 * r.scale);

  const Mask free = voxelize(sc, m.grid);
  const DominationResult same = domination_check(free, f.field, 0.2, dt);
  CHECK(same.max_violation == 0.0);
  CHECK(same.pass);

  ScalarField neg = f.field;
  neg[m.grid.locate({-1.4, 0, 0})] = -1.0;
  CHECK_THROWS_AS(domination_check(m, neg, 0.5, dt), DomainError);
}

TEST_CASE("Laplace-Gaussian identity") {
  const auto a = identity_quadrature(1.0, 2.0, 50.0);
  CHECK(a.closed_form == Approx(std::exp(-2.0) / (4 * pi)).epsilon(1e-15));
  CHECK(a.closed_form == Approx(0.0107695).epsilon(1e-5));
  CHECK(a.rel_err <= 1e-6);
  const auto b = identity_quadrature(0.5, 1.0, 50.0);
  CHECK(b.closed_form == Approx(0.0965227).epsilon(1e-5));
  CHECK(b.rel_err <= 1e-6);
  CHECK_THROWS_AS(identity_quadrature(1.0, 1.0, 10.0), DomainError);
  CHECK_THROWS_AS(identity_quadrature(0.0, 1.0, 50.0), DomainError);
}

TEST_CASE("truncation defect decays like exp(-tau^2 t_max)") {
  const double s = 1.0;
  for (double tau : {1.0, 2.0}) {
    const double t1 = 4.0 / (tau * tau), t2 = 8.0 / (tau * tau);
    const double d1 = identity_defect(s, tau, t1), d2 = identity_defect(s, tau, t2);
    CHECK(d1 > 0.0);
    CHECK(d2 > 0.0);
    CHECK(d1 == Approx(identity_tail(s, tau, t1)).epsilon(1e-6));
    // The tail integrand carries an extra t^{-3/2} factor.
    const double slope = std::log(d2 / d1) / (t2 - t1);
    CHECK(slope < -tau * tau);
    CHECK(slope > -1.3 * tau * tau);
  }
}
