#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

#include "encl/errors.hpp"
#include "encl/geometry.hpp"
#include "encl/verification.hpp"

using namespace encl;
using doctest::Approx;

namespace {

constexpr double kPi = std::numbers::pi;

Point3 ellipsoid_surface(const Vec3& axes, double theta, double phi) {
  return {axes.x * std::sin(theta) * std::cos(phi), axes.y * std::sin(theta) * std::sin(phi),
          axes.z * std::cos(theta)};
}

// Dense angular search, then a second dense search in a small patch around
// the best sample: 2 x 10^6 surface samples in total.
Point3 brute_force_closest(const Vec3& axes, const Point3& x) {
  double best = INFINITY, bt = 0, bp = 0;
  auto scan = [&](double t0, double t1, double p0, double p1) {
    const int n = 1000;
    double lbest = best, lt = bt, lp = bp;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        const double t = t0 + (t1 - t0) * (i + 0.5) / n;
        const double p = p0 + (p1 - p0) * (j + 0.5) / n;
        const double d = distance(ellipsoid_surface(axes, t, p), x);
        if (d < lbest) {
          lbest = d;
          lt = t;
          lp = p;
        }
      }
    best = lbest;
    bt = lt;
    bp = lp;
  };
  scan(0, kPi, -kPi, kPi);
  scan(bt - 0.01, bt + 0.01, bp - 0.01, bp + 0.01);
  return ellipsoid_surface(axes, bt, bp);
}

}  // namespace

TEST_CASE("detour constants") {
  CHECK(detour_constant(BallDetour{}) == Approx(std::sqrt(2.0) * std::sqrt(kPi * kPi / 16.0 + 1.0)).epsilon(1e-14));
  CHECK(detour_constant(BallDetour{}) == Approx(1.7982493014418692).epsilon(1e-14));
  CHECK(detour_constant(ConvexDetour{0.0}) == Approx(std::sqrt(2.0)).epsilon(1e-14));
  CHECK(detour_constant(ConvexDetour{-0.5}) == Approx(2.0 * std::sqrt(2.0)).epsilon(1e-14));
  CHECK_THROWS_AS(detour_constant(ConvexDetour{-1.0}), DomainError);
  CHECK_THROWS_AS(detour_constant(ConvexDetour{0.1}), DomainError);
}

TEST_CASE("projection onto a ball is radial") {
  const auto ball = ConvexBodySpec::ball({0, 0, 0}, 1.0);
  const Projection p = project_convex(ball, {3, 0, 0});
  CHECK(p.q.x == Approx(1.0));
  CHECK(p.q.y == Approx(0.0));
  CHECK(p.nu.x == Approx(1.0));
  CHECK_THROWS_AS(project_convex(ball, {0.5, 0, 0}), DomainError);
  CHECK_THROWS_AS(project_convex(ball, {1.0, 0, 0}), DomainError);
}

TEST_CASE("projection onto an ellipsoid") {
  const Vec3 axes{2, 1, 1};
  const auto e = ConvexBodySpec::ellipsoid({0, 0, 0}, axes);
  const Projection on_axis = project_convex(e, {5, 0, 0});
  CHECK(on_axis.q.x == Approx(2.0).epsilon(1e-12));
  CHECK(on_axis.nu.x == Approx(1.0).epsilon(1e-12));

  const Point3 x{3, 2, 0};
  const Projection p = project_convex(e, x);
  const Point3 ref = brute_force_closest(axes, x);
  CHECK(distance(p.q, ref) <= 1e-3);
  CHECK(distance(x, p.q) <= distance(x, ref) + 1e-12);
  // Normal is the normalized gradient of the level function.
  const Vec3 grad = normalized({p.q.x / 4.0, p.q.y, p.q.z});
  CHECK(dot(grad, p.nu) == Approx(1.0).epsilon(1e-10));
}

TEST_CASE("projection is idempotent along the normal") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1, 1);
  const auto e = ConvexBodySpec::ellipsoid({0.3, -0.2, 0.1}, {1.5, 0.7, 1.1});
  for (int n = 0; n < 200; ++n) {
    Point3 x{4 * u(rng), 4 * u(rng), 4 * u(rng)};
    if (e.contains(x)) continue;
    const Projection p = project_convex(e, x);
    for (double s : {1e-3, 0.1, 2.0}) {
      const Projection p2 = project_convex(e, p.q + s * p.nu);
      CHECK(distance(p2.q, p.q) <= 1e-9);
    }
  }
}

TEST_CASE("cone region membership") {
  const auto d0 = ConvexBodySpec::ball({0, 0, 0}, 1.0);
  const BallSpec b{{-3, 0, 0}, 0.1};
  CHECK(cone_contains(0.0, d0, b, {-3, 1, 0}));
  CHECK_FALSE(cone_contains(0.0, d0, b, {3, 0, 0}));
  CHECK(cone_contains(-1.0 + 1e-9, d0, b, {3, 0, 0}));
  CHECK(cone_contains(-1.0 + 1e-9, d0, b, {0, 2, 0}));
}

TEST_CASE("ball detour examples") {
  const BallSpec u{{0, 0, 0}, 1.0};
  const auto body = ConvexBodySpec::from(u);
  const double c = detour_constant(BallDetour{});

  const DetourArc visible = detour_arc_ball(u, {2, 0, 0}, {3, 0, 0});
  CHECK(visible.exact_length == Approx(1.0));

  const Point3 x{0, 0, 2}, y{0, 0.5, -3};
  const DetourArc arc = detour_arc_ball(u, x, y);
  CHECK(arc.exact_length <= c * distance(x, y) + 1e-12);
  CHECK(arc.exact_length >= distance(x, y));
  double m = INFINITY;
  for (const Point3& z : arc.sample(1000)) m = std::min(m, signed_distance(body, z));
  CHECK(m >= -1e-9);
  CHECK(distance(arc.start(), x) < 1e-12);
  CHECK(distance(arc.end(), y) < 1e-12);
  // The voxel shortest path is a near-geodesic: no longer than any
  // admissible arc beyond its lattice distortion.
  const VoxelGeodesic geo(std::span<const ConvexBodySpec>(&body, 1), 0.0, 0.05, x, std::vector<Point3>{y});
  const double g = geo.distance_to(y);
  CHECK(g <= arc.exact_length * 1.08 + 0.1);
  CHECK(g >= distance(x, y) - 0.1);

  CHECK(detour_arc_ball(u, {2, 1, 0}, {2, 1, 0}).exact_length == 0.0);
  CHECK_THROWS_AS(detour_arc_ball(u, {0.5, 0, 0}, {2, 0, 0}), DomainError);
}

TEST_CASE("ball detour length bound on random pairs") {
  const ArcSweepResult r = sweep_ball_arcs(20000, 3);
  CHECK(r.length_failures == 0);
  CHECK(r.clearance_failures == 0);
  CHECK(r.worst_ratio <= detour_constant(BallDetour{}) + 1e-9);
  CHECK(r.worst_ratio > 1.5);
}

TEST_CASE("convex detour examples") {
  const auto ball = ConvexBodySpec::ball({0, 0, 0}, 1.0);
  const DetourArc seg = detour_arc_convex(ball, 0.2, 0.0, {0, 0, 3}, {0, 0, 5});
  CHECK(seg.exact_length == Approx(2.0));
  CHECK(seg.pieces.size() == 1);

  const auto e = ConvexBodySpec::ellipsoid({0, 0, 0}, {2, 1, 1});
  // Normals e_x at (2,0,0) and e_y at (0,1,0): dot product 0.
  const Point3 x{2.5, 0, 0}, y{0, 1.5, 0};
  const DetourArc arc = detour_arc_convex(e, 0.3, 0.0, x, y);
  CHECK(arc.exact_length <= std::sqrt(2.0) * distance(x, y) + 1e-9);
  for (const Point3& z : arc.sample(1000)) CHECK(signed_distance(e, z) >= 0.3 - 1e-9);

  CHECK_THROWS_AS(detour_arc_convex(ball, 0.2, -0.5, {0, 0, 3}, {0, 0, -3}), DomainError);
  CHECK_THROWS_AS(detour_arc_convex(ball, 0.2, -1.0 + 1e-14, {0, 0, 3}, {0, 0, -3}), DomainError);
  CHECK_THROWS_AS(detour_arc_convex(ball, 0.5, 0.0, {0, 0, 1.2}, {0, 1.2, 0}), DomainError);
}

TEST_CASE("three-segment path can exceed the alpha = 0 bound") {
  // Prism-like corner: long ellipsoid, endpoints in front of two faces at
  // right angles and offset along the long axis.
  const auto e = ConvexBodySpec::ellipsoid({0, 0, 0}, {1, 1, 20});
  const Point3 x{1.2, 0, 0.5}, y{0, 1.2, 2.5};
  const double alpha = 0.0;
  const DetourArc three = detour_arc_convex_three_segment(e, 0.1, alpha, x, y);
  const DetourArc two = detour_arc_convex(e, 0.1, alpha, x, y);
  CHECK(three.exact_length > std::sqrt(2.0) * distance(x, y));
  CHECK(two.exact_length <= std::sqrt(2.0) * distance(x, y) + 1e-9);
  for (const Point3& z : two.sample(1000)) CHECK(signed_distance(e, z) >= 0.1 - 1e-9);
}

TEST_CASE("convex detour sweep") {
  for (double alpha : {0.0, -0.5}) {
    const ArcSweepResult r = sweep_convex_arcs(2000, alpha, 11);
    CHECK(r.length_failures == 0);
    CHECK(r.clearance_failures == 0);
  }
}

TEST_CASE("set distances") {
  const auto B = ConvexBodySpec::ball({-2.2, 0, 0}, 0.4);
  const auto D = ConvexBodySpec::ball({2.2, 0, 0}, 0.5);
  CHECK(dist_bodies(B, D) == Approx(3.5).epsilon(1e-14));
  CHECK(dist_bodies(B, B) == 0.0);
  CHECK(dist_bodies(D, B) == dist_bodies(B, D));
  CHECK(dist_bodies(B, ConvexBodySpec::ball({-1.5, 0, 0}, 0.3)) == 0.0);
  CHECK(dist_bodies(B, ConvexBodySpec::ball({-1.5, 0, 0}, 0.29)) == Approx(0.01));

  // Ball against ellipsoid: brute force over the ellipsoid surface.
  const Vec3 axes{1.5, 0.6, 0.9};
  const auto e = ConvexBodySpec::ellipsoid({0, 0, 0}, axes);
  const auto ball = ConvexBodySpec::ball({2.0, 1.5, 0.4}, 0.5);
  double brute = INFINITY;
  const int n = 1000;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Point3 s = ellipsoid_surface(axes, kPi * (i + 0.5) / n, 2 * kPi * (j + 0.5) / n);
      brute = std::min(brute, distance(s, ball.center) - 0.5);
    }
  CHECK(std::abs(dist_bodies(e, ball) - brute) <= 1e-3);
  CHECK(dist_bodies(ball, e) == Approx(dist_bodies(e, ball)).epsilon(1e-9));
  std::vector<ConvexBodySpec> a{B, e}, b{D};
  CHECK(dist_sets(a, b) == Approx(std::min(dist_bodies(B, D), dist_bodies(e, D))));
}

TEST_CASE("voxel geodesic") {
  const std::vector<ConvexBodySpec> none;
  const VoxelGeodesic free(none, 0.0, 0.1, {0, 0, 0}, std::vector<Point3>{{3, 0, 0}});
  CHECK(free.distance_to({3, 0, 0}) == Approx(3.0).epsilon(0.02));

  SceneSpec sc;
  sc.d0_bodies = {ConvexBodySpec::ball({0, 0, 0}, 1.0)};
  const Point3 x{-2, 0, 0}, y{2, 0, 0};
  const double g = geodesic_deps(sc, 0.0, 0.05, x, y);
  const double arc = detour_arc_ball({{0, 0, 0}, 1.0}, x, y).exact_length;
  CHECK(g >= distance(x, y));
  CHECK(g <= arc * 1.08);
  // Continuum value: two tangents of length sqrt(3) and a 60-degree arc.
  CHECK(g >= 2 * std::sqrt(3.0) + kPi / 3 - 2 * 0.05);

  const Point3 a{-2, 0.3, 0.2}, b{-1.5, 1.9, -0.4};
  CHECK(geodesic_deps(sc, 0.1, 0.05, a, b) >= distance(a, b) - 0.1);

  // Six balls whose eps-dilations seal off the origin.
  SceneSpec cage;
  for (int axis = 0; axis < 3; ++axis)
    for (double s : {-1.2, 1.2}) {
      Point3 c{0, 0, 0};
      c[axis] = s;
      cage.d0_bodies.push_back(ConvexBodySpec::ball(c, 0.8));
    }
  CHECK(std::isinf(geodesic_deps(cage, 0.3, 0.05, {0, 0, 0}, {3.5, 0, 0})));
}

TEST_CASE("ball sample points") {
  const BallSpec b{{1, 2, 3}, 0.5};
  const auto pts = ball_sample_points(b, 64);
  CHECK(pts.size() == 64);
  for (const auto& p : pts) CHECK(distance(p, b.center) <= 0.5 + 1e-12);
}

TEST_CASE("scene validation") {
  SceneSpec sc;
  sc.d0_bodies = {ConvexBodySpec::ball({0, 0, 0}, 1.0)};
  sc.source = {{-1.2, 0, 0}, 0.4};
  CHECK_THROWS_AS(sc.validate(), ConfigError);
  sc.source = {{-2.2, 0, 0}, 0.4};
  CHECK_NOTHROW(sc.validate());
  sc.d_bodies = {ConvexBodySpec::ball({1.2, 0, 0}, 0.5)};
  CHECK_THROWS_AS(sc.validate(), ConfigError);
}
