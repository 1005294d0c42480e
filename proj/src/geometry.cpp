/// @file geometry.cpp
#include "encl/geometry.hpp"

#include <algorithm>
#include <optional>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <sstream>

#include "encl/errors.hpp"

namespace encl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vec3 to_local(const ConvexBodySpec& b, const Point3& x) {
  return b.orientation.apply_transpose(x - b.center);
}
Point3 to_world(const ConvexBodySpec& b, const Vec3& y) {
  return b.center + b.orientation.apply(y);
}

// Root t >= 0 of sum_i (a_i y_i / (a_i^2 + t))^2 = 1 for a local point y
// outside the ellipsoid. The function is strictly decreasing in t.
double ellipsoid_multiplier(const Vec3& a, const Vec3& y) {
  auto F = [&](double t, double* dF) {
    double f = -1.0;
    double d = 0.0;
    for (int i = 0; i < 3; ++i) {
      const double den = a[i] * a[i] + t;
      const double r = a[i] * y[i] / den;
      f += r * r;
      d += -2.0 * r * r / den;
    }
    if (dF) *dF = d;
    return f;
  };
  double lo = 0.0;
  double hi = norm(y) * std::max({a.x, a.y, a.z});
  double t = 0.5 * (lo + hi);
  for (int it = 0; it < 200; ++it) {
    double dF = 0.0;
    const double f = F(t, &dF);
    if (f > 0.0) lo = t; else hi = t;
    if (std::abs(f) < 1e-15 || hi - lo <= 1e-16 * std::max(1.0, hi)) break;
    double tn = t - f / dF;
    if (!(tn > lo && tn < hi)) tn = 0.5 * (lo + hi);
    t = tn;
  }
  return t;
}

Projection project_ellipsoid(const ConvexBodySpec& b, const Point3& x) {
  const Vec3 y = to_local(b, x);
  const Vec3& a = b.semi_axes;
  const double t = ellipsoid_multiplier(a, y);
  Vec3 q;
  Vec3 grad;
  for (int i = 0; i < 3; ++i) {
    q[i] = a[i] * a[i] * y[i] / (a[i] * a[i] + t);
    grad[i] = q[i] / (a[i] * a[i]);
  }
  return {to_world(b, q), normalized(b.orientation.apply(grad))};
}

// Van der Corput radical inverse in base 2.
double radical_inverse2(std::uint32_t i) {
  std::uint32_t bits = i;
  bits = (bits << 16u) | (bits >> 16u);
  bits = ((bits & 0x55555555u) << 1u) | ((bits & 0xAAAAAAAAu) >> 1u);
  bits = ((bits & 0x33333333u) << 2u) | ((bits & 0xCCCCCCCCu) >> 2u);
  bits = ((bits & 0x0F0F0F0Fu) << 4u) | ((bits & 0xF0F0F0F0u) >> 4u);
  bits = ((bits & 0x00FF00FFu) << 8u) | ((bits & 0xFF00FF00u) >> 8u);
  return static_cast<double>(bits) * 2.3283064365386963e-10;
}

ArcPiece reversed(const ArcPiece& p) {
  if (const auto* s = std::get_if<Segment>(&p)) return Segment{s->b, s->a};
  auto g = std::get<GreatCircleArc>(p);
  std::swap(g.theta0, g.theta1);
  return g;
}

double piece_length(const ArcPiece& p) {
  return std::visit([](const auto& q) { return q.length(); }, p);
}
Point3 piece_at(const ArcPiece& p, double s) {
  return std::visit([s](const auto& q) { return q.at(s); }, p);
}

DetourArc make_arc(std::vector<ArcPiece> pieces) {
  DetourArc arc;
  arc.pieces = std::move(pieces);
  for (const auto& p : arc.pieces) arc.exact_length += piece_length(p);
  return arc;
}

DetourArc straight(const Point3& x, const Point3& y) { return make_arc({Segment{x, y}}); }

// Distance from point c to the segment [a, b].
double point_segment_distance(const Point3& c, const Point3& a, const Point3& b) {
  const Vec3 d = b - a;
  const double dd = dot(d, d);
  double s = dd > 0.0 ? dot(c - a, d) / dd : 0.0;
  s = std::clamp(s, 0.0, 1.0);
  return distance(c, a + s * d);
}

}  // namespace

// ---------------------------------------------------------------------------

ConvexBodySpec ConvexBodySpec::ball(const Point3& c, double r) {
  return {BodyKind::ball, c, {r, r, r}, Mat3::identity()};
}

ConvexBodySpec ConvexBodySpec::ellipsoid(const Point3& c, const Vec3& axes, const Mat3& rot) {
  return {BodyKind::ellipsoid, c, axes, rot};
}

void ConvexBodySpec::validate() const {
  if (!is_finite(center)) throw DomainError("body center must be finite");
  for (int i = 0; i < 3; ++i) {
    if (!(semi_axes[i] > 0.0) || !std::isfinite(semi_axes[i]))
      throw DomainError("body semi-axes must be positive and finite");
  }
  if (kind == BodyKind::ball &&
      (semi_axes.x != semi_axes.y || semi_axes.x != semi_axes.z))
    throw DomainError("ball semi-axes must be equal");
  const Mat3& R = orientation;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += R(k, r) * R(k, c);
      if (std::abs(s - (r == c ? 1.0 : 0.0)) > 1e-12)
        throw DomainError("body orientation must be orthonormal");
    }
  }
  const double det = R(0, 0) * (R(1, 1) * R(2, 2) - R(1, 2) * R(2, 1)) -
                     R(0, 1) * (R(1, 0) * R(2, 2) - R(1, 2) * R(2, 0)) +
                     R(0, 2) * (R(1, 0) * R(2, 1) - R(1, 1) * R(2, 0));
  if (std::abs(det - 1.0) > 1e-12) throw DomainError("body orientation must have det = +1");
}

double ConvexBodySpec::bounding_radius() const {
  return std::max({semi_axes.x, semi_axes.y, semi_axes.z});
}

double ConvexBodySpec::level(const Point3& x) const {
  const Vec3 y = to_local(*this, x);
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += (y[i] / semi_axes[i]) * (y[i] / semi_axes[i]);
  return s;
}

void SceneSpec::validate() const {
  if (!(source.radius > 0.0) || !is_finite(source.center))
    throw ConfigError("source ball B must have positive radius and finite center");
  if (!(g_amplitude > 0.0) || !std::isfinite(g_amplitude))
    throw ConfigError("source amplitude g must be positive");
  auto check_bodies = [](const std::vector<ConvexBodySpec>& v, const char* name) {
    for (const auto& b : v) {
      try {
        b.validate();
      } catch (const DomainError& e) {
        throw ConfigError(std::string(name) + ": " + e.what());
      }
    }
  };
  check_bodies(d0_bodies, "D0");
  check_bodies(d_bodies, "D");
  const auto b = ConvexBodySpec::from(source);
  auto gap = [](const ConvexBodySpec& p, const ConvexBodySpec& q, const std::string& what) {
    if (!(dist_bodies(p, q) > 0.0))
      throw ConfigError("closures of " + what + " must be disjoint with a positive gap");
  };
  for (std::size_t i = 0; i < d0_bodies.size(); ++i) {
    gap(b, d0_bodies[i], "B and D0[" + std::to_string(i) + "]");
    for (std::size_t j = i + 1; j < d0_bodies.size(); ++j)
      gap(d0_bodies[i], d0_bodies[j],
          "D0[" + std::to_string(i) + "] and D0[" + std::to_string(j) + "]");
  }
  for (std::size_t i = 0; i < d_bodies.size(); ++i) {
    gap(b, d_bodies[i], "B and D[" + std::to_string(i) + "]");
    for (std::size_t j = 0; j < d0_bodies.size(); ++j)
      gap(d_bodies[i], d0_bodies[j],
          "D[" + std::to_string(i) + "] and D0[" + std::to_string(j) + "]");
    for (std::size_t j = i + 1; j < d_bodies.size(); ++j)
      gap(d_bodies[i], d_bodies[j],
          "D[" + std::to_string(i) + "] and D[" + std::to_string(j) + "]");
  }
}

// ---------------------------------------------------------------------------

double detour_constant(const DetourKind& kind) {
  if (std::holds_alternative<BallDetour>(kind)) {
    constexpr double q = std::numbers::pi / 4.0;
    return std::numbers::sqrt2 * std::sqrt(q * q + 1.0);
  }
  const double alpha = std::get<ConvexDetour>(kind).alpha;
  if (!(alpha > -1.0 && alpha <= 0.0))
    throw DomainError("cone parameter alpha must lie in ]-1, 0]");
  return std::numbers::sqrt2 / (1.0 + alpha);
}

Projection project_convex(const ConvexBodySpec& body, const Point3& x) {
  if (!is_finite(x)) throw DomainError("projection point must be finite");
  if (body.contains(x)) throw DomainError("projection point lies inside or on the body");
  if (body.kind == BodyKind::ball) {
    const Vec3 nu = normalized(x - body.center);
    return {body.center + body.semi_axes.x * nu, nu};
  }
  return project_ellipsoid(body, x);
}

Point3 closest_point(const ConvexBodySpec& body, const Point3& x) {
  if (body.contains(x)) return x;
  return project_convex(body, x).q;
}

double signed_distance(const ConvexBodySpec& body, const Point3& x) {
  if (body.kind == BodyKind::ball) return distance(x, body.center) - body.semi_axes.x;
  const double g = body.level(x);
  if (g > 1.0) return distance(x, project_ellipsoid(body, x).q);
  const double amin = std::min({body.semi_axes.x, body.semi_axes.y, body.semi_axes.z});
  return -(1.0 - std::sqrt(g)) * amin;
}

double signed_distance(std::span<const ConvexBodySpec> bodies, const Point3& x) {
  double d = kInf;
  for (const auto& b : bodies) d = std::min(d, signed_distance(b, x));
  return d;
}

std::vector<Point3> ball_sample_points(const BallSpec& ball, int n) {
  if (n <= 0) throw DomainError("sample count must be positive");
  std::vector<Point3> pts;
  pts.reserve(static_cast<std::size_t>(n));
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * i;
    const double r = ball.radius * std::cbrt(radical_inverse2(static_cast<std::uint32_t>(i)) + 0.5 / n);
    const Vec3 dir{rho * std::cos(phi), rho * std::sin(phi), z};
    pts.push_back(ball.center + std::min(r, ball.radius) * dir);
  }
  return pts;
}

bool cone_contains(double alpha, const ConvexBodySpec& d0, const BallSpec& source,
                   const Point3& x, int n_samples) {
  const Vec3 nx = project_convex(d0, x).nu;
  for (const auto& y : ball_sample_points(source, n_samples)) {
    if (dot(nx, project_convex(d0, y).nu) < alpha) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

double GreatCircleArc::length() const { return radius * std::abs(theta1 - theta0); }

Point3 GreatCircleArc::at(double s) const {
  const double th = theta0 + s * (theta1 - theta0);
  return center + radius * (std::cos(th) * e1 + std::sin(th) * e2);
}

Point3 DetourArc::start() const { return piece_at(pieces.front(), 0.0); }
Point3 DetourArc::end() const { return piece_at(pieces.back(), 1.0); }

std::vector<Point3> DetourArc::sample(int n) const {
  std::vector<Point3> out;
  const double total = std::max(exact_length, 1e-300);
  for (const auto& p : pieces) {
    const int m = std::max(2, static_cast<int>(std::ceil(n * piece_length(p) / total)));
    for (int i = 0; i < m; ++i) out.push_back(piece_at(p, static_cast<double>(i) / (m - 1)));
  }
  return out;
}

DetourArc detour_arc_ball(const BallSpec& ball, const Point3& x_in, const Point3& y_in) {
  const Point3& xi = ball.center;
  if (distance(x_in, xi) <= ball.radius || distance(y_in, xi) <= ball.radius)
    throw DomainError("detour endpoints must lie outside the closed ball");
  if (x_in == y_in) return make_arc({Segment{x_in, x_in}});

  // Work with x the endpoint closer to the sphere; reverse at the end.
  const bool swapped = distance(x_in, xi) > distance(y_in, xi);
  const Point3& x = swapped ? y_in : x_in;
  const Point3& y = swapped ? x_in : y_in;

  const double R = distance(x, xi);
  const Vec3 n = (x - xi) / R;
  const Vec3 dy = y - xi;
  const double s = dot(dy, n);
  Vec3 perp = dy - s * n;
  double rho = norm(perp);
  const Vec3 e = rho > 1e-14 * norm(dy) ? perp / rho : any_orthogonal(n);
  if (!(rho > 1e-14 * norm(dy))) rho = 0.0;

  std::vector<ArcPiece> pieces;
  if (s >= 0.0) {
    if (point_segment_distance(xi, x, y) > ball.radius) {
      pieces.push_back(Segment{x, y});
    } else {
      // Two legs along e then along n; both stay at distance >= min(R, |y - xi|).
      const Point3 corner = xi + R * n + rho * e;
      pieces.push_back(Segment{x, corner});
      pieces.push_back(Segment{corner, y});
    }
  } else {
    // Quarter meridian from x to the equator point x0, then the right-angled
    // path x0 -> y'' -> y.
    const Point3 x0 = xi + R * e;
    const Point3 ypp = xi + s * n + R * e;
    pieces.push_back(GreatCircleArc{xi, R, n, e, 0.0, std::numbers::pi / 2.0});
    pieces.push_back(Segment{x0, ypp});
    pieces.push_back(Segment{ypp, y});
  }
  if (swapped) {
    std::reverse(pieces.begin(), pieces.end());
    for (auto& p : pieces) p = reversed(p);
  }
  return make_arc(std::move(pieces));
}

namespace {

// Decomposition y - x = a t_x + b t_y + c t_x x t_y with t_x, t_y the unit
// tangents in the plane of the two normals; nullopt for the straight case.
struct TangentFrame {
  Vec3 tx, ty;
  double a, b, m;  // m: signed length c |t_x x t_y| along the edge line
};

std::optional<TangentFrame> tangent_frame(const ConvexBodySpec& d0, double eps, double alpha,
                                          const Point3& x, const Point3& y) {
  if (!(alpha > -1.0 && alpha <= 0.0))
    throw DomainError("cone parameter alpha must lie in ]-1, 0]");
  if (!(eps > 0.0)) throw DomainError("eps must be positive");
  const Projection px = project_convex(d0, x);
  const Projection py = project_convex(d0, y);
  const double tol = 1e-12 * std::max(1.0, eps);
  if (distance(x, px.q) < eps - tol || distance(y, py.q) < eps - tol)
    throw DomainError("detour endpoints must lie at distance >= eps from the body");
  const double c = dot(px.nu, py.nu);
  if (c < alpha - 1e-12) throw DomainError("cone condition nu_x . nu_y >= alpha violated");
  if (x == y) return std::nullopt;
  const Vec3 d = y - x;
  if (dot(d, px.nu) >= 0.0 || dot(-d, py.nu) >= 0.0) return std::nullopt;

  const double s2 = 1.0 - c * c;
  if (1.0 + c <= 1e-12 || s2 <= 1e-24)
    throw DomainError("degenerate decomposition: projection normals are (anti-)parallel");
  const double s = std::sqrt(s2);
  TangentFrame f;
  f.tx = (py.nu - c * px.nu) / s;
  f.ty = (px.nu - c * py.nu) / s;
  // Gram system of (tx, ty), whose inner product is -c.
  const double p = dot(d, f.tx);
  const double q = dot(d, f.ty);
  f.a = (p + c * q) / s2;
  f.b = (q + c * p) / s2;
  f.m = dot(d, cross(f.tx, f.ty)) / s;
  return f;
}

}  // namespace

DetourArc detour_arc_convex(const ConvexBodySpec& d0, double eps, double alpha,
                            const Point3& x, const Point3& y) {
  const auto f = tangent_frame(d0, eps, alpha, x, y);
  if (!f) return x == y ? make_arc({Segment{x, x}}) : straight(x, y);
  // x + a t_x and y - b t_y are the feet of x and y on the edge line of the
  // two tangent planes; bend once on that line where the unfolded path is straight.
  const Point3 foot_x = x + f->a * f->tx;
  const Point3 foot_y = y - f->b * f->ty;
  const double lambda = std::abs(f->a) / (std::abs(f->a) + std::abs(f->b));
  const Point3 z = foot_x + lambda * (foot_y - foot_x);
  return make_arc({Segment{x, z}, Segment{z, y}});
}

DetourArc detour_arc_convex_three_segment(const ConvexBodySpec& d0, double eps, double alpha,
                                          const Point3& x, const Point3& y) {
  const auto f = tangent_frame(d0, eps, alpha, x, y);
  if (!f) return x == y ? make_arc({Segment{x, x}}) : straight(x, y);
  const Point3 c1 = x + f->a * f->tx;
  const Point3 c2 = y - f->b * f->ty;
  return make_arc({Segment{x, c1}, Segment{c1, c2}, Segment{c2, y}});
}

// ---------------------------------------------------------------------------

double dist_bodies(const ConvexBodySpec& a, const ConvexBodySpec& b) {
  if (a.kind == BodyKind::ball && b.kind == BodyKind::ball) {
    const double g = distance(a.center, b.center) - (a.semi_axes.x + b.semi_axes.x);
    return g <= 1e-12 * std::max(1.0, a.semi_axes.x + b.semi_axes.x) ? 0.0 : g;
  }
  // Alternating closest-point projection between the two closed bodies.
  const double scale = std::max({1.0, a.bounding_radius(), b.bounding_radius()});
  Point3 x = a.center;
  Point3 y = closest_point(b, x);
  for (int it = 0; it < 20000; ++it) {
    const Point3 xn = closest_point(a, y);
    if (xn == y) return 0.0;
    const Point3 yn = closest_point(b, xn);
    const double moved = distance(xn, x) + distance(yn, y);
    x = xn;
    y = yn;
    if (moved <= 1e-15 * scale) break;
  }
  const double g = distance(x, y);
  return g <= 1e-12 * scale ? 0.0 : g;
}

double dist_sets(std::span<const ConvexBodySpec> a, std::span<const ConvexBodySpec> b) {
  double best = kInf;
  for (const auto& p : a)
    for (const auto& q : b) best = std::min(best, dist_bodies(p, q));
  return best;
}

// ---------------------------------------------------------------------------

VoxelGeodesic::VoxelGeodesic(std::span<const ConvexBodySpec> obstacles, double eps, double h,
                             const Point3& source, std::span<const Point3> extra_points)
    : anchor_(source), h_(h) {
  if (!(h > 0.0) || !(eps >= 0.0)) throw DomainError("geodesic lattice needs h > 0, eps >= 0");
  if (signed_distance(obstacles, source) < eps)
    throw DomainError("geodesic source lies inside the forbidden eps-neighbourhood");
  Point3 lo = source;
  Point3 hi = source;
  auto grow = [&](const Point3& p, double r) {
    for (int i = 0; i < 3; ++i) {
      lo[i] = std::min(lo[i], p[i] - r);
      hi[i] = std::max(hi[i], p[i] + r);
    }
  };
  for (const auto& p : extra_points) grow(p, 0.0);
  for (const auto& b : obstacles) grow(b.center, b.bounding_radius() + eps);
  const double margin = std::max(1.0, 4.0 * h) + eps;
  std::int64_t total = 1;
  for (int i = 0; i < 3; ++i) {
    lo_[i] = static_cast<int>(std::floor((lo[i] - margin - source[i]) / h));
    const int up = static_cast<int>(std::ceil((hi[i] + margin - source[i]) / h));
    n_[i] = up - lo_[i] + 1;
    total *= n_[i];
  }
  if (total > 200'000'000) throw DomainError("geodesic lattice too large; increase grid_h");
  allowed_.assign(static_cast<std::size_t>(total), 0);
  for (int k = 0; k < n_[2]; ++k)
    for (int j = 0; j < n_[1]; ++j)
      for (int i = 0; i < n_[0]; ++i)
        allowed_[node_index(i, j, k)] =
            signed_distance(obstacles, node_point(i, j, k)) >= eps ? 1 : 0;

  dist_.assign(allowed_.size(), kInf);
  const std::int64_t s = node_index(-lo_[0], -lo_[1], -lo_[2]);
  allowed_[s] = 1;
  using Item = std::pair<double, std::int64_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
  dist_[s] = 0.0;
  pq.push({0.0, s});
  const std::int64_t sx = 1, sy = n_[0], sz = static_cast<std::int64_t>(n_[0]) * n_[1];
  while (!pq.empty()) {
    const auto [du, u] = pq.top();
    pq.pop();
    if (du > dist_[u]) continue;
    const int k = static_cast<int>(u / sz);
    const int j = static_cast<int>((u % sz) / sy);
    const int i = static_cast<int>(u % sy);
    for (int dk = -1; dk <= 1; ++dk)
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0 && dk == 0) continue;
          const int ii = i + di, jj = j + dj, kk = k + dk;
          if (ii < 0 || jj < 0 || kk < 0 || ii >= n_[0] || jj >= n_[1] || kk >= n_[2]) continue;
          const std::int64_t v = u + di * sx + dj * sy + dk * sz;
          if (!allowed_[v]) continue;
          const double w = h * std::sqrt(static_cast<double>(di * di + dj * dj + dk * dk));
          if (du + w < dist_[v]) {
            dist_[v] = du + w;
            pq.push({dist_[v], v});
          }
        }
  }
}

std::int64_t VoxelGeodesic::node_index(int i, int j, int k) const {
  return (static_cast<std::int64_t>(k) * n_[1] + j) * n_[0] + i;
}

Point3 VoxelGeodesic::node_point(int i, int j, int k) const {
  return anchor_ + h_ * Vec3{static_cast<double>(i + lo_[0]), static_cast<double>(j + lo_[1]),
                             static_cast<double>(k + lo_[2])};
}

double VoxelGeodesic::distance_to(const Point3& y) const {
  int base[3];
  for (int a = 0; a < 3; ++a) {
    base[a] = static_cast<int>(std::floor((y[a] - anchor_[a]) / h_)) - lo_[a];
    if (base[a] < 0 || base[a] + 1 >= n_[a])
      throw DomainError("geodesic query point outside the lattice");
  }
  double best = kInf;
  bool any = false;
  for (int c = 0; c < 8; ++c) {
    const int i = base[0] + (c & 1), j = base[1] + ((c >> 1) & 1), k = base[2] + ((c >> 2) & 1);
    const std::int64_t id = node_index(i, j, k);
    if (!allowed_[id]) continue;
    any = true;
    best = std::min(best, dist_[id] + distance(y, node_point(i, j, k)));
  }
  if (!any) throw DomainError("geodesic endpoint cell lies in the forbidden region");
  return best;
}

double geodesic_deps(const SceneSpec& scene, double eps, double grid_h, const Point3& x,
                     const Point3& y) {
  if (signed_distance(scene.d0_bodies, x) < eps || signed_distance(scene.d0_bodies, y) < eps)
    throw DomainError("geodesic endpoints must lie at distance >= eps from D0");
  const Point3 extra[] = {y};
  const VoxelGeodesic g(scene.d0_bodies, eps, grid_h, x, extra);
  return g.distance_to(y);
}

}  // namespace encl
