/// @file geometry.hpp
/// @brief Convex bodies, closest-point projections, cone regions, detour arcs
///        around balls and convex bodies, set distances, and a voxel geodesic
///        oracle for the eps-exterior distance.
#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <variant>
#include <vector>

#include "encl/vec3.hpp"

namespace encl {

struct BallSpec {
  Point3 center;
  double radius = 1.0;
};

enum class BodyKind { ball, ellipsoid };

/// Ball or ellipsoid. Local coordinates are `orientation^T * (x - center)`,
/// so the columns of `orientation` are the body axes in world coordinates.
struct ConvexBodySpec {
  BodyKind kind = BodyKind::ball;
  Point3 center;
  Vec3 semi_axes{1, 1, 1};
  Mat3 orientation = Mat3::identity();

  static ConvexBodySpec ball(const Point3& c, double r);
  static ConvexBodySpec ellipsoid(const Point3& c, const Vec3& axes,
                                  const Mat3& rot = Mat3::identity());
  static ConvexBodySpec from(const BallSpec& b) { return ball(b.center, b.radius); }

  /// Throws DomainError on non-positive axes, unequal ball axes or a
  /// non-orthonormal / improper orientation.
  void validate() const;

  /// Radius of a sphere around `center` enclosing the body.
  double bounding_radius() const;
  /// Quadratic level sum (x_i/a_i)^2 in local coordinates; < 1 strictly inside.
  double level(const Point3& x) const;
  bool contains(const Point3& x) const { return level(x) <= 1.0; }
};

struct SceneSpec {
  std::vector<ConvexBodySpec> d0_bodies;
  std::vector<ConvexBodySpec> d_bodies;
  BallSpec source;
  double g_amplitude = 1.0;

  bool has_d() const { return !d_bodies.empty(); }
  /// Checks body validity and pairwise positive gaps between B, D0 and D
  /// components. Throws ConfigError naming the violated condition.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Detour constants

struct BallDetour {};
struct ConvexDetour {
  double alpha = 0.0;
};
using DetourKind = std::variant<BallDetour, ConvexDetour>;

/// sqrt(2) * sqrt((pi/4)^2 + 1) for a ball, sqrt(2)/(1+alpha) for a convex
/// body with cone parameter alpha in ]-1, 0].
double detour_constant(const DetourKind& kind);

// ---------------------------------------------------------------------------
// Projections

struct Projection {
  Point3 q;  ///< closest surface point
  Vec3 nu;   ///< outward unit normal at q
};

/// Closest surface point of a convex body to an exterior point. Throws
/// DomainError when x lies inside or on the body.
Projection project_convex(const ConvexBodySpec& body, const Point3& x);

/// Closest point of the closed body to x (x itself when inside).
Point3 closest_point(const ConvexBodySpec& body, const Point3& x);

/// Exact Euclidean distance outside. Inside, a negative value whose magnitude
/// is a lower bound of the depth (exact for balls).
double signed_distance(const ConvexBodySpec& body, const Point3& x);

/// Minimum signed distance over a union of bodies (+inf for an empty union).
double signed_distance(std::span<const ConvexBodySpec> bodies, const Point3& x);

/// `n` deterministic quasi-uniform points filling the closed ball.
std::vector<Point3> ball_sample_points(const BallSpec& ball, int n);

/// Sampled membership test for the cone region V_alpha(B; D0): true iff the
/// normals at q(x) and q(y) have dot product >= alpha for every sample y in B.
bool cone_contains(double alpha, const ConvexBodySpec& d0, const BallSpec& source,
                   const Point3& x, int n_samples = 64);

// ---------------------------------------------------------------------------
// Detour arcs

struct Segment {
  Point3 a;
  Point3 b;
  double length() const { return distance(a, b); }
  Point3 at(double s) const { return a + s * (b - a); }
};

/// Piece of a great circle: center + radius * (cos(theta) e1 + sin(theta) e2)
/// for theta running from theta0 to theta1.
struct GreatCircleArc {
  Point3 center;
  double radius = 0.0;
  Vec3 e1;
  Vec3 e2;
  double theta0 = 0.0;
  double theta1 = 0.0;
  double length() const;
  Point3 at(double s) const;  ///< s in [0, 1]
};

using ArcPiece = std::variant<Segment, GreatCircleArc>;

struct DetourArc {
  std::vector<ArcPiece> pieces;
  double exact_length = 0.0;

  Point3 start() const;
  Point3 end() const;
  /// Roughly `n` points along the arc, every piece sampled including its endpoints.
  std::vector<Point3> sample(int n) const;
};

/// Arc from x to y avoiding the closed ball U with length at most
/// detour_constant(BallDetour{}) * |x - y|. Throws DomainError when an
/// endpoint lies in the closed ball.
DetourArc detour_arc_ball(const BallSpec& ball, const Point3& x, const Point3& y);

/// Arc from x to y inside the eps-exterior of a convex body, of length at
/// most sqrt(2)/(1+alpha) * |x - y|, for endpoints whose projection normals
/// satisfy nu_x . nu_y >= alpha. Visible pairs get the segment; otherwise two
/// segments lying in the tangent planes at x and y, meeting on their common
/// line at the point that makes the unfolded path straight.
DetourArc detour_arc_convex(const ConvexBodySpec& d0, double eps, double alpha,
                            const Point3& x, const Point3& y);

/// The same frame with the three-segment path x -> x + a t_x -> y - b t_y -> y.
/// Its length |a| + |b| + |c||t_x x t_y| can reach sqrt(3)/(1+alpha) |x - y|;
/// kept for comparison only.
DetourArc detour_arc_convex_three_segment(const ConvexBodySpec& d0, double eps, double alpha,
                                          const Point3& x, const Point3& y);

// ---------------------------------------------------------------------------
// Distances

/// Gap between two closed convex bodies; 0 when they intersect.
double dist_bodies(const ConvexBodySpec& a, const ConvexBodySpec& b);

/// Gap between two finite unions of convex bodies.
double dist_sets(std::span<const ConvexBodySpec> a, std::span<const ConvexBodySpec> b);

/// Single-source shortest paths on a 26-neighbour voxel lattice anchored at
/// `source`, restricted to nodes at distance >= eps from every obstacle.
class VoxelGeodesic {
 public:
  VoxelGeodesic(std::span<const ConvexBodySpec> obstacles, double eps, double h,
                const Point3& source, std::span<const Point3> extra_points = {});

  /// Path length to `y`: lattice distance to the nearest admissible node plus
  /// the straight offset. +inf if disconnected. Throws DomainError when no
  /// admissible node surrounds y.
  double distance_to(const Point3& y) const;

 private:
  std::int64_t node_index(int i, int j, int k) const;
  Point3 node_point(int i, int j, int k) const;

  Point3 anchor_;
  double h_;
  int lo_[3];
  int n_[3];
  std::vector<std::uint8_t> allowed_;
  std::vector<double> dist_;
};

/// Voxel approximation of d_eps(x, y) around the known obstacle D0 of `scene`.
double geodesic_deps(const SceneSpec& scene, double eps, double grid_h, const Point3& x,
                     const Point3& y);

}  // namespace encl
