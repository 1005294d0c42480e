/// @file grid.hpp
/// @brief Uniform cell-centered voxel grid, cell classification, midpoint
///        quadrature, Neumann-aware gradients and flat binary field export.
#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "encl/geometry.hpp"

namespace encl {

/// Cell (i, j, k) covers origin + h*[i, i+1) x h*[j, j+1) x h*[k, k+1).
/// The outermost cell layer is held at zero by every PDE operator.
struct Grid3 {
  Point3 origin;
  double h = 0.0625;
  std::array<int, 3> dims{16, 16, 16};
  int sponge_thickness = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * dims[1] + j) * dims[0] + i;
  }
  std::array<int, 3> ijk(std::size_t idx) const;
  Point3 center(int i, int j, int k) const {
    return origin + h * Vec3{i + 0.5, j + 0.5, k + 0.5};
  }
  Point3 center(std::size_t idx) const;
  double cell_volume() const { return h * h * h; }
  Point3 box_max() const { return origin + h * Vec3{1.0 * dims[0], 1.0 * dims[1], 1.0 * dims[2]}; }
  /// Index of the cell containing x; throws DomainError when outside.
  std::size_t locate(const Point3& x) const;

  /// Throws ConfigError unless h > 0, every dimension >= 16 and the sponge
  /// leaves an interior.
  void validate() const;

  /// Smallest box around the scene with `clearance` on every side, shifted
  /// so that the source center falls on a cell center.
  static Grid3 fit(const SceneSpec& scene, double h, int sponge_thickness, double clearance);

  friend bool operator==(const Grid3&, const Grid3&) = default;
};

enum class Label : std::uint8_t { exterior = 0, d0_solid = 1, d_solid = 2, source_B = 3, sponge = 4 };

Label label_from_string(std::string_view name);
std::string_view to_string(Label label);

struct Mask {
  Grid3 grid;
  std::vector<Label> labels;

  Label at(std::size_t idx) const { return labels[idx]; }
  /// Solid for an operator that sees D0 only, or D0 and D.
  bool is_solid(std::size_t idx, bool include_D) const {
    const Label l = labels[idx];
    return l == Label::d0_solid || (include_D && l == Label::d_solid);
  }
  std::size_t count(Label label) const;
  /// Indices of all cells carrying `label`, ascending.
  std::vector<std::size_t> cells(Label label) const;
};

/// Per-cell values on a grid; solid cells hold 0 by convention.
struct ScalarField {
  Grid3 grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const Grid3& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}

  double& operator[](std::size_t i) { return values[i]; }
  double operator[](std::size_t i) const { return values[i]; }
};

/// Cell-center classification. Throws ConfigError if any body or B is closer
/// to the box boundary than sponge_thickness*h + 2h.
Mask voxelize(const SceneSpec& scene, const Grid3& grid);

/// Midpoint rule h^3 * sum over cells with the given label, in index order.
double integrate(const ScalarField& field, const Mask& mask, Label region);

/// Centered differences, one-sided next to solid cells or the box edge, zero
/// along an axis with no open neighbour. Solid cells get zero gradient.
std::array<ScalarField, 3> gradient(const ScalarField& field, const Mask& mask,
                                    bool include_D = true);

/// Writes `<base>.bin` (little-endian float64, x fastest) and `<base>.json`.
void write_field(const std::filesystem::path& base, const ScalarField& field,
                 std::string_view name);
ScalarField read_field(const std::filesystem::path& base);

}  // namespace encl
