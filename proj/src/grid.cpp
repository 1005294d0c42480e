/// @file grid.cpp
#include "encl/grid.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "json.hpp"

#include "encl/errors.hpp"

namespace encl {

namespace {

// Half-extent of a body's axis-aligned bounding box along world axis `a`.
double body_extent(const ConvexBodySpec& b, int a) {
  double s = 0.0;
  for (int c = 0; c < 3; ++c) s += b.orientation(a, c) * b.orientation(a, c) * b.semi_axes[c] * b.semi_axes[c];
  return std::sqrt(s);
}

template <class F>
void for_each_body(const SceneSpec& scene, F&& f) {
  for (const auto& b : scene.d0_bodies) f(b);
  for (const auto& b : scene.d_bodies) f(b);
  f(ConvexBodySpec::from(scene.source));
}

}  // namespace

std::array<int, 3> Grid3::ijk(std::size_t idx) const {
  const std::size_t nx = dims[0], ny = dims[1];
  return {static_cast<int>(idx % nx), static_cast<int>((idx / nx) % ny),
          static_cast<int>(idx / (nx * ny))};
}

Point3 Grid3::center(std::size_t idx) const {
  const auto c = ijk(idx);
  return center(c[0], c[1], c[2]);
}

std::size_t Grid3::locate(const Point3& x) const {
  int c[3];
  for (int a = 0; a < 3; ++a) {
    c[a] = static_cast<int>(std::floor((x[a] - origin[a]) / h));
    if (c[a] < 0 || c[a] >= dims[a]) throw DomainError("point outside the grid");
  }
  return index(c[0], c[1], c[2]);
}

void Grid3::validate() const {
  if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("grid spacing h must be positive");
  for (int a = 0; a < 3; ++a)
    if (dims[a] < 16) throw ConfigError("grid dimensions must each be >= 16");
  if (sponge_thickness < 0) throw ConfigError("sponge thickness must be non-negative");
  for (int a = 0; a < 3; ++a)
    if (2 * sponge_thickness + 2 >= dims[a]) throw ConfigError("sponge leaves no interior");
}

Grid3 Grid3::fit(const SceneSpec& scene, double h, int sponge_thickness, double clearance) {
  Point3 lo{1e300, 1e300, 1e300};
  Point3 hi{-1e300, -1e300, -1e300};
  for_each_body(scene, [&](const ConvexBodySpec& b) {
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], b.center[a] - body_extent(b, a));
      hi[a] = std::max(hi[a], b.center[a] + body_extent(b, a));
    }
  });
  Grid3 g;
  g.h = h;
  g.sponge_thickness = sponge_thickness;
  const Point3& p = scene.source.center;
  for (int a = 0; a < 3; ++a) {
    // Cells below / above the one centred on p.
    const int below = static_cast<int>(std::ceil((p[a] - (lo[a] - clearance)) / h - 0.5));
    const int above = static_cast<int>(std::ceil(((hi[a] + clearance) - p[a]) / h - 0.5));
    g.origin[a] = p[a] - (below + 0.5) * h;
    g.dims[a] = std::max(16, below + above + 1);
  }
  return g;
}

Label label_from_string(std::string_view name) {
  if (name == "exterior") return Label::exterior;
  if (name == "d0_solid") return Label::d0_solid;
  if (name == "d_solid") return Label::d_solid;
  if (name == "source_B") return Label::source_B;
  if (name == "sponge") return Label::sponge;
  throw DomainError("unknown cell label: " + std::string(name));
}

std::string_view to_string(Label label) {
  switch (label) {
    case Label::exterior: return "exterior";
    case Label::d0_solid: return "d0_solid";
    case Label::d_solid: return "d_solid";
    case Label::source_B: return "source_B";
    case Label::sponge: return "sponge";
  }
  throw DomainError("unknown cell label");
}

std::size_t Mask::count(Label label) const {
  return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), label));
}

std::vector<std::size_t> Mask::cells(Label label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) out.push_back(i);
  return out;
}

Mask voxelize(const SceneSpec& scene, const Grid3& grid) {
  grid.validate();
  const double need = (grid.sponge_thickness + 2) * grid.h;
  const Point3 bmax = grid.box_max();
  for_each_body(scene, [&](const ConvexBodySpec& b) {
    for (int a = 0; a < 3; ++a) {
      const double e = body_extent(b, a);
      if (b.center[a] - e - grid.origin[a] < need || bmax[a] - (b.center[a] + e) < need)
        throw ConfigError("scene body is closer than sponge_thickness*h + 2h to the grid boundary");
    }
  });

  Mask mask{grid, std::vector<Label>(grid.size(), Label::exterior)};
  const int s = grid.sponge_thickness;
  const auto& n = grid.dims;
  for (int k = 0; k < n[2]; ++k)
    for (int j = 0; j < n[1]; ++j)
      for (int i = 0; i < n[0]; ++i) {
        const std::size_t idx = grid.index(i, j, k);
        const bool shell = i < s || j < s || k < s || i >= n[0] - s || j >= n[1] - s ||
                           k >= n[2] - s || i == 0 || j == 0 || k == 0 || i == n[0] - 1 ||
                           j == n[1] - 1 || k == n[2] - 1;
        if (shell) {
          mask.labels[idx] = Label::sponge;
          continue;
        }
        const Point3 c = grid.center(i, j, k);
        Label l = Label::exterior;
        for (const auto& b : scene.d0_bodies)
          if (b.contains(c)) l = Label::d0_solid;
        if (l == Label::exterior)
          for (const auto& b : scene.d_bodies)
            if (b.contains(c)) l = Label::d_solid;
        if (l == Label::exterior && distance(c, scene.source.center) < scene.source.radius)
          l = Label::source_B;
        mask.labels[idx] = l;
      }
  return mask;
}

double integrate(const ScalarField& field, const Mask& mask, Label region) {
  if (static_cast<std::uint8_t>(region) > static_cast<std::uint8_t>(Label::sponge))
    throw DomainError("unknown region label");
  if (!(field.grid == mask.grid)) throw DomainError("field and mask grids differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < field.values.size(); ++i)
    if (mask.labels[i] == region) sum += field.values[i];
  return sum * mask.grid.cell_volume();
}

std::array<ScalarField, 3> gradient(const ScalarField& field, const Mask& mask, bool include_D) {
  const Grid3& g = field.grid;
  std::array<ScalarField, 3> out{ScalarField(g), ScalarField(g), ScalarField(g)};
  const std::size_t stride[3] = {1, static_cast<std::size_t>(g.dims[0]),
                                 static_cast<std::size_t>(g.dims[0]) * g.dims[1]};
  const double inv_h = 1.0 / g.h;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const std::size_t idx = g.index(i, j, k);
        if (mask.is_solid(idx, include_D)) continue;
        const int c[3] = {i, j, k};
        for (int a = 0; a < 3; ++a) {
          const bool has_lo = c[a] > 0 && !mask.is_solid(idx - stride[a], include_D);
          const bool has_hi = c[a] + 1 < g.dims[a] && !mask.is_solid(idx + stride[a], include_D);
          double d = 0.0;
          if (has_lo && has_hi)
            d = 0.5 * (field.values[idx + stride[a]] - field.values[idx - stride[a]]) * inv_h;
          else if (has_hi)
            d = (field.values[idx + stride[a]] - field.values[idx]) * inv_h;
          else if (has_lo)
            d = (field.values[idx] - field.values[idx - stride[a]]) * inv_h;
          out[a].values[idx] = d;
        }
      }
  return out;
}

void write_field(const std::filesystem::path& base, const ScalarField& field,
                 std::string_view name) {
  const auto& g = field.grid;
  nlohmann::json header = {
      {"name", name},
      {"dims", g.dims},
      {"origin", {g.origin.x, g.origin.y, g.origin.z}},
      {"h", g.h},
      {"sponge_thickness", g.sponge_thickness},
      {"dtype", "float64"},
      {"endianness", "little"},
      {"order", "x-fastest"},
  };
  std::filesystem::path bin = base;
  bin += ".bin";
  std::filesystem::path js = base;
  js += ".json";
  std::ofstream out(bin, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + bin.string());
  for (double v : field.values) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    out.write(reinterpret_cast<const char*>(&bits), sizeof bits);
  }
  std::ofstream(js) << header.dump(2) << '\n';
}

ScalarField read_field(const std::filesystem::path& base) {
  std::filesystem::path bin = base;
  bin += ".bin";
  std::filesystem::path js = base;
  js += ".json";
  std::ifstream hin(js);
  if (!hin) throw std::runtime_error("cannot open " + js.string());
  const auto header = nlohmann::json::parse(hin);
  Grid3 g;
  g.dims = header.at("dims").get<std::array<int, 3>>();
  const auto o = header.at("origin").get<std::array<double, 3>>();
  g.origin = {o[0], o[1], o[2]};
  g.h = header.at("h").get<double>();
  g.sponge_thickness = header.value("sponge_thickness", 0);
  ScalarField f(g);
  std::ifstream in(bin, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + bin.string());
  for (double& v : f.values) {
    std::uint64_t bits = 0;
    in.read(reinterpret_cast<char*>(&bits), sizeof bits);
    if constexpr (std::endian::native == std::endian::big) bits = __builtin_bswap64(bits);
    v = std::bit_cast<double>(bits);
  }
  if (!in) throw std::runtime_error("truncated field file " + bin.string());
  return f;
}

}  // namespace encl
