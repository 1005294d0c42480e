/// @file wavesim.cpp
#include "encl/wavesim.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "encl/errors.hpp"
#include "encl/linear_solver.hpp"

namespace encl {

namespace {

// Cells into the sponge, counted from its inner edge (0 outside the sponge).
std::vector<std::uint8_t> sponge_depth(const Grid3& g) {
  const int s = g.sponge_thickness;
  std::vector<std::uint8_t> depth(g.size(), 0);
  if (s == 0) return depth;
  for (int k = 0; k < g.dims[2]; ++k)
    for (int j = 0; j < g.dims[1]; ++j)
      for (int i = 0; i < g.dims[0]; ++i) {
        const int c[3] = {i, j, k};
        int d = 0;
        for (int a = 0; a < 3; ++a) d = std::max({d, s - c[a], c[a] - (g.dims[a] - 1 - s)});
        depth[g.index(i, j, k)] = static_cast<std::uint8_t>(std::min(d, 255));
      }
  return depth;
}

}  // namespace

SourceField make_source(const SceneSpec& scene, const Mask& mask) {
  const Grid3& g = mask.grid;
  const BallSpec& b = scene.source;
  if (2.0 * b.radius / g.h < 4.0)
    throw ConfigError("source ball B is resolved by fewer than 4 cells across its diameter");
  SourceField src{ScalarField(g), b.center, b.radius, scene.g_amplitude};
  // Cell means from a kSub^3 midpoint rule; the profile has a cone point at p.
  constexpr int kSub = 8;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (mask.labels[i] != Label::source_B) continue;
    const Point3 c = g.center(i);
    double acc = 0.0;
    for (int a = 0; a < kSub; ++a)
      for (int bb = 0; bb < kSub; ++bb)
        for (int cc = 0; cc < kSub; ++cc) {
          const Vec3 off{(a + 0.5) / kSub - 0.5, (bb + 0.5) / kSub - 0.5, (cc + 0.5) / kSub - 0.5};
          const double r = distance(c + g.h * off, b.center);
          if (r < b.radius) acc += (b.radius - r) * (b.radius - r);
        }
    src.field[i] = acc / (kSub * kSub * kSub) * scene.g_amplitude;
  }
  return src;
}

double cfl_dt(const Grid3& grid, double safety) {
  if (!(safety > 0.0 && safety <= 1.0)) throw DomainError("CFL safety factor must lie in (0, 1]");
  return safety * grid.h / std::sqrt(3.0);
}

double default_sponge_sigma(double width) { return width > 0.0 ? 10.0 / width : 0.0; }

WaveRecord run_wave(const SceneSpec& scene, const Mask& mask, const SourceField& source, double T,
                    bool include_D, const WaveOptions& opts) {
  const Grid3& g = mask.grid;
  if (!(T > 0.0)) throw DomainError("final time T must be positive");
  if (!(source.field.grid == g)) throw DomainError("source and mask grids differ");
  if (2.0 * scene.source.radius / g.h < 4.0)
    throw ConfigError("source ball B is resolved by fewer than 4 cells across its diameter");

  WaveRecord rec;
  if (opts.dt) {
    if (!(*opts.dt > 0.0)) throw DomainError("time step must be positive");
    rec.n_steps = static_cast<int>(std::ceil(T / *opts.dt - 1e-9));
  } else {
    rec.n_steps = static_cast<int>(std::ceil(T / cfl_dt(g, opts.cfl_safety)));
  }
  rec.n_steps = std::max(rec.n_steps, 1);
  rec.dt = T / rec.n_steps;
  const double dt = rec.dt;

  // Code-based Neumann stencil shared with the elliptic operator.
  const ShiftedLaplacian op(mask, include_D, ObstacleBC::neumann, 0.0, 1.0);
  const double inv_h2 = 1.0 / (g.h * g.h);
  const std::size_t n = g.size();
  const std::size_t sy = g.dims[0], sz = sy * g.dims[1];

  const int s = g.sponge_thickness;
  const double sigma_max =
      opts.sponge_sigma_max > 0.0 ? opts.sponge_sigma_max : default_sponge_sigma(s * g.h);
  const auto depth = sponge_depth(g);
  std::vector<double> c1(s + 2, 1.0), c2(s + 2, 1.0);
  for (int d = 1; d <= s + 1 && s > 0; ++d) {
    const double x = std::min(1.0, static_cast<double>(d) / s);
    const double sd = 0.5 * sigma_max * x * x * dt;
    c1[d] = 1.0 / (1.0 + sd);
    c2[d] = (1.0 - sd) / (1.0 + sd);
  }

  for (std::size_t i = 0; i < n; ++i)
    if (mask.labels[i] == Label::source_B) rec.b_cells.push_back(i);
  const std::size_t nb = rec.b_cells.size();
  rec.u_on_B.assign(static_cast<std::size_t>(rec.n_steps + 1) * nb, 0.0);

  // u holds step n, prev holds step n-1 and is overwritten by step n+1.
  std::vector<double> u(n, 0.0), prev(n, 0.0);
  double fmax = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!op.unknown(i)) continue;
    u[i] = dt * source.field[i];
    fmax = std::max(fmax, std::abs(source.field[i]));
  }
  // Third-order Taylor start u1 = dt f + dt^3/6 Lap f.
  {
    std::vector<double> lap_f(n, 0.0);
    op.laplacian(source.field.values, lap_f);
    for (std::size_t i = 0; i < n; ++i) u[i] += dt * dt * dt / 6.0 * lap_f[i];
  }
  const double blowup = 1e6 * std::max(dt * fmax, 1e-300);
  auto record = [&](int step) {
    double* row = rec.u_on_B.data() + static_cast<std::size_t>(step) * nb;
    for (std::size_t c = 0; c < nb; ++c) row[c] = u[rec.b_cells[c]];
  };
  record(1);

  // Staggered energy from steps n (a) and n+1 (b).
  auto energy = [&](std::span<const double> a, std::span<const double> b, double t) {
    EnergySample e{t, 0.0, 0.0};
    const double h3 = g.cell_volume();
    for (int k = 1; k < g.dims[2] - 1; ++k)
      for (int j = 1; j < g.dims[1] - 1; ++j)
        for (int i = 1; i < g.dims[0] - 1; ++i) {
          const std::size_t c = g.index(i, j, k);
          if (!op.unknown(c)) continue;
          const double v = (b[c] - a[c]) / dt;
          double pot = 0.0;
          for (std::size_t nbr : {c - 1, c + 1, c - sy, c + sy, c - sz, c + sz}) {
            if (mask.is_solid(nbr, include_D)) continue;
            // Faces shared by two unknowns are visited twice.
            const double w = op.unknown(nbr) ? 0.5 : 1.0;
            pot += w * (b[c] - b[nbr]) * (a[c] - a[nbr]);
          }
          const double local = 0.5 * v * v * h3 + 0.5 * pot * g.h;
          e.total += local;
          if (depth[c] == 0) e.inner += local;
        }
    return e;
  };
  if (opts.track_energy) rec.energy.push_back(energy(prev, u, 0.5 * dt));

  const double dt2 = dt * dt;
  for (int step = 1; step < rec.n_steps; ++step) {
    for (int k = 1; k < g.dims[2] - 1; ++k)
      for (int j = 1; j < g.dims[1] - 1; ++j) {
        const std::size_t row = g.index(0, j, k);
        for (int i = 1; i < g.dims[0] - 1; ++i) {
          const std::size_t c = row + i;
          const int code = op.open_faces(c);
          if (code < 0) continue;
          const double lap =
              inv_h2 * (u[c - 1] + u[c + 1] + u[c - sy] + u[c + sy] + u[c - sz] + u[c + sz] - code * u[c]);
          const int d = depth[c];
          prev[c] = c1[d] * (2.0 * u[c] + dt2 * lap) - c2[d] * prev[c];
        }
      }
    if (opts.track_energy && (step % std::max(1, opts.energy_stride) == 0 || step + 1 == rec.n_steps))
      rec.energy.push_back(energy(u, prev, (step + 0.5) * dt));
    u.swap(prev);
    record(step + 1);
    if (opts.on_step) opts.on_step(step + 1, (step + 1) * dt, u);
    if (step % 8 == 0 || step + 1 == rec.n_steps) {
      double m = 0.0;
      for (double x : u) m = std::max(m, std::abs(x));
      if (!(m <= blowup)) {
        std::ostringstream os;
        os << "FDTD instability at step " << step + 1 << " (t = " << (step + 1) * dt
           << "): max |u| = " << m << " exceeds 1e6 x initial scale; dt = " << dt
           << ", CFL limit h/sqrt(3) = " << g.h / std::sqrt(3.0);
        throw SolverError(os.str());
      }
    }
  }

  rec.u_final = ScalarField(g);
  rec.ut_final = ScalarField(g);
  rec.u_final.values = u;
  // Central difference in time around step N.
  for (int k = 1; k < g.dims[2] - 1; ++k)
    for (int j = 1; j < g.dims[1] - 1; ++j)
      for (int i = 1; i < g.dims[0] - 1; ++i) {
        const std::size_t c = g.index(i, j, k);
        const int code = op.open_faces(c);
        if (code < 0) continue;
        const double lap =
            inv_h2 * (u[c - 1] + u[c + 1] + u[c - sy] + u[c + sy] + u[c - sz] + u[c + sz] - code * u[c]);
        const int d = depth[c];
        const double next = c1[d] * (2.0 * u[c] + dt2 * lap) - c2[d] * prev[c];
        rec.ut_final[c] = (next - prev[c]) / (2.0 * dt);
      }
  return rec;
}

void write_record_csv(const std::filesystem::path& path, const WaveRecord& record) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  out.precision(17);
  out << "step,time,cell_index,u\n";
  for (int n = 0; n <= record.n_steps; ++n)
    for (std::size_t c = 0; c < record.b_cells.size(); ++c)
      out << n << ',' << n * record.dt << ',' << record.b_cells[c] << ',' << record.at(n, c) << '\n';
}

}  // namespace encl
