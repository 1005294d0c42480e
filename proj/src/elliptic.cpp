/// @file elliptic.cpp
#include "encl/elliptic.hpp"

#include <cmath>

#include "encl/errors.hpp"

namespace encl {

namespace {

void check_tau(const Grid3& g, double tau) {
  if (!(tau >= 0.5)) throw ConfigError("tau must be >= 0.5");
  if (tau * g.h > 0.5) throw ConfigError("tau*h must be <= 0.5 so the decay length spans two cells");
}

double energy_density_sum(const ScalarField& field, const Mask& mask, bool include_D, double tau,
                          bool (*keep)(Label)) {
  const auto grad = gradient(field, mask, include_D);
  double sum = 0.0;
  for (std::size_t i = 0; i < field.values.size(); ++i) {
    if (!keep(mask.labels[i])) continue;
    const double gx = grad[0][i], gy = grad[1][i], gz = grad[2][i], u = field[i];
    sum += gx * gx + gy * gy + gz * gz + tau * tau * u * u;
  }
  return sum * mask.grid.cell_volume();
}

}  // namespace

std::pair<LaplaceField, SolveStats> solve_modified_helmholtz(const Mask& mask, bool include_D,
                                                             const ScalarField& f, double tau,
                                                             const SolverOptions& opts) {
  const Grid3& g = mask.grid;
  check_tau(g, tau);
  if (!(f.grid == g)) throw DomainError("source and mask grids differ");
  const ShiftedLaplacian op(mask, include_D, ObstacleBC::neumann, tau * tau, 1.0);
  std::vector<double> b(g.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i)
    if (op.unknown(i)) b[i] = f[i];
  LaplaceField v{tau, ScalarField(g), 0.0};
  const SolveStats stats = solve_pcg(op, b, v.values.values, opts);
  v.residual = stats.relative_residual;
  return {std::move(v), stats};
}

std::pair<LaplaceField, SolveStats> solve_scattered(const Mask& mask, const LaplaceField& v,
                                                    const SolverOptions& opts) {
  const Grid3& g = mask.grid;
  check_tau(g, v.tau);
  if (!(v.values.grid == g)) throw DomainError("field and mask grids differ");
  const ShiftedLaplacian op(mask, true, ObstacleBC::neumann, v.tau * v.tau, 1.0);
  const double inv_h2 = 1.0 / (g.h * g.h);
  const std::size_t sy = g.dims[0], sz = sy * g.dims[1];
  std::vector<double> b(g.size(), 0.0);
  for (int k = 1; k < g.dims[2] - 1; ++k)
    for (int j = 1; j < g.dims[1] - 1; ++j)
      for (int i = 1; i < g.dims[0] - 1; ++i) {
        const std::size_t c = g.index(i, j, k);
        if (!op.unknown(c)) continue;
        double s = 0.0;
        for (std::size_t nb : {c - 1, c + 1, c - sy, c + sy, c - sz, c + sz})
          if (mask.labels[nb] == Label::d_solid) s += v.values[c] - v.values[nb];
        b[c] = s * inv_h2;
      }
  LaplaceField eps{v.tau, ScalarField(g), 0.0};
  const SolveStats stats = solve_pcg(op, b, eps.values.values, opts);
  eps.residual = stats.relative_residual;
  return {std::move(eps), stats};
}

LaplaceField assemble_w(const Mask& mask, const LaplaceField& v, const LaplaceField& eps) {
  if (v.tau != eps.tau) throw DomainError("fields carry different tau");
  LaplaceField w{v.tau, ScalarField(mask.grid), eps.residual};
  for (std::size_t i = 0; i < w.values.values.size(); ++i)
    if (!mask.is_solid(i, true)) w.values[i] = v.values[i] + eps.values[i];
  return w;
}

double compute_J(const LaplaceField& v, const Mask& mask) {
  if (!(v.values.grid == mask.grid)) throw DomainError("field and mask grids differ");
  return energy_density_sum(v.values, mask, false, v.tau,
                            [](Label l) { return l == Label::d_solid; });
}

double compute_E(const LaplaceField& w, const LaplaceField& v, const Mask& mask) {
  if (w.tau != v.tau) throw DomainError("w and v were solved for different tau");
  if (!(w.values.grid == mask.grid) || !(v.values.grid == mask.grid))
    throw DomainError("field and mask grids differ");
  ScalarField eps(mask.grid);
  for (std::size_t i = 0; i < eps.values.size(); ++i)
    if (!mask.is_solid(i, true)) eps[i] = w.values[i] - v.values[i];
  return energy_density_sum(eps, mask, true, w.tau, [](Label l) {
    return l == Label::exterior || l == Label::source_B;
  });
}

}  // namespace encl
