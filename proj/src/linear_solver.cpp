/// @file linear_solver.cpp
#include "encl/linear_solver.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "encl/errors.hpp"

namespace encl {

namespace {

// Calls f(idx) for every cell strictly inside the outermost layer, k/j/i order.
template <class F>
inline void for_interior(const Grid3& g, F&& f) {
  const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
  for (int k = 1; k < nz - 1; ++k)
    for (int j = 1; j < ny - 1; ++j) {
      const std::size_t row = g.index(0, j, k);
      for (int i = 1; i < nx - 1; ++i) f(row + i);
    }
}

void zero_boundary_layer(const Grid3& g, std::span<double> y) {
  const int nx = g.dims[0], ny = g.dims[1], nz = g.dims[2];
  for (int k = 0; k < nz; ++k)
    for (int j = 0; j < ny; ++j) {
      const std::size_t row = g.index(0, j, k);
      if (k == 0 || k == nz - 1 || j == 0 || j == ny - 1) {
        std::fill(y.begin() + row, y.begin() + row + nx, 0.0);
      } else {
        y[row] = 0.0;
        y[row + nx - 1] = 0.0;
      }
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Weight applied to the Laplacian part of each Galerkin coarse operator;
// corrects the stiffness overestimate of piecewise-constant prolongation.
constexpr double kCoarseLaplaceWeight = 0.5;

}  // namespace

ShiftedLaplacian::ShiftedLaplacian(const Mask& mask, bool include_D, ObstacleBC bc, double shift,
                                   double kappa)
    : grid_(mask.grid),
      code_(mask.grid.size(), -1),
      shift_(shift),
      kappa_(kappa),
      inv_h2_(1.0 / (mask.grid.h * mask.grid.h)) {
  if (!(shift >= 0.0) || !(kappa > 0.0)) throw DomainError("operator needs shift >= 0, kappa > 0");
  const std::size_t sx = 1, sy = grid_.dims[0], sz = sy * grid_.dims[1];
  for_interior(grid_, [&](std::size_t idx) {
    if (mask.is_solid(idx, include_D)) return;
    int open = 0;
    for (std::size_t s : {sx, sy, sz}) {
      for (std::size_t nb : {idx - s, idx + s}) {
        if (!mask.is_solid(nb, include_D) || bc == ObstacleBC::dirichlet) ++open;
      }
    }
    code_[idx] = static_cast<std::int8_t>(open);
  });
}

void ShiftedLaplacian::apply(std::span<const double> x, std::span<double> y) const {
  const std::size_t sy = grid_.dims[0], sz = sy * grid_.dims[1];
  const double kh = kappa_ * inv_h2_;
  const double* xp = x.data();
  zero_boundary_layer(grid_, y);
  for_interior(grid_, [&](std::size_t i) {
    const int c = code_[i];
    if (c < 0) {
      y[i] = 0.0;
      return;
    }
    const double nb = xp[i - 1] + xp[i + 1] + xp[i - sy] + xp[i + sy] + xp[i - sz] + xp[i + sz];
    y[i] = (shift_ + kh * c) * xp[i] - kh * nb;
  });
}

void ShiftedLaplacian::laplacian(std::span<const double> x, std::span<double> y) const {
  const std::size_t sy = grid_.dims[0], sz = sy * grid_.dims[1];
  const double* xp = x.data();
  zero_boundary_layer(grid_, y);
  for_interior(grid_, [&](std::size_t i) {
    const int c = code_[i];
    if (c < 0) {
      y[i] = 0.0;
      return;
    }
    const double nb = xp[i - 1] + xp[i + 1] + xp[i - sy] + xp[i + sy] + xp[i - sz] + xp[i + sz];
    y[i] = inv_h2_ * (nb - c * xp[i]);
  });
}

// ---------------------------------------------------------------------------

struct MultigridPreconditioner::Impl {
  // Coarse level with explicit coefficients on a zero-padded layout.
  struct Level {
    int n[3] = {0, 0, 0};
    std::size_t sy = 0, sz = 0, size = 0;
    std::vector<double> m, b, gx, gy, gz, diag;
    std::vector<double> x, rhs, res;

    std::size_t at(int i, int j, int k) const {
      return static_cast<std::size_t>(k + 1) * sz + static_cast<std::size_t>(j + 1) * sy +
             static_cast<std::size_t>(i + 1);
    }
    void allocate(const int dims[3]) {
      for (int a = 0; a < 3; ++a) n[a] = dims[a];
      sy = static_cast<std::size_t>(n[0] + 2);
      sz = sy * static_cast<std::size_t>(n[1] + 2);
      size = sz * static_cast<std::size_t>(n[2] + 2);
      for (auto* v : {&m, &b, &gx, &gy, &gz, &diag, &x, &rhs, &res}) v->assign(size, 0.0);
    }
    void finish() {
      for (int k = 0; k < n[2]; ++k)
        for (int j = 0; j < n[1]; ++j)
          for (int i = 0; i < n[0]; ++i) {
            const std::size_t c = at(i, j, k);
            if (m[c] <= 0.0 && b[c] <= 0.0 && gx[c] + gy[c] + gz[c] + gx[c - 1] + gy[c - sy] + gz[c - sz] <= 0.0)
              continue;
            diag[c] = m[c] + b[c] + gx[c] + gx[c - 1] + gy[c] + gy[c - sy] + gz[c] + gz[c - sz];
          }
    }
    double offdiag_sum(std::size_t c, const std::vector<double>& v) const {
      return gx[c] * v[c + 1] + gx[c - 1] * v[c - 1] + gy[c] * v[c + sy] + gy[c - sy] * v[c - sy] +
             gz[c] * v[c + sz] + gz[c - sz] * v[c - sz];
    }
    void gs_color(int color) {
      for (int k = 0; k < n[2]; ++k)
        for (int j = 0; j < n[1]; ++j)
          for (int i = ((j + k + color) & 1); i < n[0]; i += 2) {
            const std::size_t c = at(i, j, k);
            if (diag[c] <= 0.0) continue;
            x[c] = (rhs[c] + offdiag_sum(c, x)) / diag[c];
          }
    }
    void residual() {
      for (int k = 0; k < n[2]; ++k)
        for (int j = 0; j < n[1]; ++j)
          for (int i = 0; i < n[0]; ++i) {
            const std::size_t c = at(i, j, k);
            res[c] = diag[c] > 0.0 ? rhs[c] - (diag[c] * x[c] - offdiag_sum(c, x)) : 0.0;
          }
    }
  };

  const ShiftedLaplacian& op;
  std::vector<double> res0;
  std::vector<Level> levels;
  int pre_sweeps = 2;
  int coarse_sweeps = 20;

  explicit Impl(const ShiftedLaplacian& o) : op(o), res0(o.grid().size(), 0.0) { build(); }

  void build() {
    const Grid3& g = op.grid();
    const double kh = op.kappa_ * op.inv_h2_;
    const double w = kCoarseLaplaceWeight;
    int dims[3] = {(g.dims[0] + 1) / 2, (g.dims[1] + 1) / 2, (g.dims[2] + 1) / 2};
    if (std::min({dims[0], dims[1], dims[2]}) < 3) return;
    Level L;
    L.allocate(dims);
    const std::size_t sy = g.dims[0], sz = sy * g.dims[1];
    for (int k = 1; k < g.dims[2] - 1; ++k)
      for (int j = 1; j < g.dims[1] - 1; ++j)
        for (int i = 1; i < g.dims[0] - 1; ++i) {
          const std::size_t f = g.index(i, j, k);
          const int code = op.code_[f];
          if (code < 0) continue;
          const std::size_t c = L.at(i / 2, j / 2, k / 2);
          L.m[c] += op.shift_;
          int unknown_nb = 0;
          for (std::size_t nb : {f - 1, f + 1, f - sy, f + sy, f - sz, f + sz})
            if (op.code_[nb] >= 0) ++unknown_nb;
          L.b[c] += w * kh * (code - unknown_nb);
          if (op.code_[f + 1] >= 0 && (i + 1) / 2 != i / 2) L.gx[c] += w * kh;
          if (op.code_[f + sy] >= 0 && (j + 1) / 2 != j / 2) L.gy[c] += w * kh;
          if (op.code_[f + sz] >= 0 && (k + 1) / 2 != k / 2) L.gz[c] += w * kh;
        }
    L.finish();
    levels.push_back(std::move(L));

    while (levels.size() < 12) {
      const Level& F = levels.back();
      int cd[3] = {(F.n[0] + 1) / 2, (F.n[1] + 1) / 2, (F.n[2] + 1) / 2};
      if (std::min({cd[0], cd[1], cd[2]}) < 3 || F.n[0] * F.n[1] * F.n[2] < 512) break;
      Level C;
      C.allocate(cd);
      for (int k = 0; k < F.n[2]; ++k)
        for (int j = 0; j < F.n[1]; ++j)
          for (int i = 0; i < F.n[0]; ++i) {
            const std::size_t f = F.at(i, j, k);
            if (F.diag[f] <= 0.0) continue;
            const std::size_t c = C.at(i / 2, j / 2, k / 2);
            C.m[c] += F.m[f];
            C.b[c] += w * F.b[f];
            if ((i + 1) / 2 != i / 2) C.gx[c] += w * F.gx[f];
            if ((j + 1) / 2 != j / 2) C.gy[c] += w * F.gy[f];
            if ((k + 1) / 2 != k / 2) C.gz[c] += w * F.gz[f];
          }
      C.finish();
      levels.push_back(std::move(C));
    }
  }

  // Red-black Gauss-Seidel on the fine operator.
  void fine_gs_color(std::span<const double> rhs, std::span<double> x, int color) {
    const Grid3& g = op.grid();
    const std::size_t sy = g.dims[0], sz = sy * g.dims[1];
    const double kh = op.kappa_ * op.inv_h2_;
    double* xp = x.data();
    for (int k = 1; k < g.dims[2] - 1; ++k)
      for (int j = 1; j < g.dims[1] - 1; ++j) {
        const std::size_t row = g.index(0, j, k);
        for (int i = 1 + ((1 + j + k + color) & 1); i < g.dims[0] - 1; i += 2) {
          const std::size_t f = row + i;
          const int code = op.code_[f];
          if (code < 0) continue;
          const double nb = xp[f - 1] + xp[f + 1] + xp[f - sy] + xp[f + sy] + xp[f - sz] + xp[f + sz];
          xp[f] = (rhs[f] + kh * nb) / (op.shift_ + kh * code);
        }
      }
  }

  void cycle(std::size_t l) {
    Level& L = levels[l];
    std::fill(L.x.begin(), L.x.end(), 0.0);
    if (l + 1 == levels.size()) {
      for (int s = 0; s < coarse_sweeps; ++s) {
        L.gs_color(0);
        L.gs_color(1);
        L.gs_color(1);
        L.gs_color(0);
      }
      return;
    }
    for (int s = 0; s < pre_sweeps; ++s) {
      L.gs_color(0);
      L.gs_color(1);
    }
    L.residual();
    Level& C = levels[l + 1];
    std::fill(C.rhs.begin(), C.rhs.end(), 0.0);
    for (int k = 0; k < L.n[2]; ++k)
      for (int j = 0; j < L.n[1]; ++j)
        for (int i = 0; i < L.n[0]; ++i) {
          const std::size_t f = L.at(i, j, k);
          if (L.diag[f] > 0.0) C.rhs[C.at(i / 2, j / 2, k / 2)] += L.res[f];
        }
    cycle(l + 1);
    for (int k = 0; k < L.n[2]; ++k)
      for (int j = 0; j < L.n[1]; ++j)
        for (int i = 0; i < L.n[0]; ++i) {
          const std::size_t f = L.at(i, j, k);
          if (L.diag[f] > 0.0) L.x[f] += C.x[C.at(i / 2, j / 2, k / 2)];
        }
    for (int s = 0; s < pre_sweeps; ++s) {
      L.gs_color(1);
      L.gs_color(0);
    }
  }

  void apply(std::span<const double> r, std::span<double> z) {
    const Grid3& g = op.grid();
    std::fill(z.begin(), z.end(), 0.0);
    for (int s = 0; s < pre_sweeps; ++s) {
      fine_gs_color(r, z, 0);
      fine_gs_color(r, z, 1);
    }
    if (!levels.empty()) {
      op.apply(z, res0);
      Level& C = levels[0];
      std::fill(C.rhs.begin(), C.rhs.end(), 0.0);
      for (int k = 1; k < g.dims[2] - 1; ++k)
        for (int j = 1; j < g.dims[1] - 1; ++j)
          for (int i = 1; i < g.dims[0] - 1; ++i) {
            const std::size_t f = g.index(i, j, k);
            if (op.code_[f] >= 0) C.rhs[C.at(i / 2, j / 2, k / 2)] += r[f] - res0[f];
          }
      cycle(0);
      for (int k = 1; k < g.dims[2] - 1; ++k)
        for (int j = 1; j < g.dims[1] - 1; ++j)
          for (int i = 1; i < g.dims[0] - 1; ++i) {
            const std::size_t f = g.index(i, j, k);
            if (op.code_[f] >= 0) z[f] += C.x[C.at(i / 2, j / 2, k / 2)];
          }
    }
    for (int s = 0; s < pre_sweeps; ++s) {
      fine_gs_color(r, z, 1);
      fine_gs_color(r, z, 0);
    }
  }
};

MultigridPreconditioner::MultigridPreconditioner(const ShiftedLaplacian& op)
    : impl_(std::make_unique<Impl>(op)) {}
MultigridPreconditioner::~MultigridPreconditioner() = default;
void MultigridPreconditioner::apply(std::span<const double> r, std::span<double> z) {
  impl_->apply(r, z);
}
int MultigridPreconditioner::levels() const { return 1 + static_cast<int>(impl_->levels.size()); }

// ---------------------------------------------------------------------------

SolveStats solve_pcg(const ShiftedLaplacian& op, std::span<const double> b, std::span<double> x,
                     const SolverOptions& opts) {
  const Grid3& g = op.grid();
  const std::size_t n = g.size();
  if (b.size() != n || x.size() != n) throw DomainError("solver vectors do not match the grid");
  if (!(opts.tol > 0.0)) throw DomainError("solver tolerance must be positive");
  const int cap = opts.max_iter > 0 ? opts.max_iter
                                    : 10 * std::max({g.dims[0], g.dims[1], g.dims[2]});

  SolveStats stats;
  const double bnorm = std::sqrt(dot(b, b));
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    return stats;
  }

  std::unique_ptr<MultigridPreconditioner> mg;
  if (opts.precond == Preconditioner::multigrid) mg = std::make_unique<MultigridPreconditioner>(op);
  auto precondition = [&](std::span<const double> r, std::span<double> z) {
    if (mg) {
      mg->apply(r, z);
    } else {
      for (std::size_t i = 0; i < n; ++i) z[i] = op.unknown(i) ? r[i] / op.diag(i) : 0.0;
    }
  };

  std::vector<double> r(n), z(n), p(n), q(n);
  auto true_residual = [&]() {
    op.apply(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = op.unknown(i) ? b[i] - q[i] : 0.0;
    return std::sqrt(dot(r, r)) / bnorm;
  };

  double rel = true_residual();
  for (int restart = 0; restart < 4 && rel > opts.tol; ++restart) {
    precondition(r, z);
    p = z;
    double rz = dot(r, z);
    while (stats.iterations < cap) {
      op.apply(p, q);
      const double pq = dot(p, q);
      if (!(pq > 0.0)) break;
      const double alpha = rz / pq;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      ++stats.iterations;
      rel = std::sqrt(dot(r, r)) / bnorm;
      if (rel <= 0.5 * opts.tol) break;
      precondition(r, z);
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    rel = true_residual();
    if (stats.iterations >= cap) break;
  }
  stats.relative_residual = rel;
  if (rel > opts.tol) {
    std::ostringstream os;
    os << "PCG did not reach relative residual " << opts.tol << " within " << cap
       << " iterations (reached " << rel << ")";
    throw SolverError(os.str());
  }
  return stats;
}

}  // namespace encl
