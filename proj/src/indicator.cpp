/// @file indicator.cpp
#include "encl/indicator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "encl/errors.hpp"

namespace encl {

double laplace_trapezoid(std::span<const double> samples, double dt, double tau) {
  if (!(tau > 0.0)) throw DomainError("tau must be positive");
  const std::size_t n = samples.size();
  if (n < 2) return 0.0;
  double sum = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double w = (k == 0 || k + 1 == n) ? 0.5 : 1.0;
    sum += w * std::exp(-tau * dt * static_cast<double>(k)) * samples[k];
  }
  return sum * dt;
}

namespace {

template <class Sample>
std::vector<double> transform_cells(const WaveRecord& r, double tau, Sample&& sample) {
  if (!(tau > 0.0)) throw DomainError("tau must be positive");
  const std::size_t nb = r.b_cells.size();
  std::vector<double> out(nb, 0.0);
  for (int k = 0; k <= r.n_steps; ++k) {
    const double w = (k == 0 || k == r.n_steps ? 0.5 : 1.0) * r.dt * std::exp(-tau * r.dt * k);
    for (std::size_t c = 0; c < nb; ++c) out[c] += w * sample(k, c);
  }
  return out;
}

}  // namespace

std::vector<double> laplace_transform(const WaveRecord& record, double tau) {
  return transform_cells(record, tau, [&](int k, std::size_t c) { return record.at(k, c); });
}

std::vector<double> laplace_transform_difference(const WaveRecord& a, const WaveRecord& b,
                                                 double tau) {
  if (a.n_steps != b.n_steps || a.dt != b.dt || a.b_cells != b.b_cells)
    throw DomainError("records do not share cells and time steps");
  return transform_cells(a, tau, [&](int k, std::size_t c) { return a.at(k, c) - b.at(k, c); });
}

double pair_with_source(const SourceField& f, std::span<const std::size_t> cells,
                        std::span<const double> values) {
  if (cells.size() != values.size()) throw DomainError("cell and value counts differ");
  double s = 0.0;
  for (std::size_t c = 0; c < cells.size(); ++c) s += f.field[cells[c]] * values[c];
  return s * f.field.grid.cell_volume();
}

IndicatorValues indicator_values(const SourceField& f, std::span<const std::size_t> b_cells,
                                 std::span<const double> w_B,
                                 std::optional<std::span<const double>> v_B,
                                 std::optional<std::span<const double>> V_B) {
  auto diff_pair = [&](std::span<const double> ref) {
    if (ref.size() != w_B.size()) throw DomainError("per-cell value counts differ");
    std::vector<double> d(w_B.size());
    for (std::size_t c = 0; c < d.size(); ++c) d[c] = w_B[c] - ref[c];
    return pair_with_source(f, b_cells, d);
  };
  IndicatorValues out;
  if (v_B) out.I = diff_pair(*v_B);
  if (V_B) out.I_prime = diff_pair(*V_B);
  return out;
}

IndicatorSeries sweep(const SceneSpec& scene, const Grid3& grid, double T,
                      std::span<const double> taus, const SweepOptions& opts) {
  for (std::size_t i = 1; i < taus.size(); ++i)
    if (!(taus[i] > taus[i - 1])) throw ConfigError("taus must be strictly increasing");
  const Mask mask = voxelize(scene, grid);
  const SourceField src = make_source(scene, mask);

  const WaveRecord rec0 = run_wave(scene, mask, src, T, false, opts.wave);
  std::optional<WaveRecord> rec_d;
  if (scene.has_d()) rec_d = run_wave(scene, mask, src, T, true, opts.wave);
  const WaveRecord& rec = rec_d ? *rec_d : rec0;
  if (opts.on_records) opts.on_records(rec0, rec);

  IndicatorSeries series;
  series.T = rec.T();
  series.scene_digest = opts.scene_digest;
  for (double tau : taus) {
    IndicatorSample s;
    s.tau = tau;
    const auto diff = laplace_transform_difference(rec, rec0, tau);
    s.I_prime = pair_with_source(src, rec.b_cells, diff);
    s.source_V = pair_with_source(src, rec0.b_cells, laplace_transform(rec0, tau));
    series.reference_scale = std::max(series.reference_scale, std::abs(s.source_V));
    if (scene.has_d()) {
      auto [v, vs] = solve_modified_helmholtz(mask, false, src.field, tau, opts.solver);
      auto [eps, es] = solve_scattered(mask, v, opts.solver);
      std::vector<double> eps_B(rec.b_cells.size());
      for (std::size_t c = 0; c < eps_B.size(); ++c) eps_B[c] = eps.values[rec.b_cells[c]];
      s.I = pair_with_source(src, rec.b_cells, eps_B);
      const LaplaceField w = assemble_w(mask, v, eps);
      s.J = compute_J(v, mask);
      s.E = compute_E(w, v, mask);
      s.v_stats = vs;
      s.eps_stats = es;
      if (opts.on_fields) opts.on_fields(tau, v, w);
    }
    const double grow = std::exp(tau * series.T);
    s.exp_tT_I = grow * s.I;
    s.exp_tT_Iprime = grow * s.I_prime;
    s.log_abs_Iprime = std::log(std::abs(s.I_prime));
    series.samples.push_back(s);
  }
  return series;
}

double ols_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2) throw DomainError("slope fit needs >= 2 points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

namespace {

// Indices of the upper half of the sweep, the last ceil(n/2) samples.
std::pair<std::size_t, std::size_t> top_half(std::size_t n) { return {n - (n + 1) / 2, n}; }

}  // namespace

Verdict decide(const IndicatorSeries& series, double threshold_slope, double constant) {
  const auto& s = series.samples;
  if (s.size() < 4) throw DomainError("decision needs at least 4 tau samples");
  const auto [lo, hi] = top_half(s.size());
  Verdict v;
  v.constant_used = constant;
  v.fit_samples = static_cast<int>(hi - lo);
  v.floor = std::max(10.0 * series.control.value_or(0.0), 1e-13 * series.reference_scale);

  double max_abs = 0.0;
  for (const auto& x : s) max_abs = std::max(max_abs, std::abs(x.I_prime));
  std::vector<double> tx, ty;
  bool zero = false;
  for (std::size_t i = lo; i < hi; ++i) {
    if (s[i].I_prime == 0.0 || !std::isfinite(s[i].I_prime)) zero = true;
    tx.push_back(s[i].tau);
    ty.push_back(s[i].tau * series.T + std::log(std::abs(s[i].I_prime)));
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  v.at_floor = zero || !(max_abs > v.floor);
  v.growth_slope = zero ? nan : ols_slope(tx, ty);
  v.half_log_slope = zero ? nan : 0.5 * (v.growth_slope - series.T);
  v.margin = v.growth_slope - threshold_slope;
  v.present = !v.at_floor && v.growth_slope > threshold_slope;
  v.dist_lower_bound = (constant > 0.0 && !zero) ? std::max(0.0, -v.half_log_slope / constant) : nan;
  return v;
}

double range_lower_bound(const IndicatorSeries& series, double constant) {
  if (!(constant > 0.0)) throw DomainError("detour constant must be positive");
  const Verdict v = decide(series, 0.0, constant);
  if (!v.present) throw DomainError("range bound requires a present verdict");
  return v.dist_lower_bound;
}

double half_log_slope_J(const IndicatorSeries& series) {
  const auto& s = series.samples;
  if (s.size() < 4) throw DomainError("slope fit needs at least 4 tau samples");
  const auto [lo, hi] = top_half(s.size());
  std::vector<double> tx, ty;
  for (std::size_t i = lo; i < hi; ++i) {
    if (!(s[i].J > 0.0)) throw DomainError("J must be positive for a log fit");
    tx.push_back(s[i].tau);
    ty.push_back(std::log(s[i].J));
  }
  return 0.5 * ols_slope(tx, ty);
}

}  // namespace encl
