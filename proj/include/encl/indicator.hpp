/// @file indicator.hpp
/// @brief Laplace transforms of B-patch records, the indicator functions I
///        and I', tau sweeps, the presence decision and the distance bound.
#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "encl/elliptic.hpp"
#include "encl/wavesim.hpp"

namespace encl {

/// Composite trapezoid rule for int_0^{(n-1) dt} e^{-tau t} u(t) dt.
double laplace_trapezoid(std::span<const double> samples, double dt, double tau);

/// Per B cell transform of the record, in record.b_cells order.
std::vector<double> laplace_transform(const WaveRecord& record, double tau);

/// Transform of the difference of two records on the same cells and steps.
std::vector<double> laplace_transform_difference(const WaveRecord& a, const WaveRecord& b,
                                                 double tau);

/// h^3 * sum over `cells` of f * values.
double pair_with_source(const SourceField& f, std::span<const std::size_t> cells,
                        std::span<const double> values);

struct IndicatorValues {
  std::optional<double> I;
  std::optional<double> I_prime;
};

/// I = int_B f (w - v), I' = int_B f (w - V) from per-B-cell values. A
/// missing v or V leaves the corresponding result empty.
IndicatorValues indicator_values(const SourceField& f, std::span<const std::size_t> b_cells,
                                 std::span<const double> w_B,
                                 std::optional<std::span<const double>> v_B,
                                 std::optional<std::span<const double>> V_B);

struct IndicatorSample {
  double tau = 0.0;
  double I = 0.0;
  double I_prime = 0.0;
  double J = 0.0;
  double E = 0.0;
  double exp_tT_I = 0.0;
  double exp_tT_Iprime = 0.0;
  double log_abs_Iprime = 0.0;
  double source_V = 0.0;  ///< int_B f V, the scale of the unperturbed signal
  SolveStats v_stats;
  SolveStats eps_stats;
};

struct IndicatorSeries {
  double T = 0.0;
  std::vector<IndicatorSample> samples;
  std::string scene_digest;
  /// max over tau of |int_B f V|.
  double reference_scale = 0.0;
  /// max |I'| of a run without D on the same grid, when one was made.
  std::optional<double> control;
};

struct SweepOptions {
  WaveOptions wave;
  SolverOptions solver{1e-12, 0, Preconditioner::multigrid};
  std::string scene_digest;
  /// Receives v and w = v + eps for every tau (only when the scene has D).
  std::function<void(double, const LaplaceField&, const LaplaceField&)> on_fields;
  /// Receives the records without and with D (the same object when D is empty).
  std::function<void(const WaveRecord&, const WaveRecord&)> on_records;
};

/// Runs the FDTD problem without and with D once each (once in total when
/// D is empty) and evaluates every tau. Taus must be strictly increasing.
IndicatorSeries sweep(const SceneSpec& scene, const Grid3& grid, double T,
                      std::span<const double> taus, const SweepOptions& opts = {});

struct Verdict {
  bool present = false;
  double growth_slope = 0.0;    ///< slope of tau -> log(e^{tau T} |I'|), NaN at the floor
  double half_log_slope = 0.0;  ///< a in log|I'| ~ 2 a tau + b
  double dist_lower_bound = 0.0;
  double constant_used = 0.0;
  double margin = 0.0;          ///< growth_slope - threshold
  double floor = 0.0;
  bool at_floor = false;
  int fit_samples = 0;
};

/// Ordinary least squares slope of y against x.
double ols_slope(std::span<const double> x, std::span<const double> y);

/// Fits the top half of the sweep. Present iff the growth slope exceeds the
/// threshold and max |I'| exceeds the numerical floor
/// max(10 * control, 1e-13 * reference_scale). Throws DomainError for fewer
/// than 4 samples.
Verdict decide(const IndicatorSeries& series, double threshold_slope = 0.0,
               double constant = 0.0);

/// max(0, -a / constant) for a present verdict; DomainError otherwise.
double range_lower_bound(const IndicatorSeries& series, double constant);

/// Half of the OLS slope of log J over the top half of the sweep.
double half_log_slope_J(const IndicatorSeries& series);

}  // namespace encl
