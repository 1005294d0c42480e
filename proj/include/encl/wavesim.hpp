/// @file wavesim.hpp
/// @brief Leapfrog FDTD for the unit-speed wave equation outside sound-hard
///        obstacles, with a graded sponge layer at the box edge.
#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "encl/grid.hpp"

namespace encl {

/// f(x) = (eta - |x - p|)^2 g on source_B cells, 0 elsewhere.
struct SourceField {
  ScalarField field;
  Point3 p;
  double eta = 0.0;
  double g = 0.0;
};

/// Throws ConfigError when B spans fewer than 4 cells across its diameter.
SourceField make_source(const SceneSpec& scene, const Mask& mask);

/// safety * h / sqrt(3).
double cfl_dt(const Grid3& grid, double safety);

struct WaveOptions {
  double cfl_safety = 0.9;
  /// Overrides the step; otherwise T / ceil(T / cfl_dt).
  std::optional<double> dt;
  /// Peak damping rate at the outer edge; <= 0 selects the default for the sponge width.
  double sponge_sigma_max = 0.0;
  bool track_energy = false;
  int energy_stride = 1;
  /// Called after every step with (step, time, u).
  std::function<void(int, double, std::span<const double>)> on_step;
};

struct EnergySample {
  double t = 0.0;       ///< time of the half step n + 1/2
  double total = 0.0;   ///< whole box
  double inner = 0.0;   ///< non-sponge cells
};

struct WaveRecord {
  double dt = 0.0;
  int n_steps = 0;
  std::vector<std::size_t> b_cells;
  /// u at b_cells, row n holds step n (n_steps + 1 rows).
  std::vector<double> u_on_B;
  ScalarField u_final;
  ScalarField ut_final;
  std::vector<EnergySample> energy;

  double T() const { return dt * n_steps; }
  double at(int step, std::size_t cell) const { return u_on_B[step * b_cells.size() + cell]; }
};

/// Default peak sponge damping for a layer of the given physical width.
double default_sponge_sigma(double width);

/// Evolves u_tt = Lap u with u(0) = 0, u_t(0) = f, Neumann on obstacle cells
/// (D0, plus D when include_D) and zero on the outermost layer. Throws
/// SolverError when the field grows beyond 1e6 times its initial scale.
WaveRecord run_wave(const SceneSpec& scene, const Mask& mask, const SourceField& source, double T,
                    bool include_D, const WaveOptions& opts = {});

/// CSV with columns step,time,cell_index,u.
void write_record_csv(const std::filesystem::path& path, const WaveRecord& record);

}  // namespace encl
