/// @file verification.hpp
/// @brief Property and oracle suites run by `verify <suite>`. Each suite
///        returns a JSON report listing every check with its numbers.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"

namespace encl {

/// Suite names accepted by run_verification().
std::vector<std::string> verification_suites();

/// Report: {suite, seed, checks: [{name, pass, ...}], all_pass}. Throws
/// ConfigError for an unknown suite name.
nlohmann::json run_verification(const std::string& suite, std::uint64_t seed = 42);

struct ArcSweepResult {
  long pairs = 0;
  long length_failures = 0;
  long clearance_failures = 0;
  double worst_ratio = 0.0;       ///< max exact_length / |x - y|
  double worst_clearance = 0.0;   ///< min sampled signed distance (minus eps for convex)
};

/// Random exterior pairs around random balls; arcs sampled at 10^3 points.
ArcSweepResult sweep_ball_arcs(long pairs, std::uint64_t seed);
/// Random pairs with nu_x . nu_y >= alpha around random ellipsoids.
ArcSweepResult sweep_convex_arcs(long pairs, double alpha, std::uint64_t seed);

/// Free-space FDTD at the source center against the radial closed form over
/// t in [0, 2]; relative L2-in-time error.
double kirchhoff_error(double h);

struct YukawaProbe {
  double r = 0.0;
  double numeric = 0.0;
  double reference = 0.0;
  double rel_err = 0.0;
};

/// Free-space modified Helmholtz against the Yukawa convolution of the
/// source profile, reduced to a radial integral, at a few distances from p.
std::vector<YukawaProbe> yukawa_probes(double h, double tau);

/// Convolution of g (eta - |y|)_+^2 with exp(-tau r)/(4 pi r) at distance R.
double yukawa_reference(double R, double eta, double g, double tau);

/// Image sum of the ball kernel at the center in 300-digit arithmetic.
double ball_kernel_center_multiprecision(double eps, double t);

}  // namespace encl
