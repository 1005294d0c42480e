// Command-line driver: validate, run, verify, dump-field.
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "encl/errors.hpp"
#include "encl/experiment.hpp"
#include "encl/verification.hpp"

namespace {

enum Exit { kOk = 0, kValidation = 2, kSolver = 3, kVerification = 4 };

int fail(const char* stage, const std::exception& e, int code) {
  std::cerr << "error [" << stage << "]: " << e.what() << '\n';
  return code;
}

int cmd_validate(const std::string& cfg_arg) {
  try {
    const encl::ExperimentConfig c = encl::load_config(cfg_arg);
    const encl::ValidationReport r = encl::validate(c);
    nlohmann::json out = {{"valid", true},
                          {"name", c.name},
                          {"grid_dims", r.grid.dims},
                          {"h", r.grid.h},
                          {"T", r.T},
                          {"constant", r.constant},
                          {"scene_digest", encl::scene_digest(c)}};
    out["true_distance"] = r.true_distance ? nlohmann::json(*r.true_distance) : nlohmann::json(nullptr);
    if (r.cone_condition) out["cone_condition_sampled"] = *r.cone_condition;
    std::cout << out.dump(2) << '\n';
    return kOk;
  } catch (const encl::ConfigError& e) {
    return fail("validation", e, kValidation);
  } catch (const encl::DomainError& e) {
    return fail("validation", e, kValidation);
  } catch (const nlohmann::json::exception& e) {
    return fail("validation", e, kValidation);
  }
}

int cmd_run(const std::string& cfg_arg, const std::string& outputs, bool dump, bool quiet) {
  encl::ExperimentConfig c;
  try {
    c = encl::load_config(cfg_arg);
    if (!outputs.empty()) c.outputs = outputs;
    encl::validate(c);
  } catch (const std::exception& e) {
    return fail("validation", e, kValidation);
  }
  try {
    const encl::ResultBundle r = encl::run_experiment(c, {dump, quiet});
    const auto& v = r.verdict;
    std::cout << "verdict: " << (v.present ? "present" : "absent") << "  growth_slope " << v.growth_slope
              << "  dist_lower_bound " << v.dist_lower_bound << '\n'
              << "results in " << r.dir.string() << '\n';
    return kOk;
  } catch (const encl::SolverError& e) {
    return fail("solve", e, kSolver);
  } catch (const encl::ConsistencyError& e) {
    return fail("solve", e, kSolver);
  } catch (const encl::ConfigError& e) {
    return fail("validation", e, kValidation);
  } catch (const std::exception& e) {
    return fail("run", e, kSolver);
  }
}

int cmd_verify(const std::string& suite, std::uint64_t seed, const std::string& out_path) {
  nlohmann::json rep;
  try {
    rep = encl::run_verification(suite, seed);
  } catch (const encl::ConfigError& e) {
    return fail("verify", e, kValidation);
  } catch (const encl::SolverError& e) {
    return fail("verify", e, kSolver);
  } catch (const std::exception& e) {
    return fail("verify", e, kVerification);
  }
  const std::string text = rep.dump(2);
  if (!out_path.empty()) std::ofstream(out_path) << text << '\n';
  std::cout << text << '\n';
  return rep.at("all_pass").get<bool>() ? kOk : kVerification;
}

int cmd_dump(const std::string& dir, const std::string& name, bool csv) {
  try {
    const encl::ScalarField f = encl::read_field(std::filesystem::path(dir) / name);
    const auto& g = f.grid;
    if (!csv) {
      double lo = INFINITY, hi = -INFINITY, sum = 0.0;
      for (double x : f.values) {
        lo = std::min(lo, x);
        hi = std::max(hi, x);
        sum += x;
      }
      nlohmann::json out = {{"name", name}, {"dims", g.dims}, {"h", g.h},
                            {"origin", {g.origin.x, g.origin.y, g.origin.z}},
                            {"min", lo}, {"max", hi}, {"integral", sum * g.cell_volume()}};
      std::cout << out.dump(2) << '\n';
      return kOk;
    }
    std::printf("i,j,k,x,y,z,value\n");
    for (int k = 0; k < g.dims[2]; ++k)
      for (int j = 0; j < g.dims[1]; ++j)
        for (int i = 0; i < g.dims[0]; ++i) {
          const std::size_t idx = g.index(i, j, k);
          const encl::Point3 p = g.center(idx);
          std::printf("%d,%d,%d,%.17g,%.17g,%.17g,%.17g\n", i, j, k, p.x, p.y, p.z, f.values[idx]);
        }
    return kOk;
  } catch (const std::exception& e) {
    return fail("dump-field", e, kValidation);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Obstacle-enclosure indicator experiments: units of length L, time L/c with c = 1"};
  app.require_subcommand(1);

  std::string cfg, outputs, suite, out_path, dir, name;
  bool dump = false, quiet = false, csv = false;
  std::uint64_t seed = 42;

  auto* validate = app.add_subcommand("validate", "check a config without solving");
  validate->add_option("config", cfg, "JSON file or preset:NAME")->required();

  auto* run = app.add_subcommand("run", "run the full pipeline and write results");
  run->add_option("config", cfg, "JSON file or preset:NAME")->required();
  run->add_option("-o,--outputs", outputs, "override the output directory");
  run->add_flag("--dump-fields", dump, "also write final fields and B records");
  run->add_flag("-q,--quiet", quiet, "no progress output");

  auto* verify = app.add_subcommand("verify", "run a property/oracle suite");
  verify->add_option("suite", suite, "geometry | heatkernel | identity | solver-oracles")->required();
  verify->add_option("--seed", seed, "seed for randomized sweeps");
  verify->add_option("--out", out_path, "also write the report to this file");

  auto* dumpf = app.add_subcommand("dump-field", "print a dumped field");
  dumpf->add_option("run-dir", dir)->required();
  dumpf->add_option("name", name)->required();
  dumpf->add_flag("--csv", csv, "print every cell instead of a summary");

  auto* presets = app.add_subcommand("presets", "list preset names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kValidation;
  }
  if (*validate) return cmd_validate(cfg);
  if (*run) return cmd_run(cfg, outputs, dump, quiet);
  if (*verify) return cmd_verify(suite, seed, out_path);
  if (*dumpf) return cmd_dump(dir, name, csv);
  if (*presets) {
    for (const auto& p : encl::preset_names()) std::cout << p << '\n';
    return kOk;
  }
  return kOk;
}
