#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "encl/errors.hpp"
#include "encl/experiment.hpp"
#include "encl/geometry.hpp"

using namespace encl;
using doctest::Approx;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("encl_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

int cli(const std::string& args) {
  const std::string cmd = std::string(ENCL_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

ExperimentConfig coarse(const std::string& name, const fs::path& out) {
  ExperimentConfig c = preset(name);
  c.grid.h = 0.125;
  c.outputs = out;
  return c;
}

}  // namespace

TEST_CASE("SHA-256 test vectors") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("presets") {
  const auto names = preset_names();
  CHECK(names.size() >= 5);
  for (const auto& n : names) {
    const ExperimentConfig c = preset(n);
    CHECK(c.name == n);
    CHECK(c.taus.size() == 9);
    CHECK(c.grid.h == 0.0625);
    CHECK_NOTHROW(validate(c));
  }
  const ExperimentConfig c = preset("ball-behind-ball");
  CHECK(c.scene.source.center.x == -2.2);
  CHECK(c.scene.source.radius == 0.4);
  REQUIRE(c.scene.d_bodies.size() == 1);
  CHECK(c.scene.d_bodies[0].center.x == 2.2);
  CHECK(c.M == 4.0);
  CHECK_FALSE(c.T.has_value());
  CHECK(c.resolved_T() == Approx(2 * detour_constant(BallDetour{}) * 4.0).epsilon(1e-14));
  const ValidationReport r = validate(c);
  CHECK(*r.true_distance == Approx(3.5).epsilon(1e-12));
  CHECK(preset("empty").scene.d_bodies.empty());
  CHECK_THROWS_AS(preset("nope"), ConfigError);

  const ExperimentConfig e = preset("ellipsoid-cone");
  REQUIRE(e.alpha.has_value());
  CHECK(e.constant() == Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(validate(e).cone_condition.value());
}

TEST_CASE("config parsing and round trip") {
  const json j = json::parse(R"({
    "name": "custom",
    "scene": {
      "d0": [{"kind": "ellipsoid", "center": [0, 0, 0], "semi_axes": [1.2, 0.8, 0.8],
              "rotation": [[0, -1, 0], [1, 0, 0], [0, 0, 1]]}],
      "d": [{"kind": "ball", "center": [2.0, 0.5, 0], "radius": 0.4}],
      "source": {"center": [-2.0, 0, 0], "radius": 0.4},
      "g": 2.0
    },
    "grid": {"h": 0.125, "sponge_cells": 16, "clearance": "auto"},
    "T": "auto", "M": 4.0,
    "taus": {"start": 1.0, "stop": 2.0, "step": 0.25},
    "outputs": "runs/custom", "seed": 7
  })");
  const ExperimentConfig c = parse_config(j);
  CHECK(c.taus == std::vector<double>{1.0, 1.25, 1.5, 1.75, 2.0});
  CHECK(c.scene.g_amplitude == 2.0);
  CHECK(c.grid.sponge_cells == 16);
  CHECK(c.seed == 7);
  const json once = to_json(c);
  const json twice = to_json(parse_config(once));
  CHECK(once == twice);
  CHECK(scene_digest(c) == scene_digest(parse_config(once)));

  ExperimentConfig moved = c;
  moved.outputs = "elsewhere";
  CHECK(scene_digest(moved) == scene_digest(c));
  moved.scene.d_bodies[0].center.x = 2.01;
  CHECK(scene_digest(moved) != scene_digest(c));

  const ExperimentConfig over = parse_config(json::parse(R"({"preset": "ball-behind-ball", "T": 12.5})"));
  CHECK(*over.T == 12.5);
  CHECK(over.scene.d_bodies.size() == 1);
  CHECK_THROWS_AS(parse_config(json::parse(R"({"T": "soon"})")), ConfigError);
  CHECK_THROWS_AS(parse_config(json::parse("[1, 2]")), ConfigError);
}

TEST_CASE("validation names the violated condition") {
  auto expect = [](ExperimentConfig c, const std::string& fragment) {
    try {
      validate(c);
      FAIL("accepted: " << fragment);
    } catch (const ConfigError& e) {
      CHECK_MESSAGE(std::string(e.what()).find(fragment) != std::string::npos, e.what());
    }
  };
  ExperimentConfig c = preset("ball-behind-ball");
  {
    auto bad = c;
    bad.scene.source.center = {-1.2, 0, 0};
    CHECK_THROWS_AS(validate(bad), ConfigError);
  }
  {
    auto bad = c;
    bad.taus = {1.0, 2.0, 3.0};
    expect(bad, "at least 4 taus");
  }
  {
    auto bad = c;
    bad.taus = {1.0, 2.0, 3.0, 9.0};
    expect(bad, "tau*h");
  }
  {
    auto bad = c;
    bad.taus = {0.25, 1.0, 2.0, 3.0};
    expect(bad, "0.5");
  }
  {
    auto bad = c;
    bad.taus = {1.0, 3.0, 2.0, 4.0};
    expect(bad, "increasing");
  }
  {
    auto bad = c;
    bad.alpha = 0.5;
    expect(bad, "alpha");
  }
  {
    auto bad = c;
    bad.M = 0.0;
    expect(bad, "M");
  }
  {
    auto bad = c;
    bad.cfl_safety = 1.5;
    expect(bad, "cfl_safety");
  }
  {
    auto bad = c;
    bad.scene.source.radius = 0.01;
    CHECK_THROWS_AS(validate(bad), ConfigError);
  }
}

TEST_CASE("end-to-end coarse runs are reproducible") {
  const fs::path a = scratch("run_a"), b = scratch("run_b");
  const ResultBundle ra = run_experiment(coarse("ball-behind-ball", a));
  const ResultBundle rb = run_experiment(coarse("ball-behind-ball", b));
  for (const auto& p : {ra.indicator_csv, ra.verdict_json, ra.verification_json, ra.provenance_json})
    CHECK(fs::exists(p));
  CHECK(slurp(ra.indicator_csv) == slurp(rb.indicator_csv));
  CHECK(slurp(ra.verdict_json) == slurp(rb.verdict_json));
  CHECK(slurp(ra.verification_json) == slurp(rb.verification_json));

  const json verdict = json::parse(slurp(ra.verdict_json));
  CHECK(verdict.at("present").get<bool>());
  CHECK(verdict.at("dist_lower_bound").get<double>() > 0.0);
  CHECK(verdict.at("dist_lower_bound").get<double>() <= 3.5);
  CHECK(verdict.at("scene_digest") == scene_digest(coarse("ball-behind-ball", a)));
  const json prov = json::parse(slurp(ra.provenance_json));
  CHECK(prov.contains("config_digest"));
  CHECK(prov.contains("timings_s"));
  CHECK(prov.contains("code_version"));

  std::ifstream csv(ra.indicator_csv);
  std::string line;
  std::getline(csv, line);
  CHECK(line == "tau,I,I_prime,J,E,exp_tT_I,exp_tT_Iprime,log_abs_Iprime");
  int rows = 0;
  while (std::getline(csv, line)) ++rows;
  CHECK(rows == 9);
}

TEST_CASE("empty scene gives an absent verdict and zero I'") {
  const fs::path d = scratch("run_empty");
  const ResultBundle r = run_experiment(coarse("empty", d));
  CHECK_FALSE(r.verdict.present);
  for (const auto& s : r.series.samples) CHECK(s.I_prime == 0.0);
  CHECK(r.verification.at("all_pass").get<bool>());
}

TEST_CASE("command line exit codes") {
  const fs::path d = scratch("cli");
  CHECK(cli("presets") == 0);
  CHECK(cli("validate preset:ball-behind-ball") == 0);
  {
    std::ofstream bad(d / "bad.json");
    bad << R"({"preset": "ball-behind-ball", "taus": [1, 2, 3]})";
  }
  CHECK(cli("validate " + (d / "bad.json").string()) == 2);
  {
    std::ofstream broken(d / "broken.json");
    broken << "{ not json";
  }
  CHECK(cli("validate " + (d / "broken.json").string()) == 2);
  CHECK(cli("validate " + (d / "missing.json").string()) == 2);
  CHECK(cli("verify identity --out " + (d / "identity.json").string()) == 0);
  CHECK(fs::exists(d / "identity.json"));
  CHECK(json::parse(slurp(d / "identity.json")).at("all_pass").get<bool>());
  CHECK(cli("verify no-such-suite") != 0);
  CHECK(cli("frobnicate") != 0);
}
