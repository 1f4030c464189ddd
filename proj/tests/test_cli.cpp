#include <catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flab/app.hpp"
#include "flab/config.hpp"
#include "flab/json_io.hpp"

using namespace flab;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "flab_cli_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "run.ini";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_flab(const std::string& args) {
  const std::string cmd = std::string(FLAB_BINARY) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string parse_error(const std::string& text) {
  try {
    parse_config_text(text, "t.ini");
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

const char* kQuadratic = "[potential]\nkind = quadratic\nparams = 0.5\n[grid]\nh = 0.1\n";

}  // namespace

TEST_CASE("minimal config fills defaults and an auto radius", "[config]") {
  const ExperimentConfig cfg = parse_config_text(kQuadratic);
  CHECK(cfg.potential.kind == "quadratic");
  CHECK(cfg.scheme.b_function == "scharfetter-gummel");
  CHECK_FALSE(cfg.grid.radius.has_value());
  CHECK(cfg.time.method == "trapezoidal");
  CHECK(cfg.sim.seed == 42);
  const Lattice lat = make_lattice(make_potential(cfg.potential), cfg.grid.h, cfg.grid.radius);
  CHECK(lat.n_half == 90);
  CHECK(lat.radius() >= std::sqrt(80.0));
}

TEST_CASE("config errors name the line and key", "[config]") {
  const std::string neg = parse_error("[grid]\nh = -1\n");
  CHECK(neg.find("grid.h") != std::string::npos);
  CHECK(neg.find("t.ini:2") != std::string::npos);
  const std::string unknown = parse_error("[grid]\nstepsize = 0.1\n");
  CHECK(unknown.find("grid.stepsize") != std::string::npos);
  CHECK(unknown.find("did you mean") != std::string::npos);
  CHECK_FALSE(parse_error("[grid]\nh = 0.1\nh = 0.2\n").empty());
  CHECK_FALSE(parse_error("[grid\nh = 0.1\n").empty());
  CHECK_FALSE(parse_error("h = 0.1\n").empty());
  CHECK_FALSE(parse_error("[time]\nhorizon = inf\n").empty());
  CHECK_FALSE(parse_error("[time]\nmethod = euler\n").empty());
  CHECK_FALSE(parse_error("[potential]\nkind = quartic\nparams = -1\n").empty());
  CHECK_FALSE(parse_error("[outputs]\nformats = json, xml\n").empty());
  CHECK(edit_distance("kitten", "sitting") == 3);
}

TEST_CASE("resolved config round-trips", "[config]") {
  ExperimentConfig cfg = parse_config_text(kQuadratic);
  CHECK(parse_config_text(to_ini(cfg)) == cfg);
  cfg.grid.radius = 6.0;
  cfg.time.dt = 0.01;
  cfg.potential = {"custom_poly", {0.0, 0.1, 0.5, 0.0, 0.02}};
  cfg.outputs.formats = {"json"};
  cfg.sim.seed = 12345678901234ULL;
  CHECK(parse_config_text(to_ini(cfg)) == cfg);
  for (const auto& key : config_keys()) CHECK(to_ini(cfg).find(key.substr(key.find('.') + 1)) != std::string::npos);
}

TEST_CASE("certify on the quadratic potential at h = 0.05", "[cli]") {
  const fs::path dir = scratch("certify");
  const fs::path cfg = write_config(dir, "[potential]\nkind = quadratic\nparams = 0.5\n[grid]\nh = 0.05\n");
  REQUIRE(run_flab("certify --config " + cfg.string() + " --out " + (dir / "out").string()) == kExitOk);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "certificate.json"));
  CHECK(j["best"]["method"] == "curvature");
  const double kappa = j["best"]["kappa"];
  CHECK(kappa > 0.85);
  CHECK(kappa <= 1.0);
  const double gap = j["spectral"]["gap"];
  CHECK(gap > 0.95);
  CHECK(gap < 1.05);
  CHECK(fs::exists(dir / "out" / "resolved.ini"));
  CHECK(parse_config(dir / "out" / "resolved.ini").grid.h == 0.05);
}

TEST_CASE("certify on a flat potential is a negative result", "[cli]") {
  const fs::path dir = scratch("flat");
  const fs::path cfg = write_config(
      dir, "[potential]\nkind = custom_poly\nparams = 0\n[grid]\nh = 0.1\nradius = 5\n");
  CHECK(run_flab("certify --config " + cfg.string() + " --out " + (dir / "out").string()) ==
        kExitNegative);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "certificate.json"));
  CHECK(j["curvature"]["valid"] == false);
  CHECK(j["lyapunov"]["valid"] == false);
  CHECK(j["best"]["valid"] == false);
}

TEST_CASE("exit code 1 on errors", "[cli]") {
  const fs::path dir = scratch("errors");
  const fs::path bad = write_config(dir, "[grid]\nh = -1\n");
  CHECK(run_flab("certify --config " + bad.string()) == kExitError);
  CHECK(run_flab("certify --config " + (dir / "missing.ini").string()) == kExitError);
  CHECK(run_flab("certify") == kExitError);
  CHECK(run_flab("frobnicate --config " + bad.string()) == kExitError);
  const fs::path good = write_config(dir, kQuadratic);
  CHECK(run_flab("simulate --config " + good.string() + " --seed -3") == kExitError);
}

TEST_CASE("identical configs give byte-identical JSON", "[cli][determinism]") {
  const fs::path dir = scratch("determinism");
  const fs::path cfg = write_config(
      dir, std::string(kQuadratic) + "[sim]\nn_paths = 2000\nhorizon = 2\n");
  for (const char* cmd : {"certify", "simulate", "evolve"}) {
    const std::string a = (dir / "a").string(), b = (dir / "b").string();
    REQUIRE(run_flab(std::string(cmd) + " --quiet --config " + cfg.string() + " --out " + a) == 0);
    REQUIRE(run_flab(std::string(cmd) + " --quiet --config " + cfg.string() + " --out " + b) == 0);
    for (const auto& entry : fs::directory_iterator(dir / "a")) {
      const auto name = entry.path().filename();
      if (name == "resolved.ini") continue;
      CHECK(slurp(entry.path()) == slurp(dir / "b" / name));
    }
  }
  REQUIRE(run_flab("simulate --quiet --config " + cfg.string() + " --seed 7 --out " + (dir / "c").string()) == 0);
  CHECK(slurp(dir / "a" / "ensemble.json") != slurp(dir / "c" / "ensemble.json"));
  CHECK(parse_config(dir / "c" / "resolved.ini").sim.seed == 7);
}

TEST_CASE("gap, evolve and validate-b artifacts", "[cli]") {
  const fs::path dir = scratch("artifacts");
  const fs::path cfg = write_config(dir, std::string(kQuadratic) + "[time]\nhorizon = 4\n");
  const std::string out = (dir / "out").string();
  REQUIRE(run_flab("gap --quiet --config " + cfg.string() + " --out " + out) == 0);
  CHECK(slurp(dir / "out" / "eigenfunction.csv").rfind("x,phi\n", 0) == 0);
  const auto g = nlohmann::json::parse(slurp(dir / "out" / "gap.json"));
  CHECK(g["gap"].get<double>() > 0.95);
  REQUIRE(run_flab("evolve --quiet --config " + cfg.string() + " --out " + out) == 0);
  CHECK(slurp(dir / "out" / "timeseries.csv").rfind("t,variance,mass,min_rho,sup_norm\n", 0) == 0);
  REQUIRE(run_flab("validate-b --quiet --config " + cfg.string() + " --out " + out) == 0);
  CHECK(fs::exists(dir / "out" / "b_validation.json"));
}

TEST_CASE("sweep writes one row per h", "[cli][sweep]") {
  const fs::path dir = scratch("sweep");
  const fs::path cfg = write_config(dir, kQuadratic);
  REQUIRE(run_flab("sweep --quiet --config " + cfg.string() + " --out " + (dir / "out").string()) == 0);
  std::istringstream in(slurp(dir / "out" / "sweep.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line == "h,N,lambda_tilde,theta,b,R,kappa_R,kappa,method,valid,gap");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
  const auto j = nlohmann::json::parse(slurp(dir / "out" / "sweep.json"));
  CHECK(j["routes"]["curvature"]["smallest_failing_h"].is_null());
  CHECK(j["routes"]["curvature"]["largest_valid_h"] == 0.5);
  CHECK(j["h_list"].size() == 4);
}

// The curvature constant moves from 0.55 at h = 0.5 to 0.93 at h = 0.05, so a
// 20% band across the whole h list does not hold; kept visible as may-fail.
TEST_CASE("sweep kappa stays within a 20% band", "[cli][sweep][!mayfail]") {
  const fs::path dir = scratch("sweep_band");
  const fs::path cfg = write_config(dir, kQuadratic);
  REQUIRE(run_flab("sweep --quiet --config " + cfg.string() + " --out " + (dir / "out").string()) == 0);
  std::istringstream in(slurp(dir / "out" / "sweep.csv"));
  std::string line;
  std::getline(in, line);
  double lo = 1e300, hi = 0.0;
  while (std::getline(in, line)) {
    std::istringstream row(line);
    std::string cell;
    for (int c = 0; c < 8; ++c) std::getline(row, cell, ',');
    const double kappa = std::stod(cell);
    lo = std::min(lo, kappa);
    hi = std::max(hi, kappa);
  }
  CHECK(hi <= 1.2 * lo);
}
