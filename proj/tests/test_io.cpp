#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "pumpkit/commands.hpp"
#include "pumpkit/config.hpp"
#include "pumpkit/errors.hpp"

using namespace pumpkit;
namespace fs = std::filesystem;

namespace {

const char* kSmallConfig = R"(# minimal experiment recipe
[lattice]
v_x = 7.603
v_xint = 0.261
v_z = 27.03

[pump]
period_s = 5e-3
n_samples = 64

[hubbard]
u = 2.5

[circuit]
alphas = [1, 2, 1]

[sto]
f1_hz = 216.5
tau_max_s = 6e-3
n_tau = 31

[ensemble]
n_tubes = 12
n_cells = 8
seed = 42

[output]
dir = "out"
)";

fs::path make_temp_dir() {
  static int counter = 0;
  fs::path dir = fs::temp_directory_path() /
                 ("pumpkit_io_test_" + std::to_string(::getpid()) + "_" +
                  std::to_string(counter++));
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
  const fs::path p = dir / "exp.toml";
  std::ofstream(p) << text;
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  const char* bin = std::getenv("PUMPKIT_BIN");
  REQUIRE_MESSAGE(bin != nullptr, "PUMPKIT_BIN must point at the CLI binary");
  const int rc = std::system((std::string(bin) + " " + args).c_str());
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("config parsing and canonical round trip") {
  const fs::path dir = make_temp_dir();
  const fs::path cfg_path = write_config(dir, kSmallConfig);
  const auto cfg = io::load_config(cfg_path);

  SUBCASE("values land in the right places") {
    CHECK(cfg.potential.V_X == doctest::Approx(7.603));
    CHECK(cfg.pump.period_s == doctest::Approx(5e-3));
    CHECK(cfg.circ.depth() == 3);
    CHECK(cfg.circ.layers[1].alpha == doctest::Approx(2.0));
    CHECK(cfg.sto.tau_s.size() == 31);
    CHECK(cfg.sto.tau_s.back() == doctest::Approx(6e-3));
    CHECK(cfg.tube.seed == 42);
    CHECK(cfg.n_tubes == 12);
  }
  SUBCASE("serialize(parse(file)) is a fixed point") {
    const auto canon = cfg.canonical();
    const fs::path json_path = dir / "canon.json";
    std::ofstream(json_path) << canon.dump(2);
    const auto cfg2 = io::load_config(json_path);
    CHECK(cfg2.canonical() == canon);
    CHECK(cfg2.hash == cfg.hash);
  }
  SUBCASE("CLI overrides are hashed into the effective config") {
    const auto cfg2 = io::load_config(cfg_path, 99, std::nullopt);
    CHECK(cfg2.tube.seed == 99);
    CHECK(cfg2.hash != cfg.hash);
  }
  SUBCASE("unknown keys and sections are rejected") {
    const fs::path bad1 = dir / "bad1.toml";
    std::ofstream(bad1) << kSmallConfig << "\n[lattice]\nv_bogus = 1\n";
    CHECK_THROWS_AS(io::load_config(bad1), ConfigError);
    const fs::path bad2 = dir / "bad2.toml";
    std::ofstream(bad2) << kSmallConfig << "\n[bogus_section]\nx = 1\n";
    CHECK_THROWS_AS(io::load_config(bad2), ConfigError);
  }
  SUBCASE("invalid physics values are rejected by name") {
    const fs::path bad = dir / "bad3.toml";
    std::ofstream(bad) << "[lattice]\nv_x = -2.0\n";
    CHECK_THROWS_WITH_AS(io::load_config(bad), doctest::Contains("V_X"),
                         ConfigError);
  }
  fs::remove_all(dir);
}

TEST_CASE("circuit description files") {
  const fs::path dir = make_temp_dir();
  const fs::path circ_path = dir / "circ.json";
  std::ofstream(circ_path) << R"({
    "layers": [{"alpha": 1.0}, {"alpha": 2.0, "bonds": {"12": 1.0}}],
    "period_s": 4e-3, "direction": -1})";
  const auto circ = io::load_circuit_file(circ_path);
  CHECK(circ.depth() == 2);
  CHECK(circ.layers[1].alpha_for_bond(12) == doctest::Approx(1.0));
  CHECK(circ.layers[1].alpha_for_bond(10) == doctest::Approx(2.0));
  CHECK(circ.period_s == doctest::Approx(4e-3));
  CHECK(circ.direction == -1);

  SUBCASE("referenced from a config, resolved relative to it") {
    std::string text(kSmallConfig);
    const auto pos = text.find("alphas = [1, 2, 1]");
    text.replace(pos, 18, "file = \"circ.json\"");
    const auto cfg = io::load_config(write_config(dir, text));
    CHECK(cfg.circ.depth() == 2);
    CHECK(cfg.circ.layers[1].alpha_for_bond(12) == doctest::Approx(1.0));
  }
  fs::remove_all(dir);
}

TEST_CASE("trace CSV round trip") {
  const fs::path dir = make_temp_dir();
  circuit::TimeTrace tr;
  tr.f1_hz = 216.5;
  tr.seed = 7;
  for (int k = 0; k < 20; ++k) {
    tr.tau_s.push_back(k * 1.7e-4);
    tr.value.push_back(0.5 + 0.3 * std::sin(0.61 * k));
    tr.stderr_value.push_back(0.01 * k);
  }
  const fs::path p = dir / "trace.csv";
  io::write_trace_csv(p, tr, 0xabcdef);
  const auto back = io::read_trace_csv(p);
  CHECK(back.tau_s == tr.tau_s);
  CHECK(back.value == tr.value);
  CHECK(back.stderr_value == tr.stderr_value);
  CHECK(back.f1_hz == tr.f1_hz);
  CHECK(back.seed == tr.seed);
  CHECK(slurp(p).find("config_hash=0000000000abcdef") != std::string::npos);

  SUBCASE("malformed rows report the line") {
    std::ofstream(p, std::ios::app) << "1e-3,not_a_number\n";
    CHECK_THROWS_WITH_AS(io::read_trace_csv(p), doctest::Contains(":26:"),
                         ConfigError);
  }
  fs::remove_all(dir);
}

TEST_CASE("command pipeline end to end") {
  const fs::path dir = make_temp_dir();
  const fs::path cfg_path = write_config(dir, kSmallConfig);
  const std::string base =
      "--config " + cfg_path.string() + " --out " + (dir / "out").string();

  SUBCASE("simulate then analyze then report") {
    CHECK(run_cli("simulate " + base) == 0);
    CHECK(fs::exists(dir / "out" / "trace.csv"));
    CHECK(fs::exists(dir / "out" / "histogram.json"));
    CHECK(run_cli("analyze " + base) == 0);
    CHECK(fs::exists(dir / "out" / "fit_report.json"));
    CHECK(fs::exists(dir / "out" / "amplitudes.csv"));
    CHECK(fs::exists(dir / "out" / "spectrum.csv"));
    CHECK(run_cli("report " + base) == 0);
    const std::string report = slurp(dir / "out" / "report.md");
    CHECK(report.find("Missing artifacts") != std::string::npos);  // no calibrate
    CHECK(slurp(dir / "out" / "report.json").find("histogram_vs_fit") !=
          std::string::npos);
  }
  SUBCASE("determinism: identical config and seed are byte-identical") {
    REQUIRE(run_cli("simulate " + base) == 0);
    const std::string first = slurp(dir / "out" / "trace.csv");
    const std::string first_hist = slurp(dir / "out" / "histogram.json");
    REQUIRE(run_cli("simulate " + base) == 0);
    CHECK(slurp(dir / "out" / "trace.csv") == first);
    CHECK(slurp(dir / "out" / "histogram.json") == first_hist);
  }
  SUBCASE("seed override changes the trace") {
    REQUIRE(run_cli("simulate " + base) == 0);
    const std::string first = slurp(dir / "out" / "trace.csv");
    REQUIRE(run_cli("simulate " + base + " --seed 43") == 0);
    CHECK(slurp(dir / "out" / "trace.csv") != first);
  }
  SUBCASE("exit codes: 2 config, 3 numeric, 4 missing artifact") {
    CHECK(run_cli("simulate --config " + (dir / "nope.toml").string()) == 2);
    CHECK(run_cli("analyze " + base) == 4);  // no trace yet in a fresh dir
    const fs::path bad = dir / "bad.toml";
    std::ofstream(bad) << kSmallConfig << "\n[sto]\ntau_max_s = 1e-4\n";
    CHECK(run_cli("simulate --config " + bad.string() + " --out " +
                  (dir / "out2").string()) == 0);
    // trace much shorter than 1/f1: analysis must fail numerically
    CHECK(run_cli("analyze --config " + bad.string() + " --out " +
                  (dir / "out2").string()) == 3);
  }
  fs::remove_all(dir);
}

TEST_CASE("calibrate artifacts") {
  const fs::path dir = make_temp_dir();
  std::string text(kSmallConfig);
  text += "\n[gates]\nvx_points = 3\nperiod_points = 5\ntargets = [1.0]\n";
  const fs::path cfg_path = write_config(dir, text);
  const std::string base =
      "--config " + cfg_path.string() + " --out " + (dir / "out").string();
  REQUIRE(run_cli("calibrate " + base) == 0);
  for (const char* name : {"schedule.csv", "schedule.json", "winding.json",
                           "alpha_vs_period.csv", "alpha_vs_vx.csv",
                           "gates.json"})
    CHECK(fs::exists(dir / "out" / name));

  SUBCASE("every artifact embeds the config hash") {
    const auto cfg = io::load_config(cfg_path, std::nullopt,
                                     (dir / "out").string());
    const std::string tag = io::hash_hex(cfg.hash);
    for (const char* name : {"schedule.csv", "schedule.json", "winding.json",
                             "gates.json"})
      CHECK(slurp(dir / "out" / name).find(tag) != std::string::npos);
  }
  SUBCASE("winding report matches the pump topology") {
    const auto j = nlohmann::json::parse(slurp(dir / "out" / "winding.json"));
    CHECK(j["band0_sites"].get<double>() == doctest::Approx(2.0).epsilon(1e-3));
    CHECK(j["band1_sites"].get<double>() == doctest::Approx(-2.0).epsilon(1e-3));
  }
  SUBCASE("a pump period achieving alpha = 1 is reported") {
    const auto j = nlohmann::json::parse(slurp(dir / "out" / "gates.json"));
    bool found = false;
    for (const auto& row : j["calibrations"])
      if (row.contains("period_s") &&
          std::abs(row["achieved_alpha"].get<double>() - 1.0) < 1e-4)
        found = true;
    CHECK(found);
  }
  fs::remove_all(dir);
}

TEST_CASE("pump-off calibration emits zero winding and empty gate tables") {
  const fs::path dir = make_temp_dir();
  std::string text(kSmallConfig);
  const auto pos = text.find("v_xint = 0.261");
  text.replace(pos, 14, "v_xint = 0.0");
  const fs::path cfg_path = write_config(dir, text);
  REQUIRE(run_cli("calibrate --config " + cfg_path.string() + " --out " +
                  (dir / "out").string()) == 0);
  const auto w = nlohmann::json::parse(slurp(dir / "out" / "winding.json"));
  CHECK(w["band0_sites"].get<double>() == 0.0);
  CHECK(w.contains("note"));
  const auto g = nlohmann::json::parse(slurp(dir / "out" / "gates.json"));
  CHECK(g["alpha_vs_period"].empty());
  CHECK(g.contains("note"));
  fs::remove_all(dir);
}
