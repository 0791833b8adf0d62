#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pumpkit/commands.hpp"
#include "pumpkit/errors.hpp"

namespace {

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "experiment config file")
      ->required();
  cmd->add_option("--seed", opts.seed, "override the ensemble seed");
  cmd->add_option("--out", opts.out_dir, "override the output directory");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pump-circuit simulation and calibration toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;
  int (*verb)(const pumpkit::io::ExperimentConfig&) = nullptr;

  for (auto [name, desc, fn] :
       {std::tuple{"calibrate",
                   "band structure, winding and gate-angle tables",
                   &pumpkit::io::cmd_calibrate},
        std::tuple{"simulate", "run the tube-ensemble echo protocol",
                   &pumpkit::io::cmd_simulate},
        std::tuple{"analyze", "fit and Fourier-analyze simulated traces",
                   &pumpkit::io::cmd_analyze},
        std::tuple{"report", "summarize all artifacts in one report",
                   &pumpkit::io::cmd_report}}) {
    CLI::App* cmd = app.add_subcommand(name, desc);
    add_common(cmd, opts);
    cmd->callback([&verb, fn] { verb = fn; });
  }

  CLI11_PARSE(app, argc, argv);

  try {
    const pumpkit::io::ExperimentConfig cfg =
        pumpkit::io::load_config(opts.config_path, opts.seed, opts.out_dir);
    return verb(cfg);
  } catch (const pumpkit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const pumpkit::NumericError& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return 3;
  } catch (const pumpkit::MissingArtifactError& e) {
    std::cerr << "missing artifact: " << e.what() << '\n';
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
