#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mre/config.hpp"
#include "mre/error.hpp"
#include "mre/log.hpp"
#include "mre/pipeline.hpp"

namespace {

mre::ExperimentConfig load(const std::string& path, const std::string& out, const std::string& seed) {
  mre::ExperimentConfig cfg = mre::load_config(path);
  if (!seed.empty()) {
    // Re-parse so every derived stage seed follows the override.
    nlohmann::json doc = cfg.source;
    try {
      doc["seed"] = std::stoull(seed);
    } catch (const std::exception&) {
      throw mre::Error(mre::ErrorKind::ConfigError, "--seed: not a non-negative integer: " + seed);
    }
    cfg = mre::parse_config(doc.dump(2));
  }
  if (!out.empty()) cfg.output_dir = out;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Model-form error estimation and rectification for linear structural models"};
  app.require_subcommand(1);

  std::string config, out, seed, basis;
  int verbose = 0;
  bool quiet = false;
  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config, "Experiment configuration (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--out", out, "Output directory (overrides output_dir)");
    cmd->add_option("--seed", seed, "Global seed (overrides the configured seed)");
    cmd->add_flag("-v,--verbose", verbose, "More log output; repeat for debug");
    cmd->add_flag("-q,--quiet", quiet, "Errors only");
  };
  auto* simulate = app.add_subcommand("simulate", "Simulate the true system and the sensor records");
  auto* infer = app.add_subcommand("infer", "MAP hyperparameters, smoothed states and latent forces");
  auto* train = app.add_subcommand("train-surrogate", "Fit the neural surrogate to the smoothed estimates");
  auto* predict = app.add_subcommand("predict", "Rectified prediction under the test excitation");
  auto* report = app.add_subcommand("report", "Results table from the stored artifacts");
  for (auto* cmd : {simulate, infer, train, predict, report}) common(cmd);
  predict->add_option("--basis", basis, "alt_mesh, or a basis JSON file from another mesh");

  CLI11_PARSE(app, argc, argv);

  mre::set_log_level(quiet ? mre::LogLevel::Quiet
                     : verbose >= 2 ? mre::LogLevel::Debug
                     : verbose == 1 ? mre::LogLevel::Info
                                    : mre::LogLevel::Warning);
  try {
    const mre::ExperimentConfig cfg = load(config, out, seed);
    if (*simulate) {
      mre::run_simulate(cfg);
    } else if (*infer) {
      mre::run_infer(cfg);
    } else if (*train) {
      mre::run_train_surrogate(cfg);
    } else if (*predict) {
      mre::run_predict(cfg, basis);
    } else if (*report) {
      const nlohmann::json table = mre::run_report(cfg);
      std::cout << table.dump(2) << "\n";
    }
  } catch (const mre::Error& e) {
    std::cerr << "mre: " << e.what() << "\n";
    return mre::exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "mre: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
