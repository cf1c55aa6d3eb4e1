#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cbp/experiment.hpp"

namespace {

// exit codes
constexpr int kPass = 0;
constexpr int kThresholdFailed = 1;
constexpr int kConfigError = 2;
constexpr int kNumericalError = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Critical CB process experiments"};
  std::string experiment, config_path, out_dir;
  std::optional<std::uint64_t> seed;
  std::string names;
  for (auto const& n : cbp::experiment_names()) names += (names.empty() ? "" : ", ") + n;
  app.add_option("experiment", experiment, "one of: " + names)->required();
  app.add_option("--config", config_path, "key-value config file")->required();
  app.add_option("--out", out_dir, "output directory (default: $CB_OUT_DIR, else .)");
  app.add_option("--seed", seed, "RNG seed, overrides the config");
  CLI11_PARSE(app, argc, argv);

  if (out_dir.empty()) {
    const char* env = std::getenv("CB_OUT_DIR");
    out_dir = env && *env ? env : ".";
  }

  cbp::ExperimentConfig config;
  try {
    auto kv = cbp::KeyValueFile::load(config_path);
    config = cbp::read_config(kv, experiment, seed,
                              std::filesystem::path(config_path).parent_path());
  } catch (cbp::Error const& e) {
    std::cerr << "cb: " << e.what() << '\n';
    return kConfigError;
  }

  try {
    auto result = cbp::run_experiment(config);
    cbp::write_outputs(config, result, out_dir);
    for (auto const& line : result.summary) std::cout << line << '\n';
    std::cout << experiment << ": " << (result.passed ? "PASS" : "FAIL") << " (config "
              << config.config_hash << ")\n";
    return result.passed ? kPass : kThresholdFailed;
  } catch (cbp::Error const& e) {
    std::cerr << "cb " << experiment << ": " << e.what() << '\n';
    return e.code() == cbp::ErrorCode::config ? kConfigError : kNumericalError;
  }
}
