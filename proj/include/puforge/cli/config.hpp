#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "puforge/data.hpp"
#include "puforge/orchestrator.hpp"

namespace puforge::cli {

/// Bad or unknown configuration entry.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class DataSource { Synthetic, Csv };

/// Every knob of an experiment. Parsed from flat `section.key = value` text.
struct ExperimentConfig {
  std::vector<std::uint64_t> seeds = {1};
  Method method = Method::Pspu;
  std::string out_dir = "runs/default";
  bool plot = true;

  DataSource source = DataSource::Synthetic;
  std::string data_path;
  std::string test_path;
  GaussianSpec gaussian;
  std::size_t n_test = 2000;
  /// Seed of generated data; nullopt ties it to each run's seed.
  std::optional<std::uint64_t> data_seed;
  /// Prior handed to the risk estimator; nullopt uses data.prior.
  std::optional<double> risk_prior;

  /// Training knobs. train.seed and train.risk.prior are filled per run.
  PspuConfig train;

  /// PspuConfig for one seed, with the prior resolved.
  [[nodiscard]] PspuConfig run_config(std::uint64_t seed) const;
  void validate() const;
};

/// Parses `key = value` lines; `#` starts a comment. Unknown or repeated keys
/// raise ConfigError naming the line.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Applies one `key=value` assignment on top of an existing config.
void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value);

/// Every key with its resolved value, one per line, in a fixed order.
std::string dump_config(const ExperimentConfig& cfg);

/// All recognised keys, in dump order.
std::vector<std::string> config_keys();

}  // namespace puforge::cli
