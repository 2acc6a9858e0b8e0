#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "puforge/cli/config.hpp"
#include "puforge/data.hpp"
#include "puforge/metrics.hpp"
#include "puforge/orchestrator.hpp"

namespace puforge::cli {

/// Training data and held-out evaluation set for one run.
struct RunData {
  PUDataset train;
  LabeledSet eval;
};

/// Synthetic data is generated from data.seed (or the run seed); CSV data is
/// loaded from data.path, evaluated on data.test_path or, without one, on the
/// unlabeled pool's hidden labels.
RunData prepare_data(const ExperimentConfig& cfg, std::uint64_t seed);

struct GenDataReport {
  std::filesystem::path data_file;
  std::filesystem::path test_file;
  std::size_t rows = 0;
  std::size_t n_labeled = 0;
  std::size_t n_unlabeled = 0;
  double empirical_prior = 0.0;
  /// 3 * sqrt(prior (1 - prior) / n_total).
  double tolerance = 0.0;
  bool within_tolerance = false;
};

/// Writes data.csv (PU training set) and test.csv (labeled evaluation set).
GenDataReport cmd_gen_data(const ExperimentConfig& cfg, const std::filesystem::path& out_dir,
                           std::ostream& log);

struct SeedRun {
  std::uint64_t seed = 0;
  TrainResult result;
};

struct TrainReport {
  std::vector<SeedRun> runs;
  nlohmann::json summary;
};

/// Per seed: seed_<s>/metrics.csv, events.log and model snapshots. Top level:
/// summary.json (finals per seed, mean and sample std) and config.resolved.
TrainReport cmd_train(const ExperimentConfig& cfg, Method method,
                      const std::filesystem::path& out_dir, std::ostream& log);

struct GapRow {
  std::size_t epoch = 0;
  RiskGap risk;
};

struct GapReport {
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<GapRow>> rows;  // per seed, epoch 0..E
};

/// Trains `method` and writes seed_<s>/gap.csv with the labeled-positive risk,
/// the oracle risk on hidden unlabeled positives and their gap for every epoch
/// (epoch 0 is the initial model), plus per-epoch g_pu snapshots and an
/// optional SVG chart.
GapReport cmd_diagnose_gap(const ExperimentConfig& cfg, Method method,
                           const std::filesystem::path& out_dir, std::ostream& log);

enum class Sweep { NsRatio, TransferMode, MixupOnOff };
std::string_view to_string(Sweep sweep);
Sweep parse_sweep(std::string_view text);

struct AblationRow {
  std::string sweep;
  std::string value;
  std::uint64_t seed = 0;
  MetricsRecord final_metrics;
};

/// One row per (sweep value, seed, classifier) in ablation.csv, plus
/// ablation_summary.csv with mean and std of each metric per (value, classifier).
std::vector<AblationRow> cmd_ablate(const ExperimentConfig& cfg, Sweep sweep,
                                    const std::filesystem::path& out_dir, std::ostream& log);

/// metrics.csv body for one run.
std::string format_metrics_csv(const std::vector<MetricsRecord>& history);

/// mean and sample standard deviation (0 for a single value).
std::pair<double, double> mean_std(const std::vector<double>& values);

/// Last record of `classifier` in `history`.
const MetricsRecord& final_record(const std::vector<MetricsRecord>& history, Classifier classifier);

/// Maximum number of concurrent seed workers: PU_FORGE_THREADS if set, else
/// the hardware concurrency; never more than `jobs`.
std::size_t worker_count(std::size_t jobs);

/// Entry point of the pu-forge executable. Exit codes: 0 success, 1 usage or
/// config error, 2 numeric abort, 3 IO error.
int run(int argc, char** argv);

}  // namespace puforge::cli
