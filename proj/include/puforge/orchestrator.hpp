#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "puforge/data.hpp"
#include "puforge/metrics.hpp"
#include "puforge/model.hpp"
#include "puforge/pseudo.hpp"
#include "puforge/risk.hpp"
#include "puforge/rng.hpp"
#include "puforge/ssl.hpp"

namespace puforge {

enum class TransferMode { Independent, Inherit, Pkt };
enum class Method { Upu, Nnpu, Pspu };

std::string_view to_string(TransferMode mode);
TransferMode parse_transfer_mode(std::string_view text);
std::string_view to_string(Method method);
Method parse_method(std::string_view text);

struct PspuConfig {
  std::size_t epochs = 30;
  /// Share of g_pu kept by the progressive transfer.
  double lambda = 0.9;
  std::size_t batch_size = 64;
  /// Minibatches per epoch; nullopt means ceil(N_u / batch_size).
  std::optional<std::size_t> steps_pu;
  std::optional<std::size_t> steps_ps;
  double lr_pu = 0.05;
  double lr_ps = 0.05;
  double momentum = 0.9;
  TransferMode transfer = TransferMode::Pkt;
  /// Re-seed g_ps from the freshly trained g_pu every epoch, whatever the transfer mode.
  bool reinit_ps = false;
  std::vector<std::size_t> hidden = {64, 64};
  std::uint64_t seed = 1;
  SelectionConfig selection;
  SslConfig ssl;
  RiskConfig risk;

  void validate() const;
  [[nodiscard]] std::vector<std::size_t> layers(std::size_t input_dim) const;
};

/// lambda * theta_pu + (1 - lambda) * theta_ps, elementwise.
std::vector<double> pkt_transfer(std::span<const double> theta_pu, std::span<const double> theta_ps,
                                 double lambda);

struct PseudoSummary {
  std::size_t n_s = 0;
  std::size_t count = 0;
  double mean_label = 0.0;
  std::size_t rest = 0;
};

struct EpochArtifacts {
  std::size_t epoch = 0;  // 1-based
  std::vector<double> theta_pu;                  // after the transfer
  std::vector<double> theta_pu_before_transfer;  // after the PU updates
  std::vector<double> theta_ps;
  Partition partition;
  PseudoSummary pseudo;
  std::optional<MetricsRecord> pu_metrics;
  std::optional<MetricsRecord> ps_metrics;
  std::size_t steps_pu = 0;
  std::size_t steps_ps = 0;
  double mean_pu_objective = 0.0;
  double mean_ps_objective = 0.0;
  std::size_t defect_steps = 0;
};

/// Everything that persists across epochs.
struct PspuState {
  Model g_pu;
  Model g_ps;
  SgdOptimizer opt_pu;
  SgdOptimizer opt_ps;
  std::size_t epoch = 0;
  Rng pu_rng;
  Rng ps_rng;
  Rng mix_rng;
  Rng aug_rng;

  PspuState(const PspuConfig& cfg, std::size_t input_dim);
};

/// Model initialization shared by every method, so runs with one seed start equal.
Model initial_model(const PspuConfig& cfg, std::size_t input_dim);

/// One training epoch: PU updates, scoring, confident selection, mixing,
/// D' assembly, pseudo-supervised updates and the transfer selected by cfg.transfer.
/// `evaluator` (optional) fills the metrics of both classifiers.
EpochArtifacts run_epoch(PspuState& state, const TrainView& data, const PspuConfig& cfg,
                         const Evaluator* evaluator = nullptr);

/// One epoch of PU-only minibatch training (uPU or nnPU by cfg.risk.estimator).
struct PuPhaseStats {
  std::size_t steps = 0;
  double mean_objective = 0.0;
  std::size_t defect_steps = 0;
};
PuPhaseStats pu_phase(Model& model, SgdOptimizer& opt, const TrainView& data,
                      const PspuConfig& cfg, Rng& rng, std::size_t epoch);

struct TrainResult {
  Model g_pu;
  std::optional<Model> g_ps;
  std::optional<MetricsRecord> initial;  // g_pu before any update
  std::vector<MetricsRecord> history;    // epoch-ordered; g_pu before g_ps within an epoch
  std::size_t total_steps = 0;
};

using EpochObserver = std::function<void(const EpochArtifacts&)>;

/// Runs cfg.epochs epochs of PSPU and returns both classifiers.
TrainResult train_pspu(const PspuConfig& cfg, const TrainView& data,
                       const Evaluator* evaluator = nullptr, const EpochObserver& observer = {});

/// PU-only baseline with the same initialization and batch schedule as PSPU's g_pu.
TrainResult train_pu(const PspuConfig& cfg, const TrainView& data, Estimator estimator,
                     const Evaluator* evaluator = nullptr, const EpochObserver& observer = {});

TrainResult train(Method method, const PspuConfig& cfg, const TrainView& data,
                  const Evaluator* evaluator = nullptr, const EpochObserver& observer = {});

}  // namespace puforge
