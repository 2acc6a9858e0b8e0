#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "puforge/matrix.hpp"
#include "puforge/model.hpp"
#include "puforge/rng.hpp"
#include "puforge/tape.hpp"

namespace puforge {

struct SslConfig {
  double w_u = 1.0;          // prediction-consistency weight
  double w_c = 0.1;          // feature-consistency weight
  double temperature = 0.5;  // sharpening temperature in (0, 1]
  double aug_strength = 0.1;
  double dropout = 0.05;
  std::string objective = "mixmatch-lite";

  void validate() const;
};

/// Cross-entropy between q = (y + 1) / 2 and sigmoid(logit).
double soft_label_loss(double logit, double y);
double soft_label_loss_derivative(double logit, double y);
double soft_label_loss(const Model& model, std::span<const double> x, double y);

/// p^(1/T) / (p^(1/T) + (1 - p)^(1/T)).
double sharpen(double p, double temperature);
/// (sharpen(p1, T) - p2)^2.
double consistency_penalty(double p1, double p2, double temperature);

/// Softmax over feature coordinates, floored at 1e-8 per coordinate and renormalized.
std::vector<double> normalize_features(std::span<const double> delta);
/// sum_k p_k ln(p_k / q_k) for probability vectors.
double kl_divergence(std::span<const double> p, std::span<const double> q);

/// Prediction consistency of x under two random augmentations.
double prediction_consistency(const Model& model, std::span<const double> x, Rng& rng,
                              const SslConfig& cfg);
/// KL(normalize(delta(view1)) || normalize(delta(view2))) for two random augmentations of x.
double feature_consistency(const Model& model, std::span<const double> x, Rng& rng,
                           const SslConfig& cfg);

/// One minibatch of D': labeled rows with targets in [-1, 1] and unlabeled rows.
struct PsBatch {
  FeatureMatrix labeled;
  std::vector<double> targets;
  FeatureMatrix unlabeled;
};

/// A batch with its augmented views drawn, so the objective is a deterministic
/// function of the parameters.
struct PreparedBatch {
  FeatureMatrix labeled;
  std::vector<double> targets;
  FeatureMatrix unlabeled;
  // Two views per example; labeled rows first, then unlabeled rows.
  FeatureMatrix view1;
  FeatureMatrix view2;
};

PreparedBatch prepare_batch(PsBatch batch, const SslConfig& cfg, Rng& rng);

/// Pseudo-supervised objective over D'. Implementations must be independent of
/// the class prior.
class PsObjective {
 public:
  virtual ~PsObjective() = default;
  [[nodiscard]] virtual std::string_view name() const = 0;
  /// Builds the loss on `tape` and seeds its gradients.
  virtual double loss(Tape& tape, const PreparedBatch& batch) const = 0;
};

/// Soft-label cross-entropy on the labeled part, plus w_u times the sharpened
/// prediction consistency on the unlabeled part, plus w_c times the feature KL
/// consistency over the whole batch. The sharpened target carries no gradient.
class MixMatchLite final : public PsObjective {
 public:
  explicit MixMatchLite(SslConfig cfg);
  [[nodiscard]] std::string_view name() const override { return "mixmatch-lite"; }
  double loss(Tape& tape, const PreparedBatch& batch) const override;

 private:
  SslConfig cfg_;
};

/// Factory keyed by SslConfig::objective.
std::unique_ptr<PsObjective> make_objective(const SslConfig& cfg);

LossClosure ps_closure(const PsObjective& objective, const PreparedBatch& batch);

/// Draws views and returns the objective value for `batch`.
double ps_objective(const Model& model, const PsBatch& batch, const SslConfig& cfg, Rng& rng);

}  // namespace puforge
