#pragma once

#include <span>

#include "puforge/matrix.hpp"
#include "puforge/model.hpp"
#include "puforge/tape.hpp"

namespace puforge {

enum class Estimator { Unbiased, NonNegative };

struct RiskConfig {
  /// Class prior pi_p in (0, 1). The negative prior is always 1 - prior.
  double prior = 0.1;
  Estimator estimator = Estimator::NonNegative;
  /// Defect-correction threshold: a negative part below -beta triggers the correction step.
  double beta = 0.0;
  /// Scale of the defect-correction step.
  double gamma = 1.0;

  [[nodiscard]] double negative_prior() const noexcept { return 1.0 - prior; }
  void validate() const;
};

struct RiskBreakdown {
  double positive_risk = 0.0;          // mean l(g(x), +1) over D_p
  double positive_as_negative = 0.0;   // mean l(g(x), -1) over D_p
  double unlabeled_as_negative = 0.0;  // mean l(g(x), -1) over D_u
  double negative_part = 0.0;          // unlabeled_as_negative - prior * positive_as_negative
  double total = 0.0;
};

/// Sigmoid loss 1 / (1 + exp(y z)). y must be +1 or -1.
double surrogate_loss(double z, int y);
/// d/dz of surrogate_loss.
double surrogate_loss_derivative(double z, int y);

/// Mean surrogate loss of the model's logits on X against `target`.
double empirical_risk(const Model& model, const FeatureMatrix& X, int target);
double empirical_risk(std::span<const double> logits, int target);

/// pi_p R_p^+ + R_u^- - pi_p R_p^-, from precomputed logits.
RiskBreakdown upu_risk(std::span<const double> positive_logits,
                       std::span<const double> unlabeled_logits, const RiskConfig& cfg);
/// pi_p R_p^+ + max(0, R_u^- - pi_p R_p^-), from precomputed logits.
RiskBreakdown nnpu_risk(std::span<const double> positive_logits,
                        std::span<const double> unlabeled_logits, const RiskConfig& cfg);

RiskBreakdown upu_risk(const Model& model, const FeatureMatrix& positives,
                       const FeatureMatrix& unlabeled, const RiskConfig& cfg);
RiskBreakdown nnpu_risk(const Model& model, const FeatureMatrix& positives,
                        const FeatureMatrix& unlabeled, const RiskConfig& cfg);

/// The scalar whose gradient one PU training step follows.
///
/// uPU: the uPU total. nnPU: the nnPU total while the negative part stays at
/// or above -beta; otherwise -gamma * negative_part, which pushes the negative
/// part back up (the defect-correction step). The returned value is the
/// objective that was differentiated, and `breakdown` (if given) receives the
/// risk components of the batch.
LossClosure pu_training_objective(const FeatureMatrix& positives, const FeatureMatrix& unlabeled,
                                  const RiskConfig& cfg, RiskBreakdown* breakdown = nullptr);

}  // namespace puforge
