#include "puforge/risk.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "puforge/error.hpp"

namespace puforge {
namespace {

void check_label(int y) {
  if (y != 1 && y != -1) throw InvalidArgument("surrogate_loss: label must be +1 or -1");
}

std::vector<double> logits_of(const Model& model, const FeatureMatrix& X) {
  std::vector<double> out;
  out.reserve(X.rows());
  for (std::size_t i = 0; i < X.rows(); ++i) out.push_back(forward(model, X.row(i)));
  return out;
}

RiskBreakdown breakdown_from_logits(std::span<const double> lp, std::span<const double> lu,
                                    const RiskConfig& cfg) {
  cfg.validate();
  if (lp.empty() || lu.empty()) throw InvalidArgument("PU risk: empty positive or unlabeled set");
  RiskBreakdown r;
  r.positive_risk = empirical_risk(lp, +1);
  r.positive_as_negative = empirical_risk(lp, -1);
  r.unlabeled_as_negative = empirical_risk(lu, -1);
  r.negative_part = r.unlabeled_as_negative - cfg.prior * r.positive_as_negative;
  return r;
}

}  // namespace

void RiskConfig::validate() const {
  if (!(prior > 0.0 && prior < 1.0)) throw InvalidArgument("RiskConfig: prior must lie in (0, 1)");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidArgument("RiskConfig: bad gamma");
  if (!(beta >= 0.0) || !std::isfinite(beta)) throw InvalidArgument("RiskConfig: bad beta");
}

double surrogate_loss(double z, int y) {
  check_label(y);
  return 1.0 / (1.0 + std::exp(static_cast<double>(y) * z));
}

double surrogate_loss_derivative(double z, int y) {
  check_label(y);
  const double l = surrogate_loss(z, y);
  return -static_cast<double>(y) * l * (1.0 - l);
}

double empirical_risk(std::span<const double> logits, int target) {
  if (logits.empty()) throw InvalidArgument("empirical_risk: empty example set");
  double acc = 0.0;
  for (double z : logits) acc += surrogate_loss(z, target);
  return acc / static_cast<double>(logits.size());
}

double empirical_risk(const Model& model, const FeatureMatrix& X, int target) {
  if (X.empty()) throw InvalidArgument("empirical_risk: empty example set");
  return empirical_risk(logits_of(model, X), target);
}

RiskBreakdown upu_risk(std::span<const double> lp, std::span<const double> lu,
                       const RiskConfig& cfg) {
  RiskBreakdown r = breakdown_from_logits(lp, lu, cfg);
  r.total = cfg.prior * r.positive_risk + r.negative_part;
  return r;
}

RiskBreakdown nnpu_risk(std::span<const double> lp, std::span<const double> lu,
                        const RiskConfig& cfg) {
  RiskBreakdown r = breakdown_from_logits(lp, lu, cfg);
  r.total = cfg.prior * r.positive_risk + std::max(0.0, r.negative_part);
  return r;
}

RiskBreakdown upu_risk(const Model& model, const FeatureMatrix& positives,
                       const FeatureMatrix& unlabeled, const RiskConfig& cfg) {
  return upu_risk(logits_of(model, positives), logits_of(model, unlabeled), cfg);
}

RiskBreakdown nnpu_risk(const Model& model, const FeatureMatrix& positives,
                        const FeatureMatrix& unlabeled, const RiskConfig& cfg) {
  return nnpu_risk(logits_of(model, positives), logits_of(model, unlabeled), cfg);
}

LossClosure pu_training_objective(const FeatureMatrix& positives, const FeatureMatrix& unlabeled,
                                  const RiskConfig& cfg, RiskBreakdown* breakdown) {
  cfg.validate();
  if (positives.empty() || unlabeled.empty()) {
    throw InvalidArgument("PU objective: empty positive or unlabeled batch");
  }
  return [&positives, &unlabeled, cfg, breakdown](Tape& tape) {
    std::vector<Tape::Node> pn, un;
    std::vector<double> lp, lu;
    for (std::size_t i = 0; i < positives.rows(); ++i) {
      pn.push_back(tape.forward(positives.row(i)));
      lp.push_back(tape.logit(pn.back()));
    }
    for (std::size_t i = 0; i < unlabeled.rows(); ++i) {
      un.push_back(tape.forward(unlabeled.row(i)));
      lu.push_back(tape.logit(un.back()));
    }
    const RiskBreakdown r = cfg.estimator == Estimator::NonNegative ? nnpu_risk(lp, lu, cfg)
                                                                    : upu_risk(lp, lu, cfg);
    if (breakdown != nullptr) *breakdown = r;

    const double inv_p = 1.0 / static_cast<double>(lp.size());
    const double inv_u = 1.0 / static_cast<double>(lu.size());
    const bool defect =
        cfg.estimator == Estimator::NonNegative && r.negative_part < -cfg.beta;
    // Coefficients on the three component risks in the differentiated objective.
    double c_pos = cfg.prior;   // R_p^+
    double c_neg = 1.0;         // negative part
    double value = r.total;
    if (defect) {
      c_pos = 0.0;
      c_neg = -cfg.gamma;
      value = -cfg.gamma * r.negative_part;
    } else if (cfg.estimator == Estimator::NonNegative && r.negative_part < 0.0) {
      // Inside the tolerance band the clamp is flat.
      c_neg = 0.0;
    }
    for (std::size_t i = 0; i < lp.size(); ++i) {
      const double g = c_pos * surrogate_loss_derivative(lp[i], +1) -
                       c_neg * cfg.prior * surrogate_loss_derivative(lp[i], -1);
      tape.add_logit_grad(pn[i], g * inv_p);
    }
    for (std::size_t i = 0; i < lu.size(); ++i) {
      tape.add_logit_grad(un[i], c_neg * surrogate_loss_derivative(lu[i], -1) * inv_u);
    }
    return value;
  };
}

}  // namespace puforge
