#include "puforge/ssl.hpp"

#include <algorithm>
#include <cmath>

#include "puforge/data.hpp"
#include "puforge/error.hpp"

namespace puforge {
namespace {

constexpr double kFeatureFloor = 1e-8;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double a) { return std::max(a, 0.0) + std::log1p(std::exp(-std::abs(a))); }

struct Normalized {
  std::vector<double> softmax;  // before the floor
  std::vector<double> prob;     // after floor and renormalization
  double mass = 0.0;            // sum of floored values
};

Normalized normalize_detail(std::span<const double> delta) {
  Normalized n;
  if (delta.empty()) return n;
  const double top = *std::max_element(delta.begin(), delta.end());
  n.softmax.resize(delta.size());
  double sum = 0.0;
  for (std::size_t k = 0; k < delta.size(); ++k) {
    n.softmax[k] = std::exp(delta[k] - top);
    sum += n.softmax[k];
  }
  for (double& s : n.softmax) s /= sum;
  n.prob.resize(delta.size());
  for (std::size_t k = 0; k < delta.size(); ++k) {
    n.prob[k] = std::max(n.softmax[k], kFeatureFloor);
    n.mass += n.prob[k];
  }
  for (double& p : n.prob) p /= n.mass;
  return n;
}

// Pulls dL/dprob back to dL/ddelta through floor, renormalization and softmax.
std::vector<double> normalize_backward(const Normalized& n, std::span<const double> g_prob) {
  const std::size_t d = n.prob.size();
  double dot = 0.0;
  for (std::size_t k = 0; k < d; ++k) dot += g_prob[k] * n.prob[k];
  std::vector<double> g_soft(d);
  for (std::size_t k = 0; k < d; ++k) {
    const bool floored = !(n.softmax[k] > kFeatureFloor);
    g_soft[k] = floored ? 0.0 : (g_prob[k] - dot) / n.mass;
  }
  double dot_s = 0.0;
  for (std::size_t k = 0; k < d; ++k) dot_s += g_soft[k] * n.softmax[k];
  std::vector<double> g_delta(d);
  for (std::size_t k = 0; k < d; ++k) g_delta[k] = n.softmax[k] * (g_soft[k] - dot_s);
  return g_delta;
}

void check_finite_logit(double z) {
  if (!std::isfinite(z)) throw NumericError("non-finite logit in pseudo-supervised loss");
}

}  // namespace

void SslConfig::validate() const {
  auto nonneg = [](double v) { return v >= 0.0 && std::isfinite(v); };
  if (!nonneg(w_u) || !nonneg(w_c)) throw InvalidArgument("SslConfig: weights must be finite and >= 0");
  if (!(temperature > 0.0 && temperature <= 1.0)) {
    throw InvalidArgument("SslConfig: temperature must lie in (0, 1]");
  }
  if (!nonneg(aug_strength)) throw InvalidArgument("SslConfig: augmentation strength must be >= 0");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("SslConfig: dropout must lie in [0, 1)");
}

double soft_label_loss(double logit, double y) {
  check_finite_logit(logit);
  if (!(y >= -1.0 && y <= 1.0)) throw InvalidArgument("soft_label_loss: target outside [-1, 1]");
  const double q = 0.5 * (y + 1.0);
  return q * softplus(-logit) + (1.0 - q) * softplus(logit);
}

double soft_label_loss_derivative(double logit, double y) {
  check_finite_logit(logit);
  return sigmoid(logit) - 0.5 * (y + 1.0);
}

double soft_label_loss(const Model& model, std::span<const double> x, double y) {
  return soft_label_loss(forward(model, x), y);
}

double sharpen(double p, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("sharpen: temperature must be positive");
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  const double a = std::pow(p, 1.0 / temperature);
  const double b = std::pow(1.0 - p, 1.0 / temperature);
  return a / (a + b);
}

double consistency_penalty(double p1, double p2, double temperature) {
  const double d = sharpen(p1, temperature) - p2;
  return d * d;
}

std::vector<double> normalize_features(std::span<const double> delta) {
  return normalize_detail(delta).prob;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw InvalidArgument("kl_divergence: length mismatch");
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] > 0.0) acc += p[k] * std::log(p[k] / q[k]);
  }
  return acc;
}

double prediction_consistency(const Model& model, std::span<const double> x, Rng& rng,
                              const SslConfig& cfg) {
  cfg.validate();
  const auto v1 = augment(x, cfg.aug_strength, cfg.dropout, rng);
  const auto v2 = augment(x, cfg.aug_strength, cfg.dropout, rng);
  return consistency_penalty(sigmoid(forward(model, v1)), sigmoid(forward(model, v2)),
                             cfg.temperature);
}

double feature_consistency(const Model& model, std::span<const double> x, Rng& rng,
                           const SslConfig& cfg) {
  cfg.validate();
  const auto v1 = augment(x, cfg.aug_strength, cfg.dropout, rng);
  const auto v2 = augment(x, cfg.aug_strength, cfg.dropout, rng);
  const auto p = normalize_features(features(model, v1));
  const auto q = normalize_features(features(model, v2));
  return kl_divergence(p, q);
}

PreparedBatch prepare_batch(PsBatch batch, const SslConfig& cfg, Rng& rng) {
  cfg.validate();
  if (batch.labeled.empty()) throw InvalidArgument("pseudo-supervised batch has no labeled part");
  if (batch.targets.size() != batch.labeled.rows()) {
    throw InvalidArgument("pseudo-supervised batch: targets and rows differ in count");
  }
  PreparedBatch out;
  const std::size_t dim = batch.labeled.cols();
  out.view1 = FeatureMatrix(dim);
  out.view2 = FeatureMatrix(dim);
  auto add_views = [&](const FeatureMatrix& m) {
    for (std::size_t i = 0; i < m.rows(); ++i) {
      out.view1.push_back(augment(m.row(i), cfg.aug_strength, cfg.dropout, rng));
      out.view2.push_back(augment(m.row(i), cfg.aug_strength, cfg.dropout, rng));
    }
  };
  add_views(batch.labeled);
  add_views(batch.unlabeled);
  out.labeled = std::move(batch.labeled);
  out.targets = std::move(batch.targets);
  out.unlabeled = std::move(batch.unlabeled);
  if (out.unlabeled.cols() == 0) out.unlabeled = FeatureMatrix(dim);
  return out;
}

MixMatchLite::MixMatchLite(SslConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

double MixMatchLite::loss(Tape& tape, const PreparedBatch& batch) const {
  const std::size_t n_l = batch.labeled.rows();
  const std::size_t n_u = batch.unlabeled.rows();
  if (n_l == 0) throw InvalidArgument("pseudo-supervised batch has no labeled part");

  double supervised = 0.0;
  const double inv_l = 1.0 / static_cast<double>(n_l);
  for (std::size_t i = 0; i < n_l; ++i) {
    const auto node = tape.forward(batch.labeled.row(i));
    const double z = tape.logit(node);
    const double y = batch.targets[i];
    supervised += soft_label_loss(z, y);
    tape.add_logit_grad(node, soft_label_loss_derivative(z, y) * inv_l);
  }
  supervised *= inv_l;

  const bool use_pred = cfg_.w_u > 0.0 && n_u > 0;
  const bool use_feat = cfg_.w_c > 0.0 && tape.model().has_hidden();
  double pred_term = 0.0;
  double feat_term = 0.0;
  if (use_pred || use_feat) {
    const std::size_t n_all = n_l + n_u;
    const double inv_u = n_u > 0 ? 1.0 / static_cast<double>(n_u) : 0.0;
    const double inv_all = 1.0 / static_cast<double>(n_all);
    for (std::size_t r = 0; r < n_all; ++r) {
      const bool unlabeled = r >= n_l;
      if (!use_feat && !unlabeled) continue;
      const auto a = tape.forward(batch.view1.row(r));
      const auto b = tape.forward(batch.view2.row(r));
      if (use_pred && unlabeled) {
        const double za = tape.logit(a);
        const double zb = tape.logit(b);
        check_finite_logit(za);
        check_finite_logit(zb);
        // Sharpened target sigmoid(za / T), held constant.
        const double target = sigmoid(za / cfg_.temperature);
        const double p2 = sigmoid(zb);
        const double diff = target - p2;
        pred_term += diff * diff;
        tape.add_logit_grad(b, cfg_.w_u * inv_u * (-2.0 * diff * p2 * (1.0 - p2)));
      }
      if (use_feat) {
        const auto na = normalize_detail(tape.features(a));
        const auto nb = normalize_detail(tape.features(b));
        const std::size_t d = na.prob.size();
        std::vector<double> g_p(d), g_q(d);
        double kl = 0.0;
        for (std::size_t k = 0; k < d; ++k) {
          const double lr = std::log(na.prob[k] / nb.prob[k]);
          kl += na.prob[k] * lr;
          g_p[k] = (lr + 1.0) * cfg_.w_c * inv_all;
          g_q[k] = -(na.prob[k] / nb.prob[k]) * cfg_.w_c * inv_all;
        }
        feat_term += kl;
        tape.add_feature_grad(a, normalize_backward(na, g_p));
        tape.add_feature_grad(b, normalize_backward(nb, g_q));
      }
    }
    pred_term *= inv_u;
    feat_term *= inv_all;
  }
  return supervised + cfg_.w_u * pred_term + cfg_.w_c * feat_term;
}

std::unique_ptr<PsObjective> make_objective(const SslConfig& cfg) {
  if (cfg.objective == "mixmatch-lite") return std::make_unique<MixMatchLite>(cfg);
  throw InvalidArgument("unknown pseudo-supervised objective '" + cfg.objective + "'");
}

LossClosure ps_closure(const PsObjective& objective, const PreparedBatch& batch) {
  return [&objective, &batch](Tape& tape) { return objective.loss(tape, batch); };
}

double ps_objective(const Model& model, const PsBatch& batch, const SslConfig& cfg, Rng& rng) {
  const auto objective = make_objective(cfg);
  const PreparedBatch prepared = prepare_batch(batch, cfg, rng);
  return evaluate(model, ps_closure(*objective, prepared));
}

}  // namespace puforge
