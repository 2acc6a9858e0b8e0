#include "puforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "puforge/error.hpp"
#include "puforge/risk.hpp"

namespace puforge {

std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) throw InvalidArgument("roc_auc: length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  // Sum of (1-based, tie-averaged) ranks of the positives.
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] == 1) {
        rank_sum += avg_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return std::nullopt;
  const double np = static_cast<double>(n_pos);
  const double u = rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * static_cast<double>(n_neg));
}

Metrics compute_metrics(std::span<const double> scores, std::span<const int> labels,
                        double threshold) {
  if (scores.size() != labels.size()) throw InvalidArgument("compute_metrics: length mismatch");
  if (scores.empty()) throw InvalidArgument("compute_metrics: no examples");
  std::size_t tp = 0, fp = 0, fn = 0, correct = 0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] != 1 && labels[i] != -1) {
      throw InvalidArgument("compute_metrics: labels must be +1 or -1");
    }
    const bool pred_pos = scores[i] > threshold;
    const bool is_pos = labels[i] == 1;
    if (pred_pos == is_pos) ++correct;
    if (pred_pos && is_pos) ++tp;
    if (pred_pos && !is_pos) ++fp;
    if (!pred_pos && is_pos) ++fn;
  }
  Metrics m;
  m.acc = static_cast<double>(correct) / static_cast<double>(scores.size());
  const std::size_t denom = 2 * tp + fp + fn;
  m.f1 = denom == 0 ? 0.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
  m.auc = roc_auc(scores, labels);
  return m;
}

std::optional<RiskGap> risk_gap(const Model& model, const OracleView& data) {
  if (data.unlabeled_labels.size() != data.unlabeled.rows()) {
    throw InvalidArgument("risk_gap: oracle labels do not match the unlabeled pool");
  }
  FeatureMatrix hidden_pos(data.unlabeled.cols());
  for (std::size_t i = 0; i < data.unlabeled.rows(); ++i) {
    if (data.unlabeled_labels[i] == 1) hidden_pos.push_back(data.unlabeled.row(i));
  }
  if (hidden_pos.empty() || data.positives.empty()) return std::nullopt;
  RiskGap r;
  r.labeled = empirical_risk(model, data.positives, -1);
  r.oracle = empirical_risk(model, hidden_pos, -1);
  r.gap = std::abs(r.labeled - r.oracle);
  return r;
}

std::string_view to_string(Classifier c) { return c == Classifier::PU ? "g_pu" : "g_ps"; }

MetricsRecord Evaluator::evaluate(const Model& model, std::size_t epoch,
                                  Classifier classifier) const {
  std::vector<double> scores(eval_.size());
  for (std::size_t i = 0; i < eval_.size(); ++i) scores[i] = forward(model, eval_.x.row(i));
  MetricsRecord rec;
  rec.epoch = epoch;
  rec.classifier = classifier;
  rec.metrics = compute_metrics(scores, eval_.labels);
  rec.risk = risk_gap(model, oracle_);
  return rec;
}

}  // namespace puforge
