#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

#include "puforge/data.hpp"
#include "puforge/model.hpp"

namespace puforge {

struct Metrics {
  double acc = 0.0;
  double f1 = 0.0;
  /// Absent when the labels contain a single class.
  std::optional<double> auc;
};

/// Hard predictions are `score > threshold`. F1 is taken on the +1 class and is
/// 0 when precision and recall are both undefined or zero. AUC is the
/// normalized Mann-Whitney statistic with ties counted one half.
Metrics compute_metrics(std::span<const double> scores, std::span<const int> labels,
                        double threshold = 0.0);

/// Mann-Whitney AUC via average ranks; nullopt for a single-class label set.
std::optional<double> roc_auc(std::span<const double> scores, std::span<const int> labels);

struct RiskGap {
  double labeled = 0.0;  // mean l(g(x), -1) over D_p
  double oracle = 0.0;   // mean l(g(x), -1) over the hidden positives of D_u
  double gap = 0.0;      // |labeled - oracle|
};

/// Risk-gap diagnostic; nullopt when D_u holds no hidden positive.
std::optional<RiskGap> risk_gap(const Model& model, const OracleView& data);

enum class Classifier { PU, PS };
std::string_view to_string(Classifier c);

struct MetricsRecord {
  std::size_t epoch = 0;
  Classifier classifier = Classifier::PU;
  Metrics metrics;
  std::optional<RiskGap> risk;
};

/// Scores a model on a labeled evaluation set and its training data's oracle view.
class Evaluator {
 public:
  Evaluator(LabeledSet eval_set, OracleView oracle)
      : eval_(std::move(eval_set)), oracle_(std::move(oracle)) {}

  [[nodiscard]] MetricsRecord evaluate(const Model& model, std::size_t epoch,
                                       Classifier classifier) const;
  [[nodiscard]] const LabeledSet& eval_set() const noexcept { return eval_; }
  [[nodiscard]] const OracleView& oracle() const noexcept { return oracle_; }

 private:
  LabeledSet eval_;
  OracleView oracle_;
};

}  // namespace puforge
