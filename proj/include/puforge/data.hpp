#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "puforge/matrix.hpp"
#include "puforge/rng.hpp"

namespace puforge {

enum class PuTag { Positive, Unlabeled };
enum class Regime { Balanced, Imbalanced, Extreme };

std::string_view to_string(Regime regime);
Regime parse_regime(std::string_view text);

/// What a trainer is allowed to see: labeled positives and the unlabeled pool.
/// Deliberately carries no hidden labels.
struct TrainView {
  FeatureMatrix positives;
  FeatureMatrix unlabeled;
  double prior = 0.0;
};

/// Evaluator-only view: the same partitions plus hidden labels of the unlabeled pool.
struct OracleView {
  FeatureMatrix positives;
  FeatureMatrix unlabeled;
  std::vector<int> unlabeled_labels;
};

/// Fully labeled examples (held-out evaluation sets, split sources).
struct LabeledSet {
  FeatureMatrix x;
  std::vector<int> labels;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
  friend bool operator==(const LabeledSet&, const LabeledSet&) = default;
};

/// Examples tagged P or U, each with a hidden ground-truth label that only the
/// oracle view exposes. A P-tagged row always has hidden label +1.
class PUDataset {
 public:
  PUDataset(FeatureMatrix x, std::vector<PuTag> tags, std::vector<int> hidden_labels, double prior,
            Regime regime);

  [[nodiscard]] std::size_t size() const noexcept { return tags_.size(); }
  [[nodiscard]] std::size_t dim() const noexcept { return x_.cols(); }
  [[nodiscard]] std::size_t labeled_count() const noexcept { return n_labeled_; }
  [[nodiscard]] std::size_t unlabeled_count() const noexcept { return size() - n_labeled_; }
  [[nodiscard]] double prior() const noexcept { return prior_; }
  [[nodiscard]] Regime regime() const noexcept { return regime_; }
  void set_prior(double prior);

  [[nodiscard]] const FeatureMatrix& features() const noexcept { return x_; }
  [[nodiscard]] PuTag tag(std::size_t i) const { return tags_.at(i); }
  /// Fraction of hidden positives inside the unlabeled pool.
  [[nodiscard]] double unlabeled_positive_fraction() const;
  /// Fraction of hidden positives over all rows.
  [[nodiscard]] double positive_fraction() const;

  [[nodiscard]] TrainView train_view() const;
  [[nodiscard]] OracleView oracle_view() const;
  /// All rows with their hidden labels, for serialization and audits.
  [[nodiscard]] const std::vector<int>& hidden_labels_for_oracle() const noexcept {
    return hidden_;
  }

  friend bool operator==(const PUDataset&, const PUDataset&) = default;

 private:
  FeatureMatrix x_;
  std::vector<PuTag> tags_;
  std::vector<int> hidden_;
  double prior_;
  Regime regime_;
  std::size_t n_labeled_ = 0;
};

struct GaussianSpec {
  std::size_t dim = 20;
  std::size_t n_total = 2000;
  std::size_t n_labeled = 60;
  double prior = 0.1;
  double separation = 2.0;
  Regime regime = Regime::Imbalanced;
  /// Fraction of unlabeled positives deleted in the extreme regime.
  double removal = 0.5;
};

/// Two isotropic Gaussians with means +/- separation * 1/sqrt(d). Each row is
/// positive with probability `prior`; exactly `n_labeled` positives are tagged P.
/// The extreme regime then deletes round(removal * #U-positives) unlabeled positives.
PUDataset gen_gaussian_pu(const GaussianSpec& spec, std::uint64_t seed);

/// Fully labeled draw from the same two-Gaussian model (held-out evaluation data).
LabeledSet gen_gaussian_labeled(std::size_t dim, std::size_t n, double prior, double separation,
                                std::uint64_t seed);

/// PU split of a labeled source.
///   balanced:   n_labeled random positives are tagged P, every other row is U.
///   imbalanced: all negatives go to U together with round(prior/(1-prior) * #neg)
///               positives, so U has the target prior; n_labeled further positives are P.
///   extreme:    imbalanced, then round(removal * #U-positives) of them are deleted.
PUDataset make_split(const LabeledSet& source, double prior, std::size_t n_labeled, Regime regime,
                     double removal, std::uint64_t seed);

/// x + N(0, strength^2 I), then each coordinate zeroed with probability `dropout`.
std::vector<double> augment(std::span<const double> x, double strength, double dropout, Rng& rng);

/// Header `f0,...,f{d-1},pu_tag,true_label`; shortest round-trip decimal features.
void save_csv(const PUDataset& dataset, const std::filesystem::path& path);
PUDataset load_csv(const std::filesystem::path& path, double prior,
                   Regime regime = Regime::Imbalanced);
/// Same schema; pu_tag is ignored and every row is kept with its true label.
LabeledSet load_labeled_csv(const std::filesystem::path& path);
void save_labeled_csv(const LabeledSet& set, const std::filesystem::path& path);

}  // namespace puforge
