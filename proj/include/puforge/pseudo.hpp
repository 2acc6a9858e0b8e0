#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "puforge/matrix.hpp"
#include "puforge/model.hpp"
#include "puforge/rng.hpp"

namespace puforge {

/// Split of the unlabeled pool into confident positives, confident negatives and the rest.
struct Partition {
  std::vector<std::size_t> positive;
  std::vector<std::size_t> negative;
  std::vector<std::size_t> rest;

  friend bool operator==(const Partition&, const Partition&) = default;
};

struct SelectionConfig {
  /// n_s = floor(ratio * prior * n_u), at least 1.
  double ratio = 1.0;
  /// Beta(alpha, alpha) mixing weights.
  double alpha = 0.75;
  /// Pseudo examples per epoch; nullopt means 2 * n_s.
  std::optional<std::size_t> n_mix;
  /// false feeds the selected examples in directly with hard labels (no mixing).
  bool mixup = true;

  void validate() const;
};

std::size_t selection_count(const SelectionConfig& cfg, double prior, std::size_t n_unlabeled);

/// Positive-class probability sigmoid(g(x)) for every row.
std::vector<double> score_unlabeled(const Model& model, const FeatureMatrix& unlabeled);

/// n_s highest scores become `positive`, n_s lowest among the remainder become
/// `negative`; ties go to the lower index first. Requires 2 * n_s <= |scores|.
Partition select_confident(std::span<const double> scores, std::size_t n_s);

/// Throws ConsistencyError unless the three lists are disjoint and cover 0..n-1.
void audit_partition(const Partition& partition, std::size_t n);

/// Where a pseudo example came from: x' = beta * pos[pos_index] + (1 - beta) * neg[neg_index].
struct MixProvenance {
  std::size_t pos_index = 0;
  std::size_t neg_index = 0;
  double beta = 0.0;
};

struct PseudoSet {
  FeatureMatrix x;
  std::vector<double> labels;  // soft labels in [-1, 1]
  std::vector<MixProvenance> provenance;

  [[nodiscard]] std::size_t size() const noexcept { return labels.size(); }
};

struct MixConfig {
  std::size_t count = 0;
  double alpha = 0.75;
  /// Overrides the Beta draw (tests and endpoint checks).
  std::optional<double> fixed_beta;
};

/// Mixup of confident positives (label +1) with confident negatives (label -1).
/// Each example draws i and j uniformly and beta ~ Beta(alpha, alpha).
PseudoSet mix_pairs(const FeatureMatrix& positives, const FeatureMatrix& negatives,
                    const MixConfig& cfg, Rng& rng);

/// The unmixed variant: every selected positive with +1 and every selected
/// negative with -1, recorded as beta = 1 and beta = 0 respectively.
PseudoSet direct_pseudo(const FeatureMatrix& positives, const FeatureMatrix& negatives);

/// Recomputes the example of `ps` at position k from its provenance.
std::vector<double> reconstruct(const PseudoSet& ps, std::size_t k, const FeatureMatrix& positives,
                                const FeatureMatrix& negatives);

/// D' = {D_p, D_ps, D_u(u)}: a labeled part (hard +1 positives, then soft pseudo
/// examples) and an unlabeled part (the rest of the pool).
struct PrimeDataset {
  FeatureMatrix labeled;
  std::vector<double> labeled_targets;
  std::size_t hard_count = 0;
  FeatureMatrix unlabeled;
  /// Index of each unlabeled row in the original pool.
  std::vector<std::size_t> unlabeled_source;

  [[nodiscard]] std::size_t size() const noexcept { return labeled.rows() + unlabeled.rows(); }
};

/// Assembles D'. The partition is audited against the pool; an overlap between
/// the confident sets and the remainder raises ConsistencyError.
PrimeDataset build_prime(const FeatureMatrix& positives, const PseudoSet& pseudo,
                         const FeatureMatrix& pool, const Partition& partition);

}  // namespace puforge
