#include "puforge/pseudo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "puforge/error.hpp"

namespace puforge {

void SelectionConfig::validate() const {
  if (!(ratio > 0.0 && ratio <= 1.0)) throw InvalidArgument("selection ratio must lie in (0, 1]");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InvalidArgument("Beta shape must be positive");
}

std::size_t selection_count(const SelectionConfig& cfg, double prior, std::size_t n_unlabeled) {
  cfg.validate();
  const double raw = std::floor(cfg.ratio * prior * static_cast<double>(n_unlabeled));
  return std::max<std::size_t>(1, static_cast<std::size_t>(raw));
}

std::vector<double> score_unlabeled(const Model& model, const FeatureMatrix& unlabeled) {
  if (unlabeled.empty()) throw InvalidArgument("score_unlabeled: empty unlabeled set");
  std::vector<double> out(unlabeled.rows());
  for (std::size_t i = 0; i < unlabeled.rows(); ++i) {
    out[i] = 1.0 / (1.0 + std::exp(-forward(model, unlabeled.row(i))));
  }
  return out;
}

Partition select_confident(std::span<const double> scores, std::size_t n_s) {
  if (2 * n_s > scores.size()) {
    throw InvalidArgument("select_confident: n_s=" + std::to_string(n_s) +
                          " needs 2*n_s <= " + std::to_string(scores.size()) +
                          ", i.e. n_s <= " + std::to_string(scores.size() / 2));
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  // Descending score, lower index first on ties.
  std::vector<std::size_t> by_high = order;
  std::stable_sort(by_high.begin(), by_high.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  Partition p;
  p.positive.assign(by_high.begin(), by_high.begin() + static_cast<std::ptrdiff_t>(n_s));

  std::vector<bool> taken(scores.size(), false);
  for (std::size_t i : p.positive) taken[i] = true;
  std::vector<std::size_t> by_low;
  for (std::size_t i : order) {
    if (!taken[i]) by_low.push_back(i);
  }
  std::stable_sort(by_low.begin(), by_low.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  p.negative.assign(by_low.begin(), by_low.begin() + static_cast<std::ptrdiff_t>(n_s));
  for (std::size_t i : p.negative) taken[i] = true;

  for (std::size_t i : order) {
    if (!taken[i]) p.rest.push_back(i);
  }
  return p;
}

void audit_partition(const Partition& partition, std::size_t n) {
  std::vector<int> seen(n, 0);
  auto mark = [&](const std::vector<std::size_t>& part, const char* name) {
    for (std::size_t i : part) {
      if (i >= n) {
        throw ConsistencyError(std::string("partition: ") + name + " index " + std::to_string(i) +
                               " out of range");
      }
      if (++seen[i] > 1) {
        throw ConsistencyError("partition: index " + std::to_string(i) +
                               " appears in more than one part");
      }
    }
  };
  mark(partition.positive, "positive");
  mark(partition.negative, "negative");
  mark(partition.rest, "rest");
  for (std::size_t i = 0; i < n; ++i) {
    if (seen[i] == 0) throw ConsistencyError("partition: index " + std::to_string(i) + " missing");
  }
}

PseudoSet mix_pairs(const FeatureMatrix& positives, const FeatureMatrix& negatives,
                    const MixConfig& cfg, Rng& rng) {
  if (positives.empty() || negatives.empty()) {
    throw InvalidArgument("mix_pairs: both confident sets must be nonempty");
  }
  if (positives.cols() != negatives.cols()) throw InvalidArgument("mix_pairs: width mismatch");
  if (!(cfg.alpha > 0.0)) throw InvalidArgument("mix_pairs: alpha must be positive");
  if (cfg.fixed_beta && !(*cfg.fixed_beta >= 0.0 && *cfg.fixed_beta <= 1.0)) {
    throw InvalidArgument("mix_pairs: fixed beta must lie in [0, 1]");
  }
  PseudoSet out{FeatureMatrix(positives.cols()), {}, {}};
  std::vector<double> x(positives.cols());
  for (std::size_t k = 0; k < cfg.count; ++k) {
    const std::size_t i = rng.index(positives.rows());
    const std::size_t j = rng.index(negatives.rows());
    const double beta = cfg.fixed_beta ? *cfg.fixed_beta : rng.beta(cfg.alpha, cfg.alpha);
    const auto xi = positives.row(i);
    const auto xj = negatives.row(j);
    for (std::size_t c = 0; c < x.size(); ++c) x[c] = beta * xi[c] + (1.0 - beta) * xj[c];
    out.x.push_back(x);
    out.labels.push_back(2.0 * beta - 1.0);
    out.provenance.push_back({i, j, beta});
  }
  return out;
}

PseudoSet direct_pseudo(const FeatureMatrix& positives, const FeatureMatrix& negatives) {
  if (positives.empty() || negatives.empty()) {
    throw InvalidArgument("direct_pseudo: both confident sets must be nonempty");
  }
  PseudoSet out{FeatureMatrix(positives.cols()), {}, {}};
  for (std::size_t i = 0; i < positives.rows(); ++i) {
    out.x.push_back(positives.row(i));
    out.labels.push_back(1.0);
    out.provenance.push_back({i, 0, 1.0});
  }
  for (std::size_t j = 0; j < negatives.rows(); ++j) {
    out.x.push_back(negatives.row(j));
    out.labels.push_back(-1.0);
    out.provenance.push_back({0, j, 0.0});
  }
  return out;
}

std::vector<double> reconstruct(const PseudoSet& ps, std::size_t k, const FeatureMatrix& positives,
                                const FeatureMatrix& negatives) {
  const auto& p = ps.provenance.at(k);
  const auto xi = positives.row(p.pos_index);
  const auto xj = negatives.row(p.neg_index);
  std::vector<double> x(xi.size());
  for (std::size_t c = 0; c < x.size(); ++c) x[c] = p.beta * xi[c] + (1.0 - p.beta) * xj[c];
  return x;
}

PrimeDataset build_prime(const FeatureMatrix& positives, const PseudoSet& pseudo,
                         const FeatureMatrix& pool, const Partition& partition) {
  if (positives.empty()) throw InvalidArgument("build_prime: no labeled positives");
  audit_partition(partition, pool.rows());
  for (double y : pseudo.labels) {
    if (!(y >= -1.0 && y <= 1.0)) throw ConsistencyError("build_prime: pseudo label outside [-1, 1]");
  }
  PrimeDataset d;
  d.labeled = FeatureMatrix(positives.cols());
  for (std::size_t i = 0; i < positives.rows(); ++i) {
    d.labeled.push_back(positives.row(i));
    d.labeled_targets.push_back(1.0);
  }
  d.hard_count = positives.rows();
  for (std::size_t k = 0; k < pseudo.size(); ++k) {
    d.labeled.push_back(pseudo.x.row(k));
    d.labeled_targets.push_back(pseudo.labels[k]);
  }
  d.unlabeled = gather(pool, partition.rest);
  d.unlabeled_source = partition.rest;
  return d;
}

}  // namespace puforge
