#include "puforge/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "puforge/error.hpp"

namespace puforge {
namespace {

std::vector<double> class_mean(std::size_t dim, double separation, int label) {
  const double m = static_cast<double>(label) * separation / std::sqrt(static_cast<double>(dim));
  return std::vector<double>(dim, m);
}

void draw_features(FeatureMatrix& x, std::span<const int> labels, double separation, Rng& rng) {
  const std::size_t dim = x.cols();
  const auto pos = class_mean(dim, separation, +1);
  const auto neg = class_mean(dim, separation, -1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& mean = labels[i] == 1 ? pos : neg;
    auto row = x.row(i);
    for (std::size_t k = 0; k < dim; ++k) row[k] = mean[k] + rng.normal();
  }
}

// Drops round(removal * #U-positives) unlabeled positives chosen uniformly.
PUDataset delete_unlabeled_positives(const PUDataset& ds, double removal, Rng& rng) {
  const auto& x = ds.features();
  const auto& hidden = ds.hidden_labels_for_oracle();
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (ds.tag(i) == PuTag::Unlabeled && hidden[i] == 1) candidates.push_back(i);
  }
  const auto n_drop = static_cast<std::size_t>(
      std::llround(removal * static_cast<double>(candidates.size())));
  std::vector<bool> drop(ds.size(), false);
  const auto order = rng.permutation(candidates.size());
  for (std::size_t k = 0; k < n_drop; ++k) drop[candidates[order[k]]] = true;

  FeatureMatrix kept(x.cols());
  std::vector<PuTag> tags;
  std::vector<int> labels;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (drop[i]) continue;
    kept.push_back(x.row(i));
    tags.push_back(ds.tag(i));
    labels.push_back(hidden[i]);
  }
  return PUDataset(std::move(kept), std::move(tags), std::move(labels), ds.prior(),
                   Regime::Extreme);
}

void check_removal(double removal) {
  if (!(removal >= 0.0 && removal < 1.0)) {
    throw InvalidArgument("removal fraction must lie in [0, 1)");
  }
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

struct CsvRows {
  FeatureMatrix x;
  std::vector<PuTag> tags;
  std::vector<int> labels;
  std::vector<std::size_t> line_numbers;
};

CsvRows read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw ParseError("missing header", 1);
  ++line_no;
  if (!line.empty() && line.back() == '\r') throw ParseError("CR line ending not allowed", line_no);
  const auto header = split_commas(line);
  if (header.size() < 3 || header[header.size() - 2] != "pu_tag" ||
      header.back() != "true_label") {
    throw ParseError("header must be f0,...,f{d-1},pu_tag,true_label", line_no);
  }
  const std::size_t dim = header.size() - 2;
  for (std::size_t k = 0; k < dim; ++k) {
    if (header[k] != "f" + std::to_string(k)) {
      throw ParseError("expected feature column f" + std::to_string(k), line_no);
    }
  }

  CsvRows rows{FeatureMatrix(dim), {}, {}, {}};
  std::vector<double> x(dim);
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.back() == '\r') throw ParseError("CR line ending not allowed", line_no);
    const auto fields = split_commas(line);
    if (fields.size() != dim + 2) {
      throw ParseError("expected " + std::to_string(dim + 2) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    }
    for (std::size_t k = 0; k < dim; ++k) {
      const auto f = fields[k];
      const auto res = std::from_chars(f.data(), f.data() + f.size(), x[k]);
      if (res.ec != std::errc{} || res.ptr != f.data() + f.size() || !std::isfinite(x[k])) {
        throw ParseError("bad feature value '" + std::string(f) + "' in column f" +
                             std::to_string(k),
                         line_no);
      }
    }
    const auto tag = fields[dim];
    const auto label = fields[dim + 1];
    PuTag t;
    if (tag == "P") {
      t = PuTag::Positive;
    } else if (tag == "U") {
      t = PuTag::Unlabeled;
    } else {
      throw ParseError("pu_tag must be P or U, got '" + std::string(tag) + "'", line_no);
    }
    int y;
    if (label == "1") {
      y = 1;
    } else if (label == "-1") {
      y = -1;
    } else {
      throw ParseError("true_label must be 1 or -1, got '" + std::string(label) + "'", line_no);
    }
    if (t == PuTag::Positive && y != 1) {
      throw ParseError("row tagged P must have true_label 1", line_no);
    }
    rows.x.push_back(x);
    rows.tags.push_back(t);
    rows.labels.push_back(y);
    rows.line_numbers.push_back(line_no);
  }
  return rows;
}

void write_csv(const FeatureMatrix& x, std::span<const PuTag> tags, std::span<const int> labels,
               const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  for (std::size_t k = 0; k < x.cols(); ++k) out << 'f' << k << ',';
  out << "pu_tag,true_label\n";
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (double v : x.row(i)) out << format_double(v) << ',';
    out << (tags[i] == PuTag::Positive ? 'P' : 'U') << ',' << labels[i] << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace

std::string_view to_string(Regime regime) {
  switch (regime) {
    case Regime::Balanced: return "balanced";
    case Regime::Imbalanced: return "imbalanced";
    case Regime::Extreme: return "extreme";
  }
  return "?";
}

Regime parse_regime(std::string_view text) {
  if (text == "balanced") return Regime::Balanced;
  if (text == "imbalanced") return Regime::Imbalanced;
  if (text == "extreme") return Regime::Extreme;
  throw InvalidArgument("unknown regime '" + std::string(text) + "'");
}

PUDataset::PUDataset(FeatureMatrix x, std::vector<PuTag> tags, std::vector<int> hidden_labels,
                     double prior, Regime regime)
    : x_(std::move(x)),
      tags_(std::move(tags)),
      hidden_(std::move(hidden_labels)),
      prior_(prior),
      regime_(regime) {
  if (tags_.size() != x_.rows() || hidden_.size() != x_.rows()) {
    throw InvalidArgument("PUDataset: features, tags and labels differ in length");
  }
  set_prior(prior);
  for (std::size_t i = 0; i < tags_.size(); ++i) {
    if (hidden_[i] != 1 && hidden_[i] != -1) {
      throw InvalidArgument("PUDataset: hidden label must be +1 or -1");
    }
    if (tags_[i] == PuTag::Positive) {
      if (hidden_[i] != 1) {
        throw InvalidArgument("PUDataset: row " + std::to_string(i) +
                              " is tagged P but its hidden label is -1");
      }
      ++n_labeled_;
    }
  }
}

void PUDataset::set_prior(double prior) {
  if (!(prior > 0.0 && prior < 1.0)) throw InvalidArgument("PUDataset: prior must lie in (0, 1)");
  prior_ = prior;
}

double PUDataset::unlabeled_positive_fraction() const {
  std::size_t pos = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    if (tags_[i] == PuTag::Unlabeled && hidden_[i] == 1) ++pos;
  }
  return unlabeled_count() == 0 ? 0.0
                                : static_cast<double>(pos) / static_cast<double>(unlabeled_count());
}

double PUDataset::positive_fraction() const {
  if (size() == 0) return 0.0;
  const auto pos = std::count(hidden_.begin(), hidden_.end(), 1);
  return static_cast<double>(pos) / static_cast<double>(size());
}

TrainView PUDataset::train_view() const {
  TrainView v{FeatureMatrix(dim()), FeatureMatrix(dim()), prior_};
  for (std::size_t i = 0; i < size(); ++i) {
    (tags_[i] == PuTag::Positive ? v.positives : v.unlabeled).push_back(x_.row(i));
  }
  return v;
}

OracleView PUDataset::oracle_view() const {
  OracleView v{FeatureMatrix(dim()), FeatureMatrix(dim()), {}};
  for (std::size_t i = 0; i < size(); ++i) {
    if (tags_[i] == PuTag::Positive) {
      v.positives.push_back(x_.row(i));
    } else {
      v.unlabeled.push_back(x_.row(i));
      v.unlabeled_labels.push_back(hidden_[i]);
    }
  }
  return v;
}

PUDataset gen_gaussian_pu(const GaussianSpec& spec, std::uint64_t seed) {
  if (spec.dim == 0 || spec.n_total == 0) throw InvalidArgument("gen_gaussian_pu: empty shape");
  if (!(spec.prior > 0.0 && spec.prior < 1.0)) {
    throw InvalidArgument("gen_gaussian_pu: prior must lie in (0, 1)");
  }
  if (!(spec.separation >= 0.0)) throw InvalidArgument("gen_gaussian_pu: negative separation");
  if (!(static_cast<double>(spec.n_labeled) < spec.prior * static_cast<double>(spec.n_total))) {
    throw InvalidArgument("gen_gaussian_pu: n_labeled must be below prior * n_total");
  }
  if (spec.regime == Regime::Extreme) check_removal(spec.removal);

  Rng label_rng(seed, "data/labels");
  Rng feature_rng(seed, "data/features");
  Rng tag_rng(seed, "data/tags");

  std::vector<int> labels(spec.n_total);
  std::vector<std::size_t> positives;
  for (std::size_t i = 0; i < spec.n_total; ++i) {
    labels[i] = label_rng.bernoulli(spec.prior) ? 1 : -1;
    if (labels[i] == 1) positives.push_back(i);
  }
  if (positives.size() <= spec.n_labeled) {
    throw InvalidArgument("gen_gaussian_pu: drew " + std::to_string(positives.size()) +
                          " positives, need more than n_labeled=" +
                          std::to_string(spec.n_labeled));
  }
  FeatureMatrix x(spec.n_total, spec.dim);
  draw_features(x, labels, spec.separation, feature_rng);

  std::vector<PuTag> tags(spec.n_total, PuTag::Unlabeled);
  const auto order = tag_rng.permutation(positives.size());
  for (std::size_t k = 0; k < spec.n_labeled; ++k) tags[positives[order[k]]] = PuTag::Positive;

  const Regime base = spec.regime == Regime::Extreme ? Regime::Imbalanced : spec.regime;
  PUDataset ds(std::move(x), std::move(tags), std::move(labels), spec.prior, base);
  if (spec.regime != Regime::Extreme) return ds;
  Rng removal_rng(seed, "data/removal");
  return delete_unlabeled_positives(ds, spec.removal, removal_rng);
}

LabeledSet gen_gaussian_labeled(std::size_t dim, std::size_t n, double prior, double separation,
                                std::uint64_t seed) {
  if (dim == 0) throw InvalidArgument("gen_gaussian_labeled: zero dimension");
  if (!(prior > 0.0 && prior < 1.0)) throw InvalidArgument("gen_gaussian_labeled: bad prior");
  Rng label_rng(seed, "eval/labels");
  Rng feature_rng(seed, "eval/features");
  LabeledSet out{FeatureMatrix(n, dim), std::vector<int>(n)};
  for (auto& y : out.labels) y = label_rng.bernoulli(prior) ? 1 : -1;
  draw_features(out.x, out.labels, separation, feature_rng);
  return out;
}

PUDataset make_split(const LabeledSet& source, double prior, std::size_t n_labeled, Regime regime,
                     double removal, std::uint64_t seed) {
  if (!(prior > 0.0 && prior < 1.0)) throw InvalidArgument("make_split: prior must lie in (0, 1)");
  check_removal(removal);
  std::vector<std::size_t> pos, neg;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source.labels[i] == 1) {
      pos.push_back(i);
    } else if (source.labels[i] == -1) {
      neg.push_back(i);
    } else {
      throw InvalidArgument("make_split: source labels must be +1 or -1");
    }
  }
  Rng rng(seed, "split");
  const auto pos_order = rng.permutation(pos.size());

  std::size_t n_unlabeled_pos = pos.size() - std::min(pos.size(), n_labeled);
  if (regime != Regime::Balanced) {
    n_unlabeled_pos = static_cast<std::size_t>(
        std::llround(prior / (1.0 - prior) * static_cast<double>(neg.size())));
  }
  if (n_labeled + n_unlabeled_pos > pos.size() || n_labeled == 0) {
    throw InvalidArgument("make_split: source has " + std::to_string(pos.size()) +
                          " positives, split needs " +
                          std::to_string(n_labeled + n_unlabeled_pos) + " (and n_labeled > 0)");
  }

  // Keep source order; tag the first n_labeled of the shuffled positives as P.
  std::vector<int> role(source.size(), -1);  // -1 dropped, 0 U, 1 P
  for (std::size_t i : neg) role[i] = 0;
  for (std::size_t k = 0; k < n_labeled; ++k) role[pos[pos_order[k]]] = 1;
  for (std::size_t k = n_labeled; k < n_labeled + n_unlabeled_pos; ++k) role[pos[pos_order[k]]] = 0;

  FeatureMatrix x(source.x.cols());
  std::vector<PuTag> tags;
  std::vector<int> labels;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (role[i] < 0) continue;
    x.push_back(source.x.row(i));
    tags.push_back(role[i] == 1 ? PuTag::Positive : PuTag::Unlabeled);
    labels.push_back(source.labels[i]);
  }
  const Regime base = regime == Regime::Extreme ? Regime::Imbalanced : regime;
  PUDataset ds(std::move(x), std::move(tags), std::move(labels), prior, base);
  if (regime != Regime::Extreme) return ds;
  Rng removal_rng(seed, "split/removal");
  return delete_unlabeled_positives(ds, removal, removal_rng);
}

std::vector<double> augment(std::span<const double> x, double strength, double dropout, Rng& rng) {
  if (!(strength >= 0.0)) throw InvalidArgument("augment: strength must be non-negative");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw InvalidArgument("augment: dropout must be in [0, 1)");
  std::vector<double> out(x.begin(), x.end());
  if (strength > 0.0) {
    for (double& v : out) v += strength * rng.normal();
  }
  if (dropout > 0.0) {
    for (double& v : out) {
      if (rng.bernoulli(dropout)) v = 0.0;
    }
  }
  return out;
}

void save_csv(const PUDataset& dataset, const std::filesystem::path& path) {
  std::vector<PuTag> tags(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) tags[i] = dataset.tag(i);
  write_csv(dataset.features(), tags, dataset.hidden_labels_for_oracle(), path);
}

PUDataset load_csv(const std::filesystem::path& path, double prior, Regime regime) {
  auto rows = read_csv(path);
  return PUDataset(std::move(rows.x), std::move(rows.tags), std::move(rows.labels), prior, regime);
}

LabeledSet load_labeled_csv(const std::filesystem::path& path) {
  auto rows = read_csv(path);
  return LabeledSet{std::move(rows.x), std::move(rows.labels)};
}

void save_labeled_csv(const LabeledSet& set, const std::filesystem::path& path) {
  std::vector<PuTag> tags(set.size(), PuTag::Unlabeled);
  write_csv(set.x, tags, set.labels, path);
}

}  // namespace puforge
