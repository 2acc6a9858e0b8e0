#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "puforge/rng.hpp"

namespace puforge {

/// Feed-forward binary scorer: input -> ReLU hidden layers -> one linear logit.
///
/// Parameters are one flat vector. Layer l (mapping in -> out) owns out*in
/// weights stored row-major (one row per output unit) followed by out biases.
class Model {
 public:
  /// `layers` is {input, hidden..., 1}. Parameters start at zero.
  explicit Model(std::vector<std::size_t> layers);
  Model(std::vector<std::size_t> layers, std::vector<double> parameters);

  [[nodiscard]] const std::vector<std::size_t>& layers() const noexcept { return layers_; }
  [[nodiscard]] std::size_t input_dim() const noexcept { return layers_.front(); }
  [[nodiscard]] bool has_hidden() const noexcept { return layers_.size() > 2; }
  /// Width of the last hidden layer; 0 when there is none.
  [[nodiscard]] std::size_t feature_dim() const noexcept;
  [[nodiscard]] std::size_t layer_count() const noexcept { return layers_.size() - 1; }

  [[nodiscard]] std::span<const double> parameters() const noexcept { return params_; }
  [[nodiscard]] std::span<double> parameters() noexcept { return params_; }
  void set_parameters(std::vector<double> parameters);

  /// Offset of layer l's weight block inside the flat parameter vector.
  [[nodiscard]] std::size_t weight_offset(std::size_t layer) const { return offsets_[layer]; }

  friend bool operator==(const Model&, const Model&) = default;

 private:
  std::vector<std::size_t> layers_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

/// Sum over layers of (in + 1) * out.
std::size_t parameter_count(std::span<const std::size_t> layers);

/// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)] for weights and biases alike.
Model init_model(std::vector<std::size_t> layers, Rng& rng);

/// Logit g(x). Positive means a positive prediction.
double forward(const Model& model, std::span<const double> x);

/// Last hidden-layer activation. Throws InvalidArgument for a model without hidden layers.
std::vector<double> features(const Model& model, std::span<const double> x);

/// theta - lr * gradient.
std::vector<double> sgd_step(std::span<const double> theta, std::span<const double> gradient,
                             double lr);

/// Text snapshot: a `puforge-model 1` line, the layer widths, then one
/// parameter per line in shortest round-trip decimal form.
void save_model(const Model& model, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

/// SGD with heavy-ball momentum; momentum 0 reduces to sgd_step exactly.
class SgdOptimizer {
 public:
  SgdOptimizer(double lr, double momentum) : lr_(lr), momentum_(momentum) {}

  void step(std::span<double> theta, std::span<const double> gradient);
  void reset() { velocity_.clear(); }
  [[nodiscard]] double learning_rate() const noexcept { return lr_; }

 private:
  double lr_;
  double momentum_;
  std::vector<double> velocity_;
};

}  // namespace puforge
