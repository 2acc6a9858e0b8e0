#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "puforge/model.hpp"

namespace puforge {

/// Records forward passes of one model so that a scalar loss built from their
/// logits and features can be differentiated with respect to the parameters.
///
/// A loss closure calls forward() for every input it needs, reads logit() /
/// features(), and reports dLoss/dlogit and dLoss/dfeatures through the
/// add_*_grad calls. backward() then chains those seeds through the network.
class Tape {
 public:
  using Node = std::size_t;

  explicit Tape(const Model& model) : model_(&model) {}

  Node forward(std::span<const double> x);

  [[nodiscard]] double logit(Node node) const;
  /// Last hidden activation of the recorded pass (requires a hidden layer).
  [[nodiscard]] std::span<const double> features(Node node) const;

  void add_logit_grad(Node node, double g);
  void add_feature_grad(Node node, std::span<const double> g);

  /// Accumulates parameter gradients over nodes in recording order.
  [[nodiscard]] std::vector<double> backward() const;

  [[nodiscard]] std::size_t size() const noexcept { return records_.size(); }
  [[nodiscard]] const Model& model() const noexcept { return *model_; }

 private:
  struct Record {
    // activations[l] is the output of layer l; activations[0] is the input.
    std::vector<std::vector<double>> activations;
    double logit_grad = 0.0;
    std::vector<double> feature_grad;
    bool seeded = false;
  };

  const Model* model_;
  std::vector<Record> records_;
};

/// Scalar loss assembled on a tape. Must seed gradients consistent with its value.
using LossClosure = std::function<double(Tape&)>;

struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

/// Value and parameter gradient of `closure`. Throws NumericError when the loss
/// or any gradient entry is not finite.
LossAndGradient grad(const Model& model, const LossClosure& closure);

/// Value of `closure` without a backward pass.
double evaluate(const Model& model, const LossClosure& closure);

}  // namespace puforge
