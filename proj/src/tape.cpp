#include "puforge/tape.hpp"

#include <algorithm>
#include <cmath>

#include "puforge/error.hpp"

namespace puforge {

Tape::Node Tape::forward(std::span<const double> x) {
  const Model& m = *model_;
  if (x.size() != m.input_dim()) throw InvalidArgument("Tape::forward: input dimension mismatch");
  const auto& layers = m.layers();
  const auto theta = m.parameters();
  Record rec;
  rec.activations.reserve(layers.size());
  rec.activations.emplace_back(x.begin(), x.end());
  for (std::size_t l = 0; l < m.layer_count(); ++l) {
    const std::size_t n_in = layers[l];
    const std::size_t n_out = layers[l + 1];
    const double* w = theta.data() + m.weight_offset(l);
    const double* b = w + n_in * n_out;
    const auto& in = rec.activations.back();
    std::vector<double> out(n_out);
    const bool hidden = l + 1 < m.layer_count();
    for (std::size_t o = 0; o < n_out; ++o) {
      double acc = b[o];
      const double* wr = w + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) acc += wr[i] * in[i];
      out[o] = hidden ? std::max(acc, 0.0) : acc;
    }
    rec.activations.push_back(std::move(out));
  }
  records_.push_back(std::move(rec));
  return records_.size() - 1;
}

double Tape::logit(Node node) const { return records_.at(node).activations.back().front(); }

std::span<const double> Tape::features(Node node) const {
  if (!model_->has_hidden()) throw InvalidArgument("Tape::features: model has no hidden layer");
  const auto& acts = records_.at(node).activations;
  return acts[acts.size() - 2];
}

void Tape::add_logit_grad(Node node, double g) {
  auto& rec = records_.at(node);
  rec.logit_grad += g;
  rec.seeded = true;
}

void Tape::add_feature_grad(Node node, std::span<const double> g) {
  if (g.size() != model_->feature_dim()) {
    throw InvalidArgument("Tape::add_feature_grad: gradient width mismatch");
  }
  auto& rec = records_.at(node);
  if (rec.feature_grad.empty()) rec.feature_grad.assign(g.size(), 0.0);
  for (std::size_t i = 0; i < g.size(); ++i) rec.feature_grad[i] += g[i];
  rec.seeded = true;
}

std::vector<double> Tape::backward() const {
  const Model& m = *model_;
  const auto& layers = m.layers();
  const auto theta = m.parameters();
  const std::size_t n_layers = m.layer_count();
  std::vector<double> out(theta.size(), 0.0);
  std::vector<double> delta, prev;

  for (const Record& rec : records_) {
    if (!rec.seeded) continue;
    // delta holds dLoss/d(pre-activation) of the layer being processed.
    delta.assign(1, rec.logit_grad);
    for (std::size_t l = n_layers; l-- > 0;) {
      const std::size_t n_in = layers[l];
      const std::size_t n_out = layers[l + 1];
      const std::size_t w_off = m.weight_offset(l);
      const std::size_t b_off = w_off + n_in * n_out;
      const auto& in = rec.activations[l];
      for (std::size_t o = 0; o < n_out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        double* gw = out.data() + w_off + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) gw[i] += d * in[i];
        out[b_off + o] += d;
      }
      if (l == 0) break;
      // Gradient w.r.t. this layer's input, i.e. the previous layer's activation.
      prev.assign(n_in, 0.0);
      const double* w = theta.data() + w_off;
      for (std::size_t o = 0; o < n_out; ++o) {
        const double d = delta[o];
        if (d == 0.0) continue;
        const double* wr = w + o * n_in;
        for (std::size_t i = 0; i < n_in; ++i) prev[i] += wr[i] * d;
      }
      if (l == n_layers - 1 && !rec.feature_grad.empty()) {
        for (std::size_t i = 0; i < n_in; ++i) prev[i] += rec.feature_grad[i];
      }
      // Through the ReLU that produced activations[l].
      for (std::size_t i = 0; i < n_in; ++i) {
        if (!(in[i] > 0.0)) prev[i] = 0.0;
      }
      delta.swap(prev);
    }
  }
  return out;
}

LossAndGradient grad(const Model& model, const LossClosure& closure) {
  Tape tape(model);
  LossAndGradient result;
  result.loss = closure(tape);
  if (!std::isfinite(result.loss)) throw NumericError("non-finite loss");
  result.gradient = tape.backward();
  for (double g : result.gradient) {
    if (!std::isfinite(g)) throw NumericError("non-finite gradient");
  }
  return result;
}

double evaluate(const Model& model, const LossClosure& closure) {
  Tape tape(model);
  return closure(tape);
}

}  // namespace puforge
