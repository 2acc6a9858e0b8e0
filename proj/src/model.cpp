#include "puforge/model.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string>

#include "puforge/error.hpp"

namespace puforge {
namespace {

void check_layers(const std::vector<std::size_t>& layers) {
  if (layers.size() < 2) throw InvalidArgument("Model: need at least input and output layers");
  if (layers.back() != 1) throw InvalidArgument("Model: output layer must have width 1");
  for (std::size_t w : layers) {
    if (w == 0) throw InvalidArgument("Model: layer widths must be positive");
  }
}

void check_input(const Model& model, std::span<const double> x) {
  if (x.size() != model.input_dim()) {
    throw InvalidArgument("Model: input of dimension " + std::to_string(x.size()) +
                          ", expected " + std::to_string(model.input_dim()));
  }
}

// Runs layers [0, upto) and returns the activation after the last of them.
std::vector<double> propagate(const Model& model, std::span<const double> x, std::size_t upto) {
  const auto& layers = model.layers();
  const auto theta = model.parameters();
  std::vector<double> in(x.begin(), x.end());
  std::vector<double> out;
  for (std::size_t l = 0; l < upto; ++l) {
    const std::size_t n_in = layers[l];
    const std::size_t n_out = layers[l + 1];
    const double* w = theta.data() + model.weight_offset(l);
    const double* b = w + n_in * n_out;
    out.assign(n_out, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
      double acc = b[o];
      const double* wr = w + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) acc += wr[i] * in[i];
      const bool hidden = l + 1 < model.layer_count();
      out[o] = hidden ? std::max(acc, 0.0) : acc;
    }
    in.swap(out);
  }
  return in;
}

}  // namespace

std::size_t parameter_count(std::span<const std::size_t> layers) {
  std::size_t n = 0;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) n += (layers[l] + 1) * layers[l + 1];
  return n;
}

Model::Model(std::vector<std::size_t> layers) : layers_(std::move(layers)) {
  check_layers(layers_);
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < layers_.size(); ++l) {
    offsets_.push_back(offset);
    offset += (layers_[l] + 1) * layers_[l + 1];
  }
  params_.assign(offset, 0.0);
}

Model::Model(std::vector<std::size_t> layers, std::vector<double> parameters)
    : Model(std::move(layers)) {
  set_parameters(std::move(parameters));
}

std::size_t Model::feature_dim() const noexcept {
  return has_hidden() ? layers_[layers_.size() - 2] : 0;
}

void Model::set_parameters(std::vector<double> parameters) {
  if (parameters.size() != params_.size()) {
    throw InvalidArgument("Model: expected " + std::to_string(params_.size()) +
                          " parameters, got " + std::to_string(parameters.size()));
  }
  params_ = std::move(parameters);
}

Model init_model(std::vector<std::size_t> layers, Rng& rng) {
  Model model(std::move(layers));
  auto theta = model.parameters();
  const auto& sizes = model.layers();
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(sizes[l]));
    const std::size_t begin = model.weight_offset(l);
    const std::size_t end = begin + (sizes[l] + 1) * sizes[l + 1];
    for (std::size_t k = begin; k < end; ++k) theta[k] = rng.uniform(-bound, bound);
  }
  return model;
}

double forward(const Model& model, std::span<const double> x) {
  check_input(model, x);
  return propagate(model, x, model.layer_count()).front();
}

std::vector<double> features(const Model& model, std::span<const double> x) {
  if (!model.has_hidden()) throw InvalidArgument("features: model has no hidden layer");
  check_input(model, x);
  return propagate(model, x, model.layer_count() - 1);
}

std::vector<double> sgd_step(std::span<const double> theta, std::span<const double> gradient,
                             double lr) {
  if (theta.size() != gradient.size()) {
    throw InvalidArgument("sgd_step: parameter and gradient lengths differ");
  }
  if (!(lr >= 0.0)) throw InvalidArgument("sgd_step: learning rate must be non-negative");
  std::vector<double> out(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) out[i] = theta[i] - lr * gradient[i];
  return out;
}

void save_model(const Model& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << "puforge-model 1\nlayers";
  for (std::size_t w : model.layers()) out << ' ' << w;
  out << '\n';
  char buf[64];
  for (double v : model.parameters()) {
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, res.ptr - buf);
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Model load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "puforge-model 1") {
    throw ParseError("not a puforge model file", 1);
  }
  if (!std::getline(in, line) || line.rfind("layers", 0) != 0) {
    throw ParseError("missing layers line", 2);
  }
  std::istringstream ls(line.substr(6));
  std::vector<std::size_t> layers;
  for (std::size_t w; ls >> w;) layers.push_back(w);
  std::vector<double> params;
  std::size_t line_no = 2;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    double v = 0.0;
    const auto res = std::from_chars(line.data(), line.data() + line.size(), v);
    if (res.ec != std::errc{} || res.ptr != line.data() + line.size()) {
      throw ParseError("bad parameter value", line_no);
    }
    params.push_back(v);
  }
  return Model(std::move(layers), std::move(params));
}

void SgdOptimizer::step(std::span<double> theta, std::span<const double> gradient) {
  if (theta.size() != gradient.size()) {
    throw InvalidArgument("SgdOptimizer: parameter and gradient lengths differ");
  }
  if (momentum_ == 0.0) {
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr_ * gradient[i];
    return;
  }
  if (velocity_.size() != theta.size()) velocity_.assign(theta.size(), 0.0);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    velocity_[i] = momentum_ * velocity_[i] + gradient[i];
    theta[i] -= lr_ * velocity_[i];
  }
}

}  // namespace puforge
