#pragma once

// Independent reference arithmetic for tests: a straight-line MLP evaluator
// that shares no code with the library, plus finite-difference helpers.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "puforge/matrix.hpp"
#include "puforge/model.hpp"
#include "puforge/rng.hpp"
#include "puforge/ssl.hpp"

namespace testsupport {

struct OracleForward {
  double logit = 0.0;
  std::vector<double> last_hidden;
};

// Walks the flat parameter layout (per layer: out x in weights row-major, then
// out biases) with plain loops.
inline OracleForward oracle_forward(const std::vector<std::size_t>& layers,
                                    const std::vector<double>& theta, std::span<const double> x) {
  std::vector<double> a(x.begin(), x.end());
  std::size_t off = 0;
  OracleForward out;
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const std::size_t in = layers[l], o = layers[l + 1];
    std::vector<double> z(o, 0.0);
    for (std::size_t r = 0; r < o; ++r) {
      double s = 0.0;
      for (std::size_t c = 0; c < in; ++c) s += theta[off + r * in + c] * a[c];
      z[r] = s + theta[off + o * in + r];
    }
    off += o * in + o;
    const bool last = l + 2 == layers.size();
    if (!last) {
      for (double& v : z) v = v > 0.0 ? v : 0.0;
      out.last_hidden = z;
    }
    a = z;
  }
  out.logit = a[0];
  return out;
}

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// Sigmoid loss written from its definition.
inline double sig_loss(double z, int y) { return 1.0 / (1.0 + std::exp(static_cast<double>(y) * z)); }

inline puforge::Model random_model(const std::vector<std::size_t>& layers, puforge::Rng& rng,
                                   double scale = 0.7) {
  std::vector<double> theta(puforge::parameter_count(layers));
  for (double& t : theta) t = rng.normal(0.0, scale);
  return puforge::Model(layers, theta);
}

inline puforge::FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, puforge::Rng& rng,
                                            double shift = 0.0) {
  puforge::FeatureMatrix m(cols);
  std::vector<double> x(cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (double& v : x) v = rng.normal(shift, 1.0);
    m.push_back(x);
  }
  return m;
}

// Central differences of f around theta, step h.
inline std::vector<double> numeric_gradient(const std::function<double(const std::vector<double>&)>& f,
                                            std::vector<double> theta, double h = 1e-5) {
  std::vector<double> g(theta.size());
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double keep = theta[k];
    theta[k] = keep + h;
    const double up = f(theta);
    theta[k] = keep - h;
    const double down = f(theta);
    theta[k] = keep;
    g[k] = (up - down) / (2.0 * h);
  }
  return g;
}

// Relative error of whole vectors: |a - b|_2 / max(|a|_2, |b|_2, floor).
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b,
                             double floor = 1e-6) {
  double diff = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    diff += (a[k] - b[k]) * (a[k] - b[k]);
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nb), floor});
}

inline std::vector<double> oracle_normalize(const std::vector<double>& d) {
  double top = d[0];
  for (double v : d) top = std::max(top, v);
  std::vector<double> p(d.size());
  double s = 0.0;
  for (std::size_t k = 0; k < d.size(); ++k) s += (p[k] = std::exp(d[k] - top));
  double mass = 0.0;
  for (double& v : p) mass += (v = std::max(v / s, 1e-8));
  for (double& v : p) v /= mass;
  return p;
}

inline double oracle_kl(const std::vector<double>& p, const std::vector<double>& q) {
  double acc = 0.0;
  for (std::size_t k = 0; k < p.size(); ++k) acc += p[k] * std::log(p[k] / q[k]);
  return acc;
}

struct Terms {
  double supervised = 0.0;
  double prediction = 0.0;
  double feature = 0.0;
};

// Term-by-term reference of the pseudo-supervised objective. When `frozen` is
// given, the sharpened targets come from it instead of the current parameters.
inline Terms oracle_terms(const std::vector<std::size_t>& layers, const std::vector<double>& theta,
                          const puforge::PreparedBatch& b, double temperature,
                          const std::vector<double>* frozen = nullptr,
                          std::vector<double>* targets_out = nullptr) {
  Terms t;
  const std::size_t nl = b.labeled.rows(), nu = b.unlabeled.rows();
  for (std::size_t i = 0; i < nl; ++i) {
    const double p = sigmoid(oracle_forward(layers, theta, b.labeled.row(i)).logit);
    const double q = (b.targets[i] + 1.0) / 2.0;
    t.supervised += -q * std::log(p) - (1.0 - q) * std::log(1.0 - p);
  }
  t.supervised /= static_cast<double>(nl);
  for (std::size_t j = 0; j < nu; ++j) {
    const auto a = oracle_forward(layers, theta, b.view1.row(nl + j));
    const auto c = oracle_forward(layers, theta, b.view2.row(nl + j));
    const double p1 = sigmoid(a.logit);
    const double s1 = std::pow(p1, 1 / temperature) /
                      (std::pow(p1, 1 / temperature) + std::pow(1 - p1, 1 / temperature));
    const double target = frozen ? (*frozen)[j] : s1;
    if (targets_out) targets_out->push_back(s1);
    t.prediction += (target - sigmoid(c.logit)) * (target - sigmoid(c.logit));
  }
  if (nu > 0) t.prediction /= static_cast<double>(nu);
  for (std::size_t r = 0; r < nl + nu; ++r) {
    const auto a = oracle_forward(layers, theta, b.view1.row(r));
    const auto c = oracle_forward(layers, theta, b.view2.row(r));
    t.feature += oracle_kl(oracle_normalize(a.last_hidden), oracle_normalize(c.last_hidden));
  }
  t.feature /= static_cast<double>(nl + nu);
  return t;
}

inline puforge::PreparedBatch random_batch(puforge::Rng& rng, std::size_t dim, std::size_t nl,
                                           std::size_t nu, const puforge::SslConfig& cfg) {
  puforge::PsBatch b;
  b.labeled = testsupport::random_matrix(nl, dim, rng, 0.3);
  for (std::size_t i = 0; i < nl; ++i) b.targets.push_back(rng.uniform(-1.0, 1.0));
  b.unlabeled = testsupport::random_matrix(nu, dim, rng);
  return puforge::prepare_batch(std::move(b), cfg, rng);
}

}  // namespace testsupport
