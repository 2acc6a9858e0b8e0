#include <doctest.h>

#include <cmath>

#include "puforge/error.hpp"
#include "puforge/orchestrator.hpp"
#include "puforge/ssl.hpp"
#include "puforge/tape.hpp"
#include "support.hpp"

using namespace puforge;
using testsupport::sigmoid;
using testsupport::oracle_terms;
using testsupport::random_batch;

TEST_CASE("soft-label cross-entropy values") {
  CHECK(soft_label_loss(0.0, 1.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(std::abs(soft_label_loss(2.0, 1.0) - 0.12693) < 1e-4);
  // q = 0.5 is minimized at logit 0 with value ln 2.
  const double at0 = soft_label_loss(0.0, 0.0);
  CHECK(at0 == doctest::Approx(std::log(2.0)));
  for (double z : {-2.0, -0.1, 0.1, 1.0, 3.0}) CHECK(soft_label_loss(z, 0.0) > at0);
  CHECK_THROWS_AS(soft_label_loss(0.0, 1.5), InvalidArgument);
  CHECK_THROWS_AS(soft_label_loss(std::nan(""), 1.0), NumericError);
}

TEST_CASE("sharpening and the prediction penalty") {
  CHECK(std::abs(sharpen(0.8, 0.5) - 0.94118) < 1e-4);
  CHECK(sharpen(0.3, 1.0) == doctest::Approx(0.3));
  CHECK(consistency_penalty(0.8, 0.6, 1.0) == doctest::Approx(0.04));
  CHECK(consistency_penalty(0.7, 0.7, 1.0) == 0.0);

  Rng rng(1, "test/predcons");
  const Model m = testsupport::random_model({3, 4, 1}, rng);
  SslConfig cfg;
  cfg.aug_strength = 0.0;
  cfg.dropout = 0.0;
  cfg.temperature = 1.0;
  CHECK(prediction_consistency(m, std::vector<double>{0.2, -0.3, 1.0}, rng, cfg) == 0.0);
}

TEST_CASE("KL divergence of normalized features") {
  const std::vector<double> p{0.5, 0.5}, q{0.9, 0.1};
  CHECK(std::abs(kl_divergence(p, q) - 0.51083) < 1e-4);
  CHECK(std::abs(kl_divergence(q, p) - 0.36806) < 1e-4);
  CHECK(kl_divergence(p, q) != doctest::Approx(kl_divergence(q, p)));
  // Logs of the feature-space example: normalize([ln .9, ln .1]) = [.9, .1].
  const auto nq = normalize_features(std::vector<double>{std::log(0.9), std::log(0.1)});
  CHECK(nq[0] == doctest::Approx(0.9));
  const auto n0 = normalize_features(std::vector<double>{0.0, 0.0, 0.0, 0.0});
  for (double v : n0) CHECK(v == doctest::Approx(0.25));
  const auto floored = normalize_features(std::vector<double>{0.0, 100.0});
  CHECK(floored[0] > 0.0);

  Rng rng(2, "test/featcons");
  const Model m = testsupport::random_model({3, 6, 1}, rng);
  SslConfig cfg;
  cfg.aug_strength = 0.0;
  cfg.dropout = 0.0;
  CHECK(feature_consistency(m, std::vector<double>{0.5, 1.0, -1.0}, rng, cfg) == 0.0);
  cfg.aug_strength = 0.5;
  CHECK(feature_consistency(m, std::vector<double>{0.5, 1.0, -1.0}, rng, cfg) >= 0.0);
}

TEST_CASE("ps objective with zero weights is the supervised loss") {
  SslConfig cfg;
  cfg.w_u = 0.0;
  cfg.w_c = 0.0;
  const Model zero({2, 3, 1});
  PsBatch b;
  b.labeled = FeatureMatrix(2);
  b.labeled.push_back(std::vector<double>{1.0, 2.0});
  b.targets = {1.0};
  Rng rng(3, "test/zero");
  CHECK(ps_objective(zero, b, cfg, rng) == doctest::Approx(std::log(2.0)).epsilon(1e-12));

  PsBatch empty;
  empty.labeled = FeatureMatrix(2);
  empty.unlabeled = FeatureMatrix(2);
  empty.unlabeled.push_back(std::vector<double>{1.0, 1.0});
  CHECK_THROWS_AS(ps_objective(zero, empty, cfg, rng), InvalidArgument);
}

TEST_CASE("ps objective equals the sum of independently computed terms") {
  Rng rng(4, "test/terms");
  const std::vector<std::size_t> layers{4, 7, 5, 1};
  for (int trial = 0; trial < 20; ++trial) {
    SslConfig cfg;
    cfg.w_u = rng.uniform(0.0, 5.0);
    cfg.w_c = rng.uniform(0.0, 2.0);
    cfg.temperature = rng.uniform(0.2, 1.0);
    cfg.aug_strength = 0.3;
    const Model m = testsupport::random_model(layers, rng);
    const auto batch = random_batch(rng, 4, 1 + rng.index(6), rng.index(8), cfg);
    const std::vector<double> theta(m.parameters().begin(), m.parameters().end());
    const auto t = oracle_terms(layers, theta, batch, cfg.temperature);
    const double expected = t.supervised + cfg.w_u * t.prediction + cfg.w_c * t.feature;
    const auto obj = make_objective(cfg);
    CHECK(std::abs(evaluate(m, ps_closure(*obj, batch)) - expected) < 1e-9);
    CHECK(t.feature >= 0.0);
  }
}

TEST_CASE("ps objective gradient matches finite differences with frozen targets") {
  Rng rng(5, "test/psfd");
  const std::vector<std::size_t> layers{3, 6, 4, 1};
  for (int trial = 0; trial < 50; ++trial) {
    SslConfig cfg;
    cfg.w_u = rng.uniform(0.5, 3.0);
    cfg.w_c = rng.uniform(0.1, 1.0);
    cfg.aug_strength = 0.4;
    const Model m = testsupport::random_model(layers, rng);
    const auto batch = random_batch(rng, 3, 1 + rng.index(4), 1 + rng.index(5), cfg);
    const auto obj = make_objective(cfg);
    const auto analytic = grad(m, ps_closure(*obj, batch)).gradient;
    const std::vector<double> theta(m.parameters().begin(), m.parameters().end());
    std::vector<double> targets;
    (void)oracle_terms(layers, theta, batch, cfg.temperature, nullptr, &targets);
    const auto numeric = testsupport::numeric_gradient(
        [&](const std::vector<double>& t) {
          const auto terms = oracle_terms(layers, t, batch, cfg.temperature, &targets);
          return terms.supervised + cfg.w_u * terms.prediction + cfg.w_c * terms.feature;
        },
        theta);
    CHECK(testsupport::relative_error(analytic, numeric) < 1e-4);
  }
}

TEST_CASE("ps objective does not depend on the class prior") {
  Rng data(6, "test/prior");
  const Model m = testsupport::random_model({3, 5, 1}, data);
  PsBatch b;
  b.labeled = testsupport::random_matrix(5, 3, data);
  b.targets = {1.0, -0.5, 0.2, 0.9, -1.0};
  b.unlabeled = testsupport::random_matrix(7, 3, data);
  PspuConfig low, high;
  low.risk.prior = 0.05;
  high.risk.prior = 0.6;
  Rng r1(7, "aug"), r2(7, "aug");
  const double a = ps_objective(m, b, low.ssl, r1);
  const double c = ps_objective(m, b, high.ssl, r2);
  CHECK(a == c);
}

TEST_CASE("unknown objective names are rejected") {
  SslConfig cfg;
  cfg.objective = "fixmatch";
  CHECK_THROWS_AS(make_objective(cfg), InvalidArgument);
}
