// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any fails. Benchmarks come from configs/imbalanced.cfg and
// configs/extreme.cfg.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "puforge/cli/commands.hpp"
#include "puforge/cli/config.hpp"
#include "puforge/metrics.hpp"
#include "puforge/orchestrator.hpp"
#include "puforge/pseudo.hpp"
#include "puforge/risk.hpp"
#include "puforge/ssl.hpp"
#include "puforge/tape.hpp"
#include "support.hpp"

using namespace puforge;
using namespace puforge::cli;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

// Collects failed sub-checks with a short message each.
struct Checks {
  std::vector<std::string> failures;
  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  Outcome outcome(std::string detail) const {
    if (failures.empty()) return {true, std::move(detail)};
    std::string msg = detail.empty() ? "" : detail + "; ";
    msg += std::to_string(failures.size()) + " failed, first: " + failures.front();
    return {false, msg};
  }
};

std::string num(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

ExperimentConfig benchmark(const char* name) {
  return load_config(fs::path(PUFORGE_CONFIG_DIR) / (std::string(name) + ".cfg"));
}

struct Finals {
  MetricsRecord pu;
  std::optional<MetricsRecord> ps;
};

Finals run_final(const ExperimentConfig& cfg, Method method, std::uint64_t seed) {
  const RunData data = prepare_data(cfg, seed);
  const Evaluator ev(data.eval, data.train.oracle_view());
  const TrainResult r = train(method, cfg.run_config(seed), data.train.train_view(), &ev);
  Finals f{final_record(r.history, Classifier::PU), std::nullopt};
  if (method == Method::Pspu) f.ps = final_record(r.history, Classifier::PS);
  return f;
}

double mean_f1(const ExperimentConfig& cfg, Method method, Classifier c,
               std::vector<double>* per_seed = nullptr) {
  std::vector<double> f1;
  for (auto seed : cfg.seeds) {
    const Finals f = run_final(cfg, method, seed);
    f1.push_back(c == Classifier::PS ? f.ps->metrics.f1 : f.pu.metrics.f1);
  }
  if (per_seed) *per_seed = f1;
  return mean_std(f1).first;
}

// ---------------------------------------------------------------------------

Outcome estimator_correctness() {
  Checks c;
  Rng rng(101, "accept/estimators");
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t np = 1 + rng.index(100), nu = 1 + rng.index(100);
    std::vector<double> zp(np), zu(nu);
    const double spread = rng.uniform(0.1, 8.0);
    for (double& z : zp) z = rng.normal(rng.uniform(-2, 2), spread);
    for (double& z : zu) z = rng.normal(rng.uniform(-2, 2), spread);
    RiskConfig cfg;
    cfg.prior = rng.uniform(0.01, 0.99);
    double rp_plus = 0.0, rp_minus = 0.0, ru_minus = 0.0;
    for (double z : zp) {
      rp_plus += testsupport::sig_loss(z, 1);
      rp_minus += testsupport::sig_loss(z, -1);
    }
    for (double z : zu) ru_minus += testsupport::sig_loss(z, -1);
    rp_plus /= double(np);
    rp_minus /= double(np);
    ru_minus /= double(nu);
    const double neg = ru_minus - cfg.prior * rp_minus;
    const double upu = cfg.prior * rp_plus + neg;
    const double nnpu = cfg.prior * rp_plus + std::max(0.0, neg);
    const double eu = std::abs(upu_risk(zp, zu, cfg).total - upu);
    const double en = std::abs(nnpu_risk(zp, zu, cfg).total - nnpu);
    worst = std::max({worst, eu, en});
    c.expect(eu <= 1e-9 && en <= 1e-9, "instance " + std::to_string(t));
  }
  RiskConfig half;
  half.prior = 0.5;
  const std::vector<double> zp{3.0}, zu{-3.0, -3.0};
  const double nn = nnpu_risk(zp, zu, half).total, up = upu_risk(zp, zu, half).total;
  c.expect(std::abs(nn - 0.02371) <= 1e-4, "clamp example nnPU " + num(nn, 5));
  c.expect(std::abs(up + 0.40514) <= 1e-4, "clamp example uPU " + num(up, 5));
  return c.outcome("200 instances, max |err| " + num(worst * 1e12, 3) + "e-12; nnPU " +
                   num(nn, 5) + ", uPU " + num(up, 5));
}

Outcome gradient_integrity() {
  Checks c;
  double worst_pu = 0.0, worst_ps = 0.0;
  int defect = 0;
  {
    Rng rng(202, "accept/grad/pu");
    const std::vector<std::size_t> layers{4, 6, 5, 1};
    for (int t = 0; t < 50; ++t) {
      const Model m = testsupport::random_model(layers, rng, 0.8);
      const std::size_t np = 1 + rng.index(8), nu = 2 + rng.index(16);
      FeatureMatrix P(4), U(4);
      RiskConfig cfg;
      if (t % 2 == 0) {
        P = testsupport::random_matrix(np, 4, rng, 0.8);
        U = testsupport::random_matrix(nu, 4, rng);
        cfg.prior = rng.uniform(0.05, 0.9);
      } else {
        // Highest-scored rows as D_p, lowest as D_u, large prior: the negative
        // part goes below zero and the correction branch is taken.
        const auto pool = testsupport::random_matrix(np + nu, 4, rng);
        std::vector<std::size_t> order(np + nu);
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
          return forward(m, pool.row(a)) > forward(m, pool.row(b));
        });
        for (std::size_t k = 0; k < order.size(); ++k) (k < np ? P : U).push_back(pool.row(order[k]));
        cfg.prior = rng.uniform(0.6, 0.95);
      }
      RiskBreakdown br;
      const auto closure = pu_training_objective(P, U, cfg, &br);
      const auto analytic = grad(m, closure).gradient;
      defect += br.negative_part < -cfg.beta;  // filled by the evaluation above
      const auto numeric = testsupport::numeric_gradient(
          [&](const std::vector<double>& th) { return evaluate(Model(layers, th), closure); },
          {m.parameters().begin(), m.parameters().end()});
      const double err = testsupport::relative_error(analytic, numeric);
      worst_pu = std::max(worst_pu, err);
      c.expect(err < 1e-4, "nnPU instance " + std::to_string(t));
    }
    c.expect(defect > 0, "no instance exercised the defect-correction branch");
  }
  {
    Rng rng(203, "accept/grad/ps");
    const std::vector<std::size_t> layers{3, 6, 4, 1};
    for (int t = 0; t < 50; ++t) {
      SslConfig cfg;
      cfg.w_u = rng.uniform(0.5, 50.0);
      cfg.w_c = rng.uniform(0.1, 1.0);
      cfg.temperature = rng.uniform(0.3, 1.0);
      cfg.aug_strength = 0.4;
      const Model m = testsupport::random_model(layers, rng);
      const auto batch = testsupport::random_batch(rng, 3, 1 + rng.index(5), 1 + rng.index(6), cfg);
      const auto obj = make_objective(cfg);
      const auto analytic = grad(m, ps_closure(*obj, batch)).gradient;
      const std::vector<double> theta(m.parameters().begin(), m.parameters().end());
      // The sharpened targets are constants of the step.
      std::vector<double> targets;
      (void)testsupport::oracle_terms(layers, theta, batch, cfg.temperature, nullptr, &targets);
      const auto numeric = testsupport::numeric_gradient(
          [&](const std::vector<double>& th) {
            const auto terms = testsupport::oracle_terms(layers, th, batch, cfg.temperature, &targets);
            return terms.supervised + cfg.w_u * terms.prediction + cfg.w_c * terms.feature;
          },
          theta);
      const double err = testsupport::relative_error(analytic, numeric);
      worst_ps = std::max(worst_ps, err);
      c.expect(err < 1e-4, "ps instance " + std::to_string(t));
    }
  }
  return c.outcome("max rel err nnPU " + num(worst_pu * 1e6, 3) + "e-6 (" +
                   std::to_string(defect) + " in the correction branch), ps " +
                   num(worst_ps * 1e6, 3) + "e-6");
}

Outcome gap_trend() {
  const auto cfg = benchmark("imbalanced");
  std::size_t grows = 0;
  std::string detail;
  for (auto seed : cfg.seeds) {
    const RunData data = prepare_data(cfg, seed);
    const OracleView oracle = data.train.oracle_view();
    const PspuConfig run = cfg.run_config(seed);
    const auto layers = run.layers(data.train.dim());
    double first = 0.0, last = 0.0;
    train(Method::Nnpu, run, data.train.train_view(), nullptr, [&](const EpochArtifacts& a) {
      const double g = risk_gap(Model(layers, a.theta_pu), oracle).value().gap;
      if (a.epoch == 1) first = g;
      last = g;
    });
    grows += last > first;
    detail += " " + num(first, 3) + "->" + num(last, 3);
  }
  return {grows >= 4, std::to_string(grows) + "/" + std::to_string(cfg.seeds.size()) +
                          " seeds grow (epoch 1 -> final):" + detail};
}

Outcome collapse_signature() {
  const auto cfg = benchmark("extreme");
  const double floor = 1.0 - cfg.gaussian.prior - 0.02;
  std::size_t hits = 0;
  std::string detail;
  for (auto seed : cfg.seeds) {
    const auto f = run_final(cfg, Method::Nnpu, seed).pu.metrics;
    hits += f.f1 < 0.1 && f.acc >= floor;
    detail += " (" + num(f.acc, 3) + "," + num(f.f1, 3) + ")";
  }
  return {hits >= 3, std::to_string(hits) + "/" + std::to_string(cfg.seeds.size()) +
                         " seeds with F1 < 0.1 and acc >= " + num(floor, 2) + "; (acc,f1):" + detail};
}

Outcome pspu_improvement() {
  Checks c;
  std::string detail;
  for (const char* name : {"imbalanced", "extreme"}) {
    const auto cfg = benchmark(name);
    const double ps = mean_f1(cfg, Method::Pspu, Classifier::PS);
    const double nn = mean_f1(cfg, Method::Nnpu, Classifier::PU);
    c.expect(ps - nn >= 0.05, std::string(name) + " margin " + num(ps - nn, 3));
    detail += std::string(detail.empty() ? "" : "; ") + name + " g_ps " + num(ps, 3) + " vs nnPU " +
              num(nn, 3);
  }
  return c.outcome(detail);
}

Outcome ablation_directions() {
  Checks c;
  std::string detail;
  // Selection-ratio sweep on the imbalanced benchmark, the other two on the extreme one.
  const auto extreme = benchmark("extreme");
  const auto imbalanced = benchmark("imbalanced");
  auto variant = [](ExperimentConfig cfg, auto&& tweak) {
    tweak(cfg);
    return mean_f1(cfg, Method::Pspu, Classifier::PS);
  };

  const double mixup = variant(extreme, [](ExperimentConfig& x) { x.train.selection.mixup = true; });
  const double vanilla = variant(extreme, [](ExperimentConfig& x) { x.train.selection.mixup = false; });
  c.expect(mixup >= vanilla, "mixup " + num(mixup, 3) + " < vanilla " + num(vanilla, 3));
  detail += "(a) mixup " + num(mixup, 3) + " vs vanilla " + num(vanilla, 3);

  const double pkt = variant(extreme, [](ExperimentConfig& x) { x.train.transfer = TransferMode::Pkt; });
  const double indep =
      variant(extreme, [](ExperimentConfig& x) { x.train.transfer = TransferMode::Independent; });
  c.expect(pkt > indep, "pkt " + num(pkt, 4) + " <= independent " + num(indep, 4));
  detail += "; (b) pkt " + num(pkt, 4) + " vs independent " + num(indep, 4);

  double f[3];
  const double ratios[3] = {0.1, 0.5, 1.0};
  for (int k = 0; k < 3; ++k) {
    f[k] = variant(imbalanced, [&](ExperimentConfig& x) { x.train.selection.ratio = ratios[k]; });
  }
  c.expect(f[1] > f[0], "r=0.5 " + num(f[1], 3) + " <= r=0.1 " + num(f[0], 3));
  c.expect(f[2] > f[0], "r=1 " + num(f[2], 3) + " <= r=0.1 " + num(f[0], 3));
  detail += "; (c) r=0.1/0.5/1: " + num(f[0], 3) + "/" + num(f[1], 3) + "/" + num(f[2], 3);
  return c.outcome(detail);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome algebraic_suite() {
  Checks c;
  Rng rng(707, "accept/algebra");

  // pkt transfer endpoints and convex combination
  for (int t = 0; t < 100; ++t) {
    std::vector<double> a(33), b(33);
    for (double& v : a) v = rng.normal(0.0, 2.0);
    for (double& v : b) v = rng.normal(0.0, 2.0);
    c.expect(pkt_transfer(a, b, 1.0) == a, "pkt lambda=1");
    c.expect(pkt_transfer(a, b, 0.0) == b, "pkt lambda=0");
    const double lambda = rng.uniform();
    const auto m = pkt_transfer(a, b, lambda);
    for (std::size_t i = 0; i < a.size(); ++i) {
      c.expect(std::abs(m[i] - (lambda * a[i] + (1 - lambda) * b[i])) <= 1e-12, "pkt combination");
    }
  }
  const auto ex = pkt_transfer(std::vector<double>{1, 0}, std::vector<double>{0, 1}, 0.6);
  c.expect(std::abs(ex[0] - 0.6) < 1e-15 && std::abs(ex[1] - 0.4) < 1e-15, "pkt example");

  // partition disjointness and coverage in every epoch of a benchmark run
  auto cfg = benchmark("imbalanced");
  cfg.train.epochs = 4;
  const RunData data = prepare_data(cfg, 1);
  const TrainView tv = data.train.train_view();
  const std::size_t nu = tv.unlabeled.rows();
  std::size_t audited = 0;
  train(Method::Pspu, cfg.run_config(1), tv, nullptr, [&](const EpochArtifacts& a) {
    std::set<std::size_t> all;
    std::size_t total = 0;
    for (const auto* part : {&a.partition.positive, &a.partition.negative, &a.partition.rest}) {
      all.insert(part->begin(), part->end());
      total += part->size();
    }
    c.expect(total == nu && all.size() == nu && *all.rbegin() == nu - 1,
             "partition epoch " + std::to_string(a.epoch));
    c.expect(a.partition.positive.size() == a.pseudo.n_s, "n_s positives");
    ++audited;
  });
  c.expect(audited == 4, "observer saw every epoch");

  // mixup reconstruction from provenance
  const auto P = testsupport::random_matrix(12, 5, rng, 1.0);
  const auto N = testsupport::random_matrix(9, 5, rng, -1.0);
  const auto mixed = mix_pairs(P, N, MixConfig{200, 0.75, std::nullopt}, rng);
  for (std::size_t k = 0; k < mixed.size(); ++k) {
    const auto& pr = mixed.provenance[k];
    const auto x = reconstruct(mixed, k, P, N);
    const auto row = mixed.x.row(k);
    c.expect(std::equal(x.begin(), x.end(), row.begin(), row.end()), "reconstruction");
    c.expect(std::abs(mixed.labels[k] - (2.0 * pr.beta - 1.0)) <= 1e-15, "mixed label");
  }

  // ps objective ignores the class prior
  for (int t = 0; t < 20; ++t) {
    PspuConfig lo, hi;
    lo.risk.prior = rng.uniform(0.01, 0.5);
    hi.risk.prior = rng.uniform(0.5, 0.99);
    const Model m = testsupport::random_model({5, 7, 1}, rng);
    PsBatch b{testsupport::random_matrix(4, 5, rng), {1.0, 0.3, -0.2, -1.0},
              testsupport::random_matrix(6, 5, rng)};
    Rng r1(t, "aug"), r2(t, "aug");
    c.expect(ps_objective(m, b, lo.ssl, r1) == ps_objective(m, b, hi.ssl, r2), "prior invariance");
  }

  // independent transfer leaves g_pu bit-identical to standalone nnPU
  for (auto seed : {std::uint64_t{1}, std::uint64_t{2}}) {
    auto run = cfg.run_config(seed);
    run.transfer = TransferMode::Independent;
    const RunData d = prepare_data(cfg, seed);
    const auto a = train_pspu(run, d.train.train_view());
    const auto b = train_pu(run, d.train.train_view(), Estimator::NonNegative);
    c.expect(std::equal(a.g_pu.parameters().begin(), a.g_pu.parameters().end(),
                        b.g_pu.parameters().begin(), b.g_pu.parameters().end()),
             "independent mode vs nnPU, seed " + std::to_string(seed));
  }

  // same seed, byte-identical metrics.csv
  auto small = cfg;
  small.seeds = {1, 2};
  small.train.epochs = 3;
  small.plot = false;
  const auto root = fs::temp_directory_path() / "puforge_acceptance";
  fs::remove_all(root);
  std::ostringstream log;
  cmd_train(small, Method::Pspu, root / "a", log);
  cmd_train(small, Method::Pspu, root / "b", log);
  for (const char* s : {"seed_1", "seed_2"}) {
    const auto ta = slurp(root / "a" / s / "metrics.csv");
    c.expect(!ta.empty() && ta == slurp(root / "b" / s / "metrics.csv"), "metrics.csv differs");
  }
  fs::remove_all(root);
  return c.outcome("pkt, partitions x4 epochs, 200 mixup rebuilds, prior invariance, "
                   "independent==nnPU, metrics.csv determinism");
}

Outcome metrics_correctness() {
  Checks c;
  Rng rng(808, "accept/metrics");
  for (int t = 0; t < 20; ++t) {
    const std::size_t n = 2 + rng.index(11);
    std::vector<double> s(n);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = std::round(rng.uniform(-3.0, 3.0));  // integer scores force ties
      y[i] = rng.bernoulli(0.5) ? 1 : -1;
    }
    y[0] = 1;
    y[n - 1] = -1;
    double tp = 0, fp = 0, fn = 0, correct = 0, wins = 0, pairs = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const bool pred = s[i] > 0.0;
      tp += pred && y[i] == 1;
      fp += pred && y[i] == -1;
      fn += !pred && y[i] == 1;
      correct += pred == (y[i] == 1);
      if (y[i] != 1) continue;
      for (std::size_t j = 0; j < n; ++j) {
        if (y[j] != -1) continue;
        pairs += 1;
        wins += s[i] > s[j] ? 1.0 : s[i] == s[j] ? 0.5 : 0.0;
      }
    }
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = tp / (tp + fn);
    const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    const auto m = compute_metrics(s, y);
    c.expect(std::abs(m.acc - correct / double(n)) <= 1e-12, "acc " + std::to_string(t));
    c.expect(std::abs(m.f1 - f1) <= 1e-12, "f1 " + std::to_string(t));
    c.expect(m.auc && std::abs(*m.auc - wins / pairs) <= 1e-12, "auc " + std::to_string(t));
  }
  for (std::size_t n : {10u, 100u, 137u, 2000u}) {
    std::vector<double> s(n, -1.0);
    std::vector<int> y(n, -1);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; i += 7) y[i] = 1, ++pos;
    const auto m = compute_metrics(s, y);
    const double negatives = static_cast<double>(n - pos) / static_cast<double>(n);
    c.expect(m.acc == negatives && m.f1 == 0.0, "all-negative case n=" + std::to_string(n));
  }
  return c.outcome("20 tiny instances plus 4 all-negative sets");
}

struct Criterion {
  int id;
  const char* name;
  double budget_seconds;
  std::function<Outcome()> run;
};

}  // namespace

// Optional arguments select criteria by number; no arguments runs all of them.
int main(int argc, char** argv) {
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  const std::vector<Criterion> criteria = {
      {1, "estimator correctness", 5, estimator_correctness},
      {2, "gradient integrity", 30, gradient_integrity},
      {3, "risk gap grows under nnPU", 120, gap_trend},
      {4, "nnPU collapse on the extreme benchmark", 120, collapse_signature},
      {5, "PSPU g_ps beats nnPU", 600, pspu_improvement},
      {6, "ablation directions", 1200, ablation_directions},
      {7, "exact algebraic suite", 120, algebraic_suite},
      {8, "metrics correctness", 5, metrics_correctness},
  };
  int failed = 0, ran = 0;
  for (const auto& cr : criteria) {
    if (!only.empty() && !only.count(cr.id)) continue;
    ++ran;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = cr.run();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.budget_seconds) {
      out.pass = false;
      out.detail += "; over time budget of " + num(cr.budget_seconds, 0) + " s";
    }
    failed += !out.pass;
    std::cout << (out.pass ? "PASS" : "FAIL") << " [" << cr.id << "] " << cr.name << " ("
              << num(secs, 1) << " s): " << out.detail << std::endl;
  }
  std::cout << (ran - failed) << "/" << ran << " criteria passed"
            << std::endl;
  return failed == 0 ? 0 : 1;
}
