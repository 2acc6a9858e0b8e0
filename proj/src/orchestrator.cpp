#include "puforge/orchestrator.hpp"

#include <cmath>
#include <string>

#include "puforge/error.hpp"

namespace puforge {
namespace {

std::size_t ceil_div(std::size_t a, std::size_t b) { return b == 0 ? 0 : (a + b - 1) / b; }

// Rows perm[(start + k) % n] for k < count, wrapping around the permutation.
std::vector<std::size_t> cyclic_slice(const std::vector<std::size_t>& perm, std::size_t start,
                                      std::size_t count) {
  std::vector<std::size_t> out;
  if (perm.empty()) return out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) out.push_back(perm[(start + k) % perm.size()]);
  return out;
}

std::size_t default_steps(const PspuConfig& cfg, const TrainView& data) {
  return ceil_div(data.unlabeled.rows(), cfg.batch_size);
}

void copy_parameters(Model& to, const Model& from) {
  to.set_parameters(std::vector<double>(from.parameters().begin(), from.parameters().end()));
}

struct PsPhaseStats {
  std::size_t steps = 0;
  double mean_objective = 0.0;
};

PsPhaseStats ps_phase(PspuState& state, const PrimeDataset& prime, const PspuConfig& cfg,
                      std::size_t n_unlabeled, std::size_t epoch) {
  PsPhaseStats stats;
  stats.steps = cfg.steps_ps.value_or(ceil_div(n_unlabeled, cfg.batch_size));
  if (stats.steps == 0) return stats;
  const auto objective = make_objective(cfg.ssl);
  const std::size_t n_l = prime.labeled.rows();
  const std::size_t n_u = prime.unlabeled.rows();
  const std::size_t bl = ceil_div(n_l, stats.steps);
  const std::size_t bu = ceil_div(n_u, stats.steps);
  const auto perm_l = state.ps_rng.permutation(n_l);
  const auto perm_u = state.ps_rng.permutation(n_u);
  for (std::size_t s = 0; s < stats.steps; ++s) {
    const auto li = cyclic_slice(perm_l, s * bl, bl);
    const auto ui = cyclic_slice(perm_u, s * bu, bu);
    PsBatch batch;
    batch.labeled = gather(prime.labeled, li);
    batch.targets.reserve(li.size());
    for (std::size_t i : li) batch.targets.push_back(prime.labeled_targets[i]);
    batch.unlabeled = gather(prime.unlabeled, ui);
    const PreparedBatch prepared = prepare_batch(std::move(batch), cfg.ssl, state.aug_rng);
    try {
      const auto lg = grad(state.g_ps, ps_closure(*objective, prepared));
      state.opt_ps.step(state.g_ps.parameters(), lg.gradient);
      stats.mean_objective += lg.loss;
    } catch (const NumericError& e) {
      throw e.with_context("pseudo-supervised", epoch, s);
    }
  }
  stats.mean_objective /= static_cast<double>(stats.steps);
  return stats;
}

}  // namespace

std::string_view to_string(TransferMode mode) {
  switch (mode) {
    case TransferMode::Independent: return "independent";
    case TransferMode::Inherit: return "inherit";
    case TransferMode::Pkt: return "pkt";
  }
  return "?";
}

TransferMode parse_transfer_mode(std::string_view text) {
  if (text == "independent") return TransferMode::Independent;
  if (text == "inherit") return TransferMode::Inherit;
  if (text == "pkt") return TransferMode::Pkt;
  throw InvalidArgument("unknown transfer mode '" + std::string(text) + "'");
}

std::string_view to_string(Method method) {
  switch (method) {
    case Method::Upu: return "upu";
    case Method::Nnpu: return "nnpu";
    case Method::Pspu: return "pspu";
  }
  return "?";
}

Method parse_method(std::string_view text) {
  if (text == "upu") return Method::Upu;
  if (text == "nnpu") return Method::Nnpu;
  if (text == "pspu") return Method::Pspu;
  throw InvalidArgument("unknown method '" + std::string(text) + "'");
}

void PspuConfig::validate() const {
  if (epochs == 0) throw InvalidArgument("epochs must be at least 1");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("lambda must lie in [0, 1]");
  if (batch_size == 0) throw InvalidArgument("batch_size must be positive");
  if (!(lr_pu > 0.0) || !(lr_ps > 0.0)) throw InvalidArgument("learning rates must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  if (hidden.empty()) throw InvalidArgument("model needs at least one hidden layer");
  selection.validate();
  ssl.validate();
  risk.validate();
}

std::vector<std::size_t> PspuConfig::layers(std::size_t input_dim) const {
  std::vector<std::size_t> out{input_dim};
  out.insert(out.end(), hidden.begin(), hidden.end());
  out.push_back(1);
  return out;
}

std::vector<double> pkt_transfer(std::span<const double> theta_pu, std::span<const double> theta_ps,
                                 double lambda) {
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw InvalidArgument("pkt_transfer: lambda outside [0, 1]");
  if (theta_pu.size() != theta_ps.size()) {
    throw InvalidArgument("pkt_transfer: parameter vectors differ in length");
  }
  std::vector<double> out(theta_pu.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = lambda * theta_pu[i] + (1.0 - lambda) * theta_ps[i];
  }
  return out;
}

Model initial_model(const PspuConfig& cfg, std::size_t input_dim) {
  Rng rng(cfg.seed, "train/init");
  return init_model(cfg.layers(input_dim), rng);
}

PspuState::PspuState(const PspuConfig& cfg, std::size_t input_dim)
    : g_pu(initial_model(cfg, input_dim)),
      g_ps(g_pu),
      opt_pu(cfg.lr_pu, cfg.momentum),
      opt_ps(cfg.lr_ps, cfg.momentum),
      pu_rng(cfg.seed, "train/pu"),
      ps_rng(cfg.seed, "train/ps"),
      mix_rng(cfg.seed, "train/mix"),
      aug_rng(cfg.seed, "train/aug") {}

PuPhaseStats pu_phase(Model& model, SgdOptimizer& opt, const TrainView& data,
                      const PspuConfig& cfg, Rng& rng, std::size_t epoch) {
  PuPhaseStats stats;
  stats.steps = cfg.steps_pu.value_or(default_steps(cfg, data));
  if (stats.steps == 0) return stats;
  const std::size_t n_p = data.positives.rows();
  const std::size_t n_u = data.unlabeled.rows();
  if (n_p == 0 || n_u == 0) throw InvalidArgument("PU training needs positives and unlabeled data");
  const std::size_t bu = ceil_div(n_u, stats.steps);
  const std::size_t bp = ceil_div(n_p, stats.steps);
  const auto perm_u = rng.permutation(n_u);
  const auto perm_p = rng.permutation(n_p);
  for (std::size_t s = 0; s < stats.steps; ++s) {
    const FeatureMatrix pb = gather(data.positives, cyclic_slice(perm_p, s * bp, bp));
    const FeatureMatrix ub = gather(data.unlabeled, cyclic_slice(perm_u, s * bu, bu));
    RiskBreakdown breakdown;
    try {
      const auto lg = grad(model, pu_training_objective(pb, ub, cfg.risk, &breakdown));
      opt.step(model.parameters(), lg.gradient);
      stats.mean_objective += breakdown.total;
    } catch (const NumericError& e) {
      throw e.with_context("pu", epoch, s);
    }
    if (cfg.risk.estimator == Estimator::NonNegative && breakdown.negative_part < -cfg.risk.beta) {
      ++stats.defect_steps;
    }
  }
  stats.mean_objective /= static_cast<double>(stats.steps);
  return stats;
}

EpochArtifacts run_epoch(PspuState& state, const TrainView& data, const PspuConfig& cfg,
                         const Evaluator* evaluator) {
  cfg.validate();
  EpochArtifacts art;
  art.epoch = ++state.epoch;
  const std::size_t epoch = art.epoch;

  // (1) PU updates of g_pu.
  const PuPhaseStats pu = pu_phase(state.g_pu, state.opt_pu, data, cfg, state.pu_rng, epoch);
  art.steps_pu = pu.steps;
  art.mean_pu_objective = pu.mean_objective;
  art.defect_steps = pu.defect_steps;
  art.theta_pu_before_transfer.assign(state.g_pu.parameters().begin(),
                                      state.g_pu.parameters().end());

  // g_ps starts from the trained g_pu; inherit mode (and the reinit flag)
  // repeat the copy every epoch.
  if (epoch == 1 || cfg.reinit_ps || cfg.transfer == TransferMode::Inherit) {
    copy_parameters(state.g_ps, state.g_pu);
    state.opt_ps.reset();
  }

  // (2)-(5) Pseudo supervision from g_pu's ranking of the unlabeled pool.
  const std::vector<double> scores = score_unlabeled(state.g_pu, data.unlabeled);
  const std::size_t n_s = selection_count(cfg.selection, cfg.risk.prior, data.unlabeled.rows());
  art.partition = select_confident(scores, n_s);
  const FeatureMatrix conf_pos = gather(data.unlabeled, art.partition.positive);
  const FeatureMatrix conf_neg = gather(data.unlabeled, art.partition.negative);
  PseudoSet pseudo;
  if (cfg.selection.mixup) {
    MixConfig mix{cfg.selection.n_mix.value_or(2 * n_s), cfg.selection.alpha, std::nullopt};
    pseudo = mix_pairs(conf_pos, conf_neg, mix, state.mix_rng);
  } else {
    pseudo = direct_pseudo(conf_pos, conf_neg);
  }
  const PrimeDataset prime = build_prime(data.positives, pseudo, data.unlabeled, art.partition);
  art.pseudo.n_s = n_s;
  art.pseudo.count = pseudo.size();
  art.pseudo.rest = prime.unlabeled.rows();
  for (double y : pseudo.labels) art.pseudo.mean_label += y;
  if (pseudo.size() > 0) art.pseudo.mean_label /= static_cast<double>(pseudo.size());

  // (6) Pseudo-supervised updates of g_ps.
  const PsPhaseStats ps = ps_phase(state, prime, cfg, data.unlabeled.rows(), epoch);
  art.steps_ps = ps.steps;
  art.mean_ps_objective = ps.mean_objective;

  // (7) Knowledge transfer back into g_pu.
  if (cfg.transfer == TransferMode::Pkt) {
    state.g_pu.set_parameters(
        pkt_transfer(state.g_pu.parameters(), state.g_ps.parameters(), cfg.lambda));
  }
  art.theta_pu.assign(state.g_pu.parameters().begin(), state.g_pu.parameters().end());
  art.theta_ps.assign(state.g_ps.parameters().begin(), state.g_ps.parameters().end());

  if (evaluator != nullptr) {
    art.pu_metrics = evaluator->evaluate(state.g_pu, epoch, Classifier::PU);
    art.ps_metrics = evaluator->evaluate(state.g_ps, epoch, Classifier::PS);
  }
  return art;
}

TrainResult train_pspu(const PspuConfig& cfg, const TrainView& data, const Evaluator* evaluator,
                       const EpochObserver& observer) {
  cfg.validate();
  PspuState state(cfg, data.positives.cols());
  TrainResult result{state.g_pu, std::nullopt, std::nullopt, {}, 0};
  if (evaluator != nullptr) result.initial = evaluator->evaluate(state.g_pu, 0, Classifier::PU);
  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    EpochArtifacts art = run_epoch(state, data, cfg, evaluator);
    result.total_steps += art.steps_pu + art.steps_ps;
    if (art.pu_metrics) result.history.push_back(*art.pu_metrics);
    if (art.ps_metrics) result.history.push_back(*art.ps_metrics);
    if (observer) observer(art);
  }
  result.g_pu = state.g_pu;
  result.g_ps = state.g_ps;
  return result;
}

TrainResult train_pu(const PspuConfig& cfg, const TrainView& data, Estimator estimator,
                     const Evaluator* evaluator, const EpochObserver& observer) {
  PspuConfig run = cfg;
  run.risk.estimator = estimator;
  run.validate();
  // Same streams as PspuState so that g_pu trajectories line up.
  Model model = initial_model(run, data.positives.cols());
  SgdOptimizer opt(run.lr_pu, run.momentum);
  Rng rng(run.seed, "train/pu");
  TrainResult result{model, std::nullopt, std::nullopt, {}, 0};
  if (evaluator != nullptr) result.initial = evaluator->evaluate(model, 0, Classifier::PU);
  for (std::size_t epoch = 1; epoch <= run.epochs; ++epoch) {
    const PuPhaseStats pu = pu_phase(model, opt, data, run, rng, epoch);
    EpochArtifacts art;
    art.epoch = epoch;
    art.steps_pu = pu.steps;
    art.mean_pu_objective = pu.mean_objective;
    art.defect_steps = pu.defect_steps;
    art.theta_pu.assign(model.parameters().begin(), model.parameters().end());
    art.theta_pu_before_transfer = art.theta_pu;
    if (evaluator != nullptr) {
      art.pu_metrics = evaluator->evaluate(model, epoch, Classifier::PU);
      result.history.push_back(*art.pu_metrics);
    }
    result.total_steps += pu.steps;
    if (observer) observer(art);
  }
  result.g_pu = std::move(model);
  return result;
}

TrainResult train(Method method, const PspuConfig& cfg, const TrainView& data,
                  const Evaluator* evaluator, const EpochObserver& observer) {
  switch (method) {
    case Method::Upu: return train_pu(cfg, data, Estimator::Unbiased, evaluator, observer);
    case Method::Nnpu: return train_pu(cfg, data, Estimator::NonNegative, evaluator, observer);
    case Method::Pspu: return train_pspu(cfg, data, evaluator, observer);
  }
  throw InvalidArgument("unknown method");
}

}  // namespace puforge
