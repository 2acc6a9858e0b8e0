#include "puforge/cli/commands.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include <CLI11.hpp>

#include "puforge/cli/plot.hpp"
#include "puforge/error.hpp"

namespace puforge::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

fs::path seed_dir(const fs::path& out, std::uint64_t seed) {
  return out / ("seed_" + std::to_string(seed));
}

// Runs job(i) for i < n on up to worker_count(n) threads and rethrows the
// first failure in index order.
template <typename Job>
void for_each_seed(std::size_t n, Job job) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        job(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = worker_count(n);
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

json metric_json(const MetricsRecord& r) {
  json j;
  j["acc"] = r.metrics.acc;
  j["f1"] = r.metrics.f1;
  j["auc"] = r.metrics.auc ? json(*r.metrics.auc) : json(nullptr);
  j["risk_gap"] = r.risk ? json(r.risk->gap) : json(nullptr);
  return j;
}

json summarize(Method method, const std::vector<SeedRun>& runs) {
  json out;
  out["method"] = std::string(to_string(method));
  out["seeds"] = json::array();
  for (const auto& r : runs) out["seeds"].push_back(r.seed);
  std::vector<Classifier> classifiers{Classifier::PU};
  if (method == Method::Pspu) classifiers.push_back(Classifier::PS);
  for (Classifier c : classifiers) {
    json block;
    block["per_seed"] = json::array();
    std::map<std::string, std::vector<double>> columns;
    for (const auto& run : runs) {
      const MetricsRecord& rec = final_record(run.result.history, c);
      json row = metric_json(rec);
      row["seed"] = run.seed;
      block["per_seed"].push_back(row);
      columns["acc"].push_back(rec.metrics.acc);
      columns["f1"].push_back(rec.metrics.f1);
      if (rec.metrics.auc) columns["auc"].push_back(*rec.metrics.auc);
      if (rec.risk) columns["risk_gap"].push_back(rec.risk->gap);
    }
    for (const char* name : {"acc", "f1", "auc", "risk_gap"}) {
      const auto& col = columns[name];
      if (col.empty()) {
        block["mean"][name] = nullptr;
        block["std"][name] = nullptr;
      } else {
        const auto [m, s] = mean_std(col);
        block["mean"][name] = m;
        block["std"][name] = s;
      }
    }
    out["classifiers"][std::string(to_string(c))] = block;
  }
  return out;
}

std::string event_line(const EpochArtifacts& a, bool pspu) {
  std::string s = "epoch=" + std::to_string(a.epoch) + " stage=pu steps=" +
                  std::to_string(a.steps_pu) + " objective=" + fmt(a.mean_pu_objective) +
                  " defect_steps=" + std::to_string(a.defect_steps) + "\n";
  if (pspu) {
    s += "epoch=" + std::to_string(a.epoch) + " stage=ps steps=" + std::to_string(a.steps_ps) +
         " objective=" + fmt(a.mean_ps_objective) + " n_s=" + std::to_string(a.pseudo.n_s) +
         " pseudo=" + std::to_string(a.pseudo.count) + " rest=" + std::to_string(a.pseudo.rest) +
         "\n";
  }
  return s;
}

void archive_config(const ExperimentConfig& cfg, const fs::path& out_dir) {
  ExperimentConfig resolved = cfg;
  resolved.out_dir = out_dir.string();
  write_text(out_dir / "config.resolved", dump_config(resolved));
}

}  // namespace

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("PU_FORGE_THREADS"); env != nullptr && *env != '\0') {
    std::size_t cap = 0;
    const std::string_view v(env);
    const auto res = std::from_chars(v.data(), v.data() + v.size(), cap);
    if (res.ec == std::errc{} && cap > 0) n = cap;
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

std::pair<double, double> mean_std(const std::vector<double>& values) {
  if (values.empty()) return {0.0, 0.0};
  double sum = 0.0;
  for (double v : values) sum += v;
  const double mean = sum / static_cast<double>(values.size());
  if (values.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

const MetricsRecord& final_record(const std::vector<MetricsRecord>& history, Classifier classifier) {
  for (auto it = history.rbegin(); it != history.rend(); ++it) {
    if (it->classifier == classifier) return *it;
  }
  throw InvalidArgument("no metrics recorded for " + std::string(to_string(classifier)));
}

std::string format_metrics_csv(const std::vector<MetricsRecord>& history) {
  std::string out = "epoch,classifier,acc,f1,auc,risk_gap\n";
  for (const auto& r : history) {
    out += std::to_string(r.epoch) + "," + std::string(to_string(r.classifier)) + "," +
           fmt(r.metrics.acc) + "," + fmt(r.metrics.f1) + "," + fmt(r.metrics.auc) + "," +
           (r.risk ? fmt(r.risk->gap) : std::string()) + "\n";
  }
  return out;
}

RunData prepare_data(const ExperimentConfig& cfg, std::uint64_t seed) {
  if (cfg.source == DataSource::Synthetic) {
    const std::uint64_t ds = cfg.data_seed.value_or(seed);
    const auto& g = cfg.gaussian;
    return RunData{gen_gaussian_pu(g, ds),
                   gen_gaussian_labeled(g.dim, cfg.n_test, g.prior, g.separation, ds)};
  }
  PUDataset train = load_csv(cfg.data_path, cfg.gaussian.prior, cfg.gaussian.regime);
  if (!cfg.test_path.empty()) {
    LabeledSet eval = load_labeled_csv(cfg.test_path);
    if (eval.x.cols() != train.dim()) throw ParseError("test set width differs from training set", 0);
    return RunData{std::move(train), std::move(eval)};
  }
  OracleView oracle = train.oracle_view();
  LabeledSet eval{std::move(oracle.unlabeled), std::move(oracle.unlabeled_labels)};
  return RunData{std::move(train), std::move(eval)};
}

GenDataReport cmd_gen_data(const ExperimentConfig& cfg, const fs::path& out_dir,
                           std::ostream& log) {
  if (cfg.source != DataSource::Synthetic) {
    throw ConfigError("gen-data generates synthetic data; set data.source = synthetic");
  }
  cfg.validate();
  make_dir(out_dir);
  const std::uint64_t seed = cfg.data_seed.value_or(cfg.seeds.front());
  const RunData data = prepare_data(cfg, seed);
  GenDataReport report;
  report.data_file = out_dir / "data.csv";
  report.test_file = out_dir / "test.csv";
  save_csv(data.train, report.data_file);
  save_labeled_csv(data.eval, report.test_file);
  archive_config(cfg, out_dir);

  const double p = cfg.gaussian.prior;
  report.rows = data.train.size();
  report.n_labeled = data.train.labeled_count();
  report.n_unlabeled = data.train.unlabeled_count();
  report.empirical_prior = data.train.positive_fraction();
  report.tolerance = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(cfg.gaussian.n_total));
  report.within_tolerance = std::abs(report.empirical_prior - p) <= report.tolerance;
  log << "wrote " << report.data_file.string() << " (" << report.rows << " rows) and "
      << report.test_file.string() << " (" << data.eval.size() << " rows)\n"
      << "N_p=" << report.n_labeled << " N_u=" << report.n_unlabeled
      << " empirical_prior=" << report.empirical_prior << " target=" << p << " tolerance=+/-"
      << report.tolerance << (report.within_tolerance ? " [ok]" : " [outside tolerance]")
      << "\n";
  return report;
}

TrainReport cmd_train(const ExperimentConfig& cfg, Method method, const fs::path& out_dir,
                      std::ostream& log) {
  cfg.validate();
  make_dir(out_dir);
  ExperimentConfig effective = cfg;
  effective.method = method;
  archive_config(effective, out_dir);

  TrainReport report;
  std::vector<std::optional<SeedRun>> slots(cfg.seeds.size());
  for_each_seed(cfg.seeds.size(), [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    const fs::path dir = seed_dir(out_dir, seed);
    make_dir(dir);
    const RunData data = prepare_data(cfg, seed);
    const TrainView view = data.train.train_view();
    const Evaluator evaluator(data.eval, data.train.oracle_view());
    std::string events;
    const auto observer = [&](const EpochArtifacts& a) {
      events += event_line(a, method == Method::Pspu);
    };
    TrainResult result = train(method, cfg.run_config(seed), view, &evaluator, observer);
    events += "total_steps=" + std::to_string(result.total_steps) + "\n";
    write_text(dir / "events.log", events);
    write_text(dir / "metrics.csv", format_metrics_csv(result.history));
    save_model(result.g_pu, dir / "g_pu.model");
    if (result.g_ps) save_model(*result.g_ps, dir / "g_ps.model");
    slots[i] = SeedRun{seed, std::move(result)};
  });

  for (auto& s : slots) report.runs.push_back(std::move(*s));
  report.summary = summarize(method, report.runs);
  write_text(out_dir / "summary.json", report.summary.dump(2) + "\n");
  for (const auto& [name, block] : report.summary["classifiers"].items()) {
    const auto& mean = block["mean"];
    const auto& sd = block["std"];
    log << to_string(method) << " " << name << ": F1 " << mean["f1"] << " +/- " << sd["f1"]
        << ", ACC " << mean["acc"] << " +/- " << sd["acc"] << ", AUC " << mean["auc"] << "\n";
  }
  return report;
}

GapReport cmd_diagnose_gap(const ExperimentConfig& cfg, Method method, const fs::path& out_dir,
                           std::ostream& log) {
  cfg.validate();
  make_dir(out_dir);
  ExperimentConfig effective = cfg;
  effective.method = method;
  archive_config(effective, out_dir);

  GapReport report;
  report.seeds = cfg.seeds;
  report.rows.resize(cfg.seeds.size());
  for_each_seed(cfg.seeds.size(), [&](std::size_t i) {
    const std::uint64_t seed = cfg.seeds[i];
    const fs::path dir = seed_dir(out_dir, seed);
    make_dir(dir / "snapshots");
    const RunData data = prepare_data(cfg, seed);
    const OracleView oracle = data.train.oracle_view();
    const PspuConfig run_cfg = cfg.run_config(seed);
    const auto layers = run_cfg.layers(data.train.dim());

    std::vector<GapRow> rows;
    auto record = [&](std::size_t epoch, const Model& model) {
      const auto gap = risk_gap(model, oracle);
      if (!gap) {
        throw ConfigError(
            "risk gap needs hidden positives in the unlabeled pool; the data has none");
      }
      rows.push_back(GapRow{epoch, *gap});
      save_model(model, dir / "snapshots" / ("epoch_" + std::to_string(epoch) + ".model"));
    };
    record(0, initial_model(run_cfg, data.train.dim()));
    const auto observer = [&](const EpochArtifacts& a) { record(a.epoch, Model(layers, a.theta_pu)); };
    train(method, run_cfg, data.train.train_view(), nullptr, observer);

    std::string csv = "epoch,risk_labeled,risk_oracle,gap\n";
    for (const auto& r : rows) {
      csv += std::to_string(r.epoch) + "," + fmt(r.risk.labeled) + "," + fmt(r.risk.oracle) + "," +
             fmt(r.risk.gap) + "\n";
    }
    write_text(dir / "gap.csv", csv);
    if (cfg.plot) {
      std::vector<double> x, labeled, oracle_risk;
      for (const auto& r : rows) {
        x.push_back(static_cast<double>(r.epoch));
        labeled.push_back(r.risk.labeled);
        oracle_risk.push_back(r.risk.oracle);
      }
      write_line_plot_svg(dir / "gap.svg", "PU risk vs oracle risk (seed " + std::to_string(seed) + ")",
                          "epoch", x,
                          {{"R_p^- (labeled)", labeled, "#1f77b4"},
                           {"R_pu^- (oracle)", oracle_risk, "#d62728"}});
    }
    report.rows[i] = std::move(rows);
  });

  for (std::size_t i = 0; i < report.seeds.size(); ++i) {
    const auto& rows = report.rows[i];
    log << "seed " << report.seeds[i] << ": gap epoch 0 = " << rows.front().risk.gap
        << ", epoch 1 = " << (rows.size() > 1 ? rows[1].risk.gap : rows.front().risk.gap)
        << ", final = " << rows.back().risk.gap << "\n";
  }
  return report;
}

std::string_view to_string(Sweep sweep) {
  switch (sweep) {
    case Sweep::NsRatio: return "ns_ratio";
    case Sweep::TransferMode: return "transfer_mode";
    case Sweep::MixupOnOff: return "mixup_onoff";
  }
  return "?";
}

Sweep parse_sweep(std::string_view text) {
  if (text == "ns_ratio") return Sweep::NsRatio;
  if (text == "transfer_mode") return Sweep::TransferMode;
  if (text == "mixup_onoff") return Sweep::MixupOnOff;
  throw ConfigError("unknown sweep '" + std::string(text) + "'");
}

std::vector<AblationRow> cmd_ablate(const ExperimentConfig& cfg, Sweep sweep,
                                    const fs::path& out_dir, std::ostream& log) {
  cfg.validate();
  make_dir(out_dir);
  ExperimentConfig effective = cfg;
  effective.method = Method::Pspu;
  archive_config(effective, out_dir);

  struct Variant {
    std::string value;
    ExperimentConfig cfg;
  };
  std::vector<Variant> variants;
  switch (sweep) {
    case Sweep::NsRatio:
      for (double r : {0.1, 0.5, 1.0}) {
        Variant v{fmt(r), effective};
        v.cfg.train.selection.ratio = r;
        variants.push_back(std::move(v));
      }
      break;
    case Sweep::TransferMode:
      for (auto m : {TransferMode::Independent, TransferMode::Inherit, TransferMode::Pkt}) {
        Variant v{std::string(to_string(m)), effective};
        v.cfg.train.transfer = m;
        variants.push_back(std::move(v));
      }
      break;
    case Sweep::MixupOnOff:
      for (bool mix : {false, true}) {
        Variant v{mix ? "pseudo" : "vanilla", effective};
        v.cfg.train.selection.mixup = mix;
        variants.push_back(std::move(v));
      }
      break;
  }

  const std::size_t n_seeds = cfg.seeds.size();
  std::vector<std::vector<AblationRow>> slots(variants.size() * n_seeds);
  for_each_seed(slots.size(), [&](std::size_t job) {
    const Variant& v = variants[job / n_seeds];
    const std::uint64_t seed = cfg.seeds[job % n_seeds];
    const RunData data = prepare_data(v.cfg, seed);
    const Evaluator evaluator(data.eval, data.train.oracle_view());
    const TrainResult result =
        train_pspu(v.cfg.run_config(seed), data.train.train_view(), &evaluator);
    for (Classifier c : {Classifier::PU, Classifier::PS}) {
      slots[job].push_back(AblationRow{std::string(to_string(sweep)), v.value, seed,
                                       final_record(result.history, c)});
    }
  });

  std::vector<AblationRow> rows;
  for (auto& s : slots) {
    for (auto& r : s) rows.push_back(std::move(r));
  }
  std::string csv = "sweep,value,seed,classifier,acc,f1,auc,risk_gap\n";
  for (const auto& r : rows) {
    const auto& m = r.final_metrics;
    csv += r.sweep + "," + r.value + "," + std::to_string(r.seed) + "," +
           std::string(to_string(m.classifier)) + "," + fmt(m.metrics.acc) + "," +
           fmt(m.metrics.f1) + "," + fmt(m.metrics.auc) + "," +
           (m.risk ? fmt(m.risk->gap) : std::string()) + "\n";
  }
  write_text(out_dir / "ablation.csv", csv);

  std::string summary = "sweep,value,classifier,n,acc_mean,acc_std,f1_mean,f1_std,auc_mean,auc_std\n";
  for (const auto& v : variants) {
    for (Classifier c : {Classifier::PU, Classifier::PS}) {
      std::vector<double> acc, f1, auc;
      for (const auto& r : rows) {
        if (r.value != v.value || r.final_metrics.classifier != c) continue;
        acc.push_back(r.final_metrics.metrics.acc);
        f1.push_back(r.final_metrics.metrics.f1);
        if (r.final_metrics.metrics.auc) auc.push_back(*r.final_metrics.metrics.auc);
      }
      const auto [am, as] = mean_std(acc);
      const auto [fm, fs_] = mean_std(f1);
      const auto [um, us] = mean_std(auc);
      summary += std::string(to_string(sweep)) + "," + v.value + "," +
                 std::string(to_string(c)) + "," + std::to_string(acc.size()) + "," + fmt(am) +
                 "," + fmt(as) + "," + fmt(fm) + "," + fmt(fs_) + "," + fmt(um) + "," + fmt(us) +
                 "\n";
      log << to_string(sweep) << "=" << v.value << " " << to_string(c) << ": F1 " << fm
          << " +/- " << fs_ << ", ACC " << am << ", AUC " << um << "\n";
    }
  }
  write_text(out_dir / "ablation_summary.csv", summary);
  return rows;
}

int run(int argc, char** argv) {
  CLI::App app{"pu-forge: positive-unlabeled learning experiments"};
  app.require_subcommand(1);
  std::string config_path, method_name, sweep_name, out;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "experiment config file")->required();
    sub->add_option("--out", out, "output directory (overrides out_dir)");
  };
  auto* gen = app.add_subcommand("gen-data", "generate a synthetic PU dataset");
  add_common(gen);
  auto* tr = app.add_subcommand("train", "train upu, nnpu or pspu over the configured seeds");
  add_common(tr);
  tr->add_option("--method", method_name, "upu | nnpu | pspu (default: config method)");
  auto* gap = app.add_subcommand("diagnose-gap", "track the labeled vs oracle risk gap");
  add_common(gap);
  gap->add_option("--method", method_name, "upu | nnpu | pspu (default: nnpu)");
  auto* abl = app.add_subcommand("ablate", "run an ablation sweep of PSPU");
  add_common(abl);
  abl->add_option("--sweep", sweep_name, "ns_ratio | transfer_mode | mixup_onoff")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    ExperimentConfig cfg = load_config(config_path);
    const fs::path out_dir = out.empty() ? fs::path(cfg.out_dir) : fs::path(out);
    if (gen->parsed()) {
      cmd_gen_data(cfg, out_dir, std::cout);
    } else if (tr->parsed()) {
      const Method m = method_name.empty() ? cfg.method : parse_method(method_name);
      cmd_train(cfg, m, out_dir, std::cout);
    } else if (gap->parsed()) {
      const Method m = method_name.empty() ? Method::Nnpu : parse_method(method_name);
      cmd_diagnose_gap(cfg, m, out_dir, std::cout);
    } else if (abl->parsed()) {
      cmd_ablate(cfg, parse_sweep(sweep_name), out_dir, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return 1;
  } catch (const NumericError& e) {
    std::cerr << "numeric abort: " << e.what() << "\n";
    return 2;
  } catch (const ConsistencyError& e) {
    std::cerr << "internal consistency failure: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

}  // namespace puforge::cli
