#include "puforge/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "puforge/error.hpp"

namespace puforge::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t");
  return s.substr(first, last - first + 1);
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double to_double(std::string_view key, std::string_view v) {
  double out = 0.0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError(std::string(key) + ": expected a number, got '" + std::string(v) + "'");
  }
  return out;
}

std::uint64_t to_uint(std::string_view key, std::string_view v) {
  std::uint64_t out = 0;
  const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (res.ec != std::errc{} || res.ptr != v.data() + v.size()) {
    throw ConfigError(std::string(key) + ": expected a non-negative integer, got '" +
                      std::string(v) + "'");
  }
  return out;
}

bool to_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "on") return true;
  if (v == "false" || v == "0" || v == "off") return false;
  throw ConfigError(std::string(key) + ": expected true/false, got '" + std::string(v) + "'");
}

template <typename T, typename F>
std::vector<T> to_list(std::string_view v, F convert) {
  std::vector<T> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto item = trim(v.substr(start, comma == std::string_view::npos ? v.npos : comma - start));
    if (!item.empty()) out.push_back(convert(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
std::string join(const std::vector<T>& xs) {
  std::string out;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(xs[i]);
  }
  return out;
}

std::optional<std::size_t> to_auto_count(std::string_view key, std::string_view v) {
  if (v == "auto") return std::nullopt;
  return static_cast<std::size_t>(to_uint(key, v));
}

template <typename T>
std::string auto_or(const std::optional<T>& v) {
  return v ? std::to_string(*v) : std::string("auto");
}

struct Key {
  std::string name;
  std::function<void(ExperimentConfig&, std::string_view)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

#define PF_DOUBLE(KEY, FIELD)                                                              \
  Key {                                                                                    \
    KEY, [](ExperimentConfig& c, std::string_view v) { c.FIELD = to_double(KEY, v); },     \
        [](const ExperimentConfig& c) { return fmt(c.FIELD); }                             \
  }
#define PF_SIZE(KEY, FIELD)                                                                \
  Key {                                                                                    \
    KEY,                                                                                   \
        [](ExperimentConfig& c, std::string_view v) {                                      \
          c.FIELD = static_cast<std::size_t>(to_uint(KEY, v));                             \
        },                                                                                 \
        [](const ExperimentConfig& c) { return std::to_string(c.FIELD); }                  \
  }
#define PF_BOOL(KEY, FIELD)                                                                \
  Key {                                                                                    \
    KEY, [](ExperimentConfig& c, std::string_view v) { c.FIELD = to_bool(KEY, v); },       \
        [](const ExperimentConfig& c) { return std::string(c.FIELD ? "true" : "false"); }  \
  }
#define PF_STRING(KEY, FIELD)                                                              \
  Key {                                                                                    \
    KEY, [](ExperimentConfig& c, std::string_view v) { c.FIELD = std::string(v); },        \
        [](const ExperimentConfig& c) { return c.FIELD; }                                  \
  }

const std::vector<Key>& registry() {
  static const std::vector<Key> keys = {
      {"seeds",
       [](ExperimentConfig& c, std::string_view v) {
         c.seeds = to_list<std::uint64_t>(v, [](std::string_view s) { return to_uint("seeds", s); });
         if (c.seeds.empty()) throw ConfigError("seeds: at least one seed is required");
       },
       [](const ExperimentConfig& c) { return join(c.seeds); }},
      {"method",
       [](ExperimentConfig& c, std::string_view v) {
         try {
           c.method = parse_method(v);
         } catch (const InvalidArgument& e) {
           throw ConfigError(std::string("method: ") + e.what());
         }
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.method)); }},
      PF_STRING("out_dir", out_dir),
      PF_BOOL("plot", plot),

      {"data.source",
       [](ExperimentConfig& c, std::string_view v) {
         if (v == "synthetic") {
           c.source = DataSource::Synthetic;
         } else if (v == "csv") {
           c.source = DataSource::Csv;
         } else {
           throw ConfigError("data.source: expected synthetic or csv");
         }
       },
       [](const ExperimentConfig& c) {
         return std::string(c.source == DataSource::Synthetic ? "synthetic" : "csv");
       }},
      PF_STRING("data.path", data_path),
      PF_STRING("data.test_path", test_path),
      PF_SIZE("data.dim", gaussian.dim),
      PF_SIZE("data.n_total", gaussian.n_total),
      PF_SIZE("data.n_labeled", gaussian.n_labeled),
      PF_DOUBLE("data.prior", gaussian.prior),
      PF_DOUBLE("data.separation", gaussian.separation),
      {"data.regime",
       [](ExperimentConfig& c, std::string_view v) {
         try {
           c.gaussian.regime = parse_regime(v);
         } catch (const InvalidArgument& e) {
           throw ConfigError(std::string("data.regime: ") + e.what());
         }
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.gaussian.regime)); }},
      PF_DOUBLE("data.removal", gaussian.removal),
      PF_SIZE("data.n_test", n_test),
      {"data.seed",
       [](ExperimentConfig& c, std::string_view v) {
         if (v == "auto") {
           c.data_seed.reset();
         } else {
           c.data_seed = to_uint("data.seed", v);
         }
       },
       [](const ExperimentConfig& c) { return auto_or(c.data_seed); }},

      {"model.hidden",
       [](ExperimentConfig& c, std::string_view v) {
         c.train.hidden = to_list<std::size_t>(
             v, [](std::string_view s) { return static_cast<std::size_t>(to_uint("model.hidden", s)); });
       },
       [](const ExperimentConfig& c) { return join(c.train.hidden); }},

      {"risk.prior",
       [](ExperimentConfig& c, std::string_view v) {
         if (v == "auto") {
           c.risk_prior.reset();
         } else {
           c.risk_prior = to_double("risk.prior", v);
         }
       },
       [](const ExperimentConfig& c) { return c.risk_prior ? fmt(*c.risk_prior) : "auto"; }},
      {"risk.loss",
       [](ExperimentConfig&, std::string_view v) {
         if (v != "sigmoid") throw ConfigError("risk.loss: only 'sigmoid' is supported");
       },
       [](const ExperimentConfig&) { return std::string("sigmoid"); }},
      PF_DOUBLE("risk.beta", train.risk.beta),
      PF_DOUBLE("risk.gamma", train.risk.gamma),

      PF_SIZE("train.epochs", train.epochs),
      PF_DOUBLE("train.lambda", train.lambda),
      PF_SIZE("train.batch_size", train.batch_size),
      {"train.steps_pu",
       [](ExperimentConfig& c, std::string_view v) { c.train.steps_pu = to_auto_count("train.steps_pu", v); },
       [](const ExperimentConfig& c) { return auto_or(c.train.steps_pu); }},
      {"train.steps_ps",
       [](ExperimentConfig& c, std::string_view v) { c.train.steps_ps = to_auto_count("train.steps_ps", v); },
       [](const ExperimentConfig& c) { return auto_or(c.train.steps_ps); }},
      PF_DOUBLE("train.lr_pu", train.lr_pu),
      PF_DOUBLE("train.lr_ps", train.lr_ps),
      PF_DOUBLE("train.momentum", train.momentum),
      {"train.transfer",
       [](ExperimentConfig& c, std::string_view v) {
         try {
           c.train.transfer = parse_transfer_mode(v);
         } catch (const InvalidArgument& e) {
           throw ConfigError(std::string("train.transfer: ") + e.what());
         }
       },
       [](const ExperimentConfig& c) { return std::string(to_string(c.train.transfer)); }},
      PF_BOOL("train.reinit_ps", train.reinit_ps),

      PF_DOUBLE("select.ratio", train.selection.ratio),
      PF_DOUBLE("select.alpha", train.selection.alpha),
      {"select.n_mix",
       [](ExperimentConfig& c, std::string_view v) { c.train.selection.n_mix = to_auto_count("select.n_mix", v); },
       [](const ExperimentConfig& c) { return auto_or(c.train.selection.n_mix); }},
      PF_BOOL("select.mixup", train.selection.mixup),

      PF_DOUBLE("ssl.w_u", train.ssl.w_u),
      PF_DOUBLE("ssl.w_c", train.ssl.w_c),
      PF_DOUBLE("ssl.temperature", train.ssl.temperature),
      PF_DOUBLE("ssl.aug_strength", train.ssl.aug_strength),
      PF_DOUBLE("ssl.dropout", train.ssl.dropout),
      PF_STRING("ssl.objective", train.ssl.objective),
  };
  return keys;
}

#undef PF_DOUBLE
#undef PF_SIZE
#undef PF_BOOL
#undef PF_STRING

const Key* find_key(std::string_view name) {
  for (const Key& k : registry()) {
    if (k.name == name) return &k;
  }
  return nullptr;
}

}  // namespace

PspuConfig ExperimentConfig::run_config(std::uint64_t seed) const {
  PspuConfig out = train;
  out.seed = seed;
  out.risk.prior = risk_prior.value_or(gaussian.prior);
  return out;
}

void ExperimentConfig::validate() const {
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  if (source == DataSource::Csv && data_path.empty()) {
    throw ConfigError("data.path is required when data.source = csv");
  }
  try {
    run_config(seeds.front()).validate();
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
}

void apply_setting(ExperimentConfig& cfg, std::string_view key, std::string_view value) {
  const Key* k = find_key(key);
  if (k == nullptr) throw ConfigError("unknown config key '" + std::string(key) + "'");
  k->set(cfg, value);
}

ExperimentConfig parse_config(std::string_view text) {
  ExperimentConfig cfg;
  std::set<std::string, std::less<>> seen;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == text.npos ? text.npos : nl - start);
    start = nl == text.npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != line.npos) line = line.substr(0, hash);
    line = trim(line);
    if (!line.empty() && line.back() == '\r') line = trim(line.substr(0, line.size() - 1));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "config line " + std::to_string(line_no) + ": ";
    if (eq == line.npos) throw ConfigError(where + "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (!seen.insert(std::string(key)).second) {
      throw ConfigError(where + "key '" + std::string(key) + "' set twice");
    }
    try {
      apply_setting(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string dump_config(const ExperimentConfig& cfg) {
  std::string out;
  for (const Key& k : registry()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

std::vector<std::string> config_keys() {
  std::vector<std::string> out;
  for (const Key& k : registry()) out.push_back(k.name);
  return out;
}

}  // namespace puforge::cli
