#include "tsod/config.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <sstream>

#include "tsod/io.hpp"

namespace tsod {

namespace {

enum class KeyKind { scalar, matrix, list, object };

struct KeySpec {
  const char* path;
  KeyKind kind;
  const char* symbol;  // empty when there is none
  const char* help;
};

// Every accepted key. Nested keys use dotted paths.
constexpr KeySpec kKeys[] = {
    {"a_star", KeyKind::matrix, "A_*", "online system matrix A (n x n)"},
    {"b_star", KeyKind::matrix, "B_*", "online input matrix B (n x m)"},
    {"a_sim", KeyKind::matrix, "A_*^sim", "offline (simulator) system matrix"},
    {"b_sim", KeyKind::matrix, "B_*^sim", "offline (simulator) input matrix"},
    {"theta_mode", KeyKind::scalar, "", "\"fixed\" uses a_star/b_star; \"sample_delta\" draws theta_* = theta_sim + delta per run"},
    {"q_matrix", KeyKind::matrix, "Q", "state cost weight (default identity)"},
    {"r_matrix", KeyKind::matrix, "R", "input cost weight (default identity)"},
    {"s_values", KeyKind::list, "S", "offline trajectory lengths; more than one runs an S sweep"},
    {"horizon", KeyKind::scalar, "T", "online horizon"},
    {"t_values", KeyKind::list, "T", "horizons for the sweep subcommand"},
    {"delta", KeyKind::scalar, "delta", "overall failure probability"},
    {"delta1", KeyKind::scalar, "delta_1", "offline confidence level (default delta / (16 max(S, T+1)))"},
    {"delta2", KeyKind::scalar, "delta_2", "online confidence level (default delta / (16 T))"},
    {"m_delta", KeyKind::scalar, "M_delta", "bound on ||theta_* - theta_*^sim||_F"},
    {"num_runs", KeyKind::scalar, "", "Monte-Carlo runs per variant and S"},
    {"seed", KeyKind::scalar, "", "base seed"},
    {"variants", KeyKind::list, "", "subset of tsod, ts_no_offline, offline_estimate_only, oracle"},
    {"set_q", KeyKind::object, "Q", "online admissible set"},
    {"set_q.m_p", KeyKind::scalar, "M_P", "trace bound on P(theta)"},
    {"set_q.rho", KeyKind::scalar, "rho", "closed-loop spectral norm bound"},
    {"max_attempts", KeyKind::scalar, "", "rejection-sampling attempts per step"},
    {"beta_mdelta_scale", KeyKind::scalar, "", "multiplier on the sqrt(lambda_max(U_S)) M_delta width term"},
    {"state_ceiling", KeyKind::scalar, "", "online ||x_t|| abort threshold"},
    {"offline", KeyKind::object, "", "offline data-generation settings"},
    {"offline.dither_std", KeyKind::scalar, "nu_s", "std of the exploration input"},
    {"offline.regularizer", KeyKind::scalar, "lambda_0", "ridge term, U_0 = lambda_0 I"},
    {"offline.controller_mode", KeyKind::scalar, "", "\"ce_dither\" or \"fixed_gain\""},
    {"offline.fixed_gain", KeyKind::matrix, "K", "gain used in fixed_gain mode (m x n)"},
    {"offline.gain_refresh", KeyKind::scalar, "", "steps between certainty-equivalence gain updates"},
    {"offline.state_ceiling", KeyKind::scalar, "", "offline ||xi_s|| abort threshold"},
    {"offline.set_p", KeyKind::object, "P", "admissible set for the offline learner"},
    {"offline.set_p.m_sim", KeyKind::scalar, "M_sim", "trace bound"},
    {"offline.set_p.phi", KeyKind::scalar, "phi", "Frobenius bound on theta^sim"},
    {"offline.set_p.rho_sim", KeyKind::scalar, "rho^sim", "closed-loop spectral norm bound"},
    {"share_offline", KeyKind::scalar, "", "reuse one offline dataset for every run"},
    {"offline_summary_file", KeyKind::scalar, "", "load a cached offline summary instead of simulating"},
    {"extra_sources", KeyKind::list, "", "additional offline systems: [{a_sim, b_sim, s, m_delta}]"},
    {"workers", KeyKind::scalar, "", "concurrent runs"},
    {"output_dir", KeyKind::scalar, "", "directory for all outputs"},
    {"diagnostics_runs", KeyKind::scalar, "", "runs used by the diagnostics subcommand"},
};

const KeySpec* find_key(const std::string& path) {
  for (const auto& k : kKeys)
    if (path == k.path) return &k;
  return nullptr;
}

void check_keys(const nlohmann::json& node, const std::string& prefix) {
  for (auto it = node.begin(); it != node.end(); ++it) {
    const std::string path = prefix.empty() ? it.key() : prefix + "." + it.key();
    const KeySpec* spec = find_key(path);
    if (!spec) throw ConfigError(path, "unknown configuration key");
    if (spec->kind == KeyKind::object) {
      if (!it->is_object()) throw ConfigError(path, "expected an object");
      check_keys(*it, path);
    }
  }
}

nlohmann::json* resolve(nlohmann::json& doc, const std::string& path, bool create) {
  nlohmann::json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object()) return nullptr;
    if (!node->contains(part)) {
      if (!create) return nullptr;
      (*node)[part] = dot == std::string::npos ? nlohmann::json() : nlohmann::json::object();
    }
    node = &(*node)[part];
    if (dot == std::string::npos) return node;
    start = dot + 1;
  }
}

void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw UsageError("override must have the form KEY=VALUE: " + assignment);
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  const KeySpec* spec = find_key(key);
  if (!spec) throw UsageError("unknown override key: " + key);
  if (spec->kind != KeyKind::scalar) throw UsageError("only scalar keys can be overridden: " + key);
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded() || value.is_structured()) value = raw;
  *resolve(doc, key, true) = std::move(value);
}

template <typename T>
T get_or(const nlohmann::json& node, const char* key, const std::string& path, T fallback) {
  if (!node.contains(key)) return fallback;
  try {
    return node.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(path, "has the wrong type");
  }
}

double positive(double v, const std::string& key) {
  if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(key, "must be a positive finite number");
  return v;
}

double open_unit(double v, const std::string& key) {
  if (!(v > 0.0 && v < 1.0)) throw ConfigError(key, "must lie in (0,1)");
  return v;
}

std::vector<std::int64_t> int_list(const nlohmann::json& node, const std::string& key) {
  if (!node.is_array() || node.empty()) throw ConfigError(key, "expected a non-empty list of integers");
  std::vector<std::int64_t> out;
  for (const auto& v : node) {
    if (!v.is_number_integer()) throw ConfigError(key, "entries must be integers");
    out.push_back(v.get<std::int64_t>());
  }
  return out;
}

Theta theta_from(const nlohmann::json& doc, const char* a_key, const char* b_key) {
  if (!doc.contains(a_key)) throw ConfigError(a_key, "is required");
  if (!doc.contains(b_key)) throw ConfigError(b_key, "is required");
  Eigen::MatrixXd a = matrix_from_json(doc.at(a_key), a_key);
  Eigen::MatrixXd b = matrix_from_json(doc.at(b_key), b_key);
  if (a.rows() != a.cols()) throw ConfigError(a_key, "must be square");
  if (b.rows() != a.rows()) throw ConfigError(b_key, "must have as many rows as " + std::string(a_key));
  try {
    return Theta(std::move(a), std::move(b));
  } catch (const Error& e) {
    throw ConfigError(a_key, e.what());
  }
}

ExperimentConfig build(const nlohmann::json& doc) {
  ExperimentConfig cfg;
  cfg.theta_sim = theta_from(doc, "a_sim", "b_sim");
  const auto n = cfg.theta_sim.n();
  const auto m = cfg.theta_sim.m();

  const std::string mode = get_or<std::string>(doc, "theta_mode", "theta_mode", "fixed");
  if (mode == "fixed") {
    cfg.theta_mode = ThetaMode::fixed;
    cfg.theta_star = theta_from(doc, "a_star", "b_star");
    if (cfg.theta_star.n() != n || cfg.theta_star.m() != m)
      throw ConfigError("a_star", "dimensions differ from a_sim/b_sim");
  } else if (mode == "sample_delta") {
    cfg.theta_mode = ThetaMode::sample_delta;
    cfg.theta_star = cfg.theta_sim;
  } else {
    throw ConfigError("theta_mode", "must be \"fixed\" or \"sample_delta\"");
  }

  Eigen::MatrixXd q = doc.contains("q_matrix") ? matrix_from_json(doc["q_matrix"], "q_matrix")
                                               : Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd r = doc.contains("r_matrix") ? matrix_from_json(doc["r_matrix"], "r_matrix")
                                               : Eigen::MatrixXd::Identity(m, m);
  if (q.rows() != n || q.cols() != n) throw ConfigError("q_matrix", "must be n x n");
  if (r.rows() != m || r.cols() != m) throw ConfigError("r_matrix", "must be m x m");
  try {
    Costs::require_spd(q, "q_matrix");
  } catch (const DomainError& e) {
    throw ConfigError("q_matrix", e.what());
  }
  try {
    Costs::require_spd(r, "r_matrix");
  } catch (const DomainError& e) {
    throw ConfigError("r_matrix", e.what());
  }
  cfg.costs = Costs(std::move(q), std::move(r));

  if (doc.contains("s_values")) cfg.s_values = int_list(doc["s_values"], "s_values");
  for (auto s : cfg.s_values)
    if (s < 1) throw ConfigError("s_values", "every S must be >= 1");
  cfg.horizon = get_or<std::int64_t>(doc, "horizon", "horizon", cfg.horizon);
  if (cfg.horizon < 1) throw ConfigError("horizon", "must be >= 1");
  if (doc.contains("t_values")) cfg.t_values = int_list(doc["t_values"], "t_values");
  for (auto t : cfg.t_values)
    if (t < 1) throw ConfigError("t_values", "every T must be >= 1");

  cfg.delta = open_unit(get_or<double>(doc, "delta", "delta", cfg.delta), "delta");
  if (doc.contains("delta1")) cfg.delta1 = open_unit(get_or<double>(doc, "delta1", "delta1", 0.0), "delta1");
  if (doc.contains("delta2")) cfg.delta2 = open_unit(get_or<double>(doc, "delta2", "delta2", 0.0), "delta2");
  cfg.m_delta = get_or<double>(doc, "m_delta", "m_delta", cfg.m_delta);
  if (!(cfg.m_delta >= 0.0)) throw ConfigError("m_delta", "must be >= 0");

  cfg.num_runs = get_or<int>(doc, "num_runs", "num_runs", cfg.num_runs);
  if (cfg.num_runs < 1) throw ConfigError("num_runs", "must be >= 1");
  cfg.seed = get_or<std::uint64_t>(doc, "seed", "seed", cfg.seed);
  if (doc.contains("variants")) {
    const auto& list = doc["variants"];
    if (!list.is_array() || list.empty()) throw ConfigError("variants", "expected a non-empty list");
    cfg.variants.clear();
    for (const auto& v : list) {
      try {
        cfg.variants.push_back(parse_variant(v.get<std::string>()));
      } catch (const std::exception& e) {
        throw ConfigError("variants", e.what());
      }
    }
  }

  if (doc.contains("set_q")) {
    const auto& sq = doc["set_q"];
    cfg.set_q.m_p = positive(get_or<double>(sq, "m_p", "set_q.m_p", cfg.set_q.m_p), "set_q.m_p");
    cfg.set_q.rho = open_unit(get_or<double>(sq, "rho", "set_q.rho", cfg.set_q.rho), "set_q.rho");
  }
  cfg.max_attempts = get_or<int>(doc, "max_attempts", "max_attempts", cfg.max_attempts);
  if (cfg.max_attempts < 1) throw ConfigError("max_attempts", "must be >= 1");
  cfg.beta_mdelta_scale = get_or<double>(doc, "beta_mdelta_scale", "beta_mdelta_scale", cfg.beta_mdelta_scale);
  if (!(cfg.beta_mdelta_scale >= 0.0)) throw ConfigError("beta_mdelta_scale", "must be >= 0");
  cfg.state_ceiling = positive(get_or<double>(doc, "state_ceiling", "state_ceiling", cfg.state_ceiling), "state_ceiling");

  if (doc.contains("offline")) {
    const auto& off = doc["offline"];
    auto& oc = cfg.offline;
    oc.dither_std = positive(get_or<double>(off, "dither_std", "offline.dither_std", oc.dither_std), "offline.dither_std");
    oc.regularizer = positive(get_or<double>(off, "regularizer", "offline.regularizer", oc.regularizer), "offline.regularizer");
    const std::string ctl = get_or<std::string>(off, "controller_mode", "offline.controller_mode", "ce_dither");
    if (ctl == "ce_dither") {
      oc.controller_mode = ControllerMode::ce_dither;
    } else if (ctl == "fixed_gain") {
      oc.controller_mode = ControllerMode::fixed_gain;
    } else {
      throw ConfigError("offline.controller_mode", "must be \"ce_dither\" or \"fixed_gain\"");
    }
    if (off.contains("fixed_gain")) oc.fixed_gain = matrix_from_json(off["fixed_gain"], "offline.fixed_gain");
    oc.gain_refresh = get_or<int>(off, "gain_refresh", "offline.gain_refresh", oc.gain_refresh);
    oc.state_ceiling = get_or<double>(off, "state_ceiling", "offline.state_ceiling", oc.state_ceiling);
    if (off.contains("set_p")) {
      const auto& sp = off["set_p"];
      oc.set_p.m_sim = positive(get_or<double>(sp, "m_sim", "offline.set_p.m_sim", oc.set_p.m_sim), "offline.set_p.m_sim");
      oc.set_p.phi = positive(get_or<double>(sp, "phi", "offline.set_p.phi", oc.set_p.phi), "offline.set_p.phi");
      oc.set_p.rho_sim = open_unit(get_or<double>(sp, "rho_sim", "offline.set_p.rho_sim", oc.set_p.rho_sim), "offline.set_p.rho_sim");
    }
  }
  cfg.offline.validate(n, m);

  cfg.share_offline = get_or<bool>(doc, "share_offline", "share_offline", cfg.share_offline);
  if (doc.contains("offline_summary_file"))
    cfg.offline_summary_file = get_or<std::string>(doc, "offline_summary_file", "offline_summary_file", "");
  if (doc.contains("extra_sources")) {
    const auto& list = doc["extra_sources"];
    if (!list.is_array()) throw ConfigError("extra_sources", "expected a list");
    for (const auto& item : list) {
      ExtraSource src;
      src.theta_sim = theta_from(item, "a_sim", "b_sim");
      if (src.theta_sim.n() != n || src.theta_sim.m() != m)
        throw ConfigError("extra_sources", "dimensions differ from a_sim/b_sim");
      src.s_len = get_or<std::int64_t>(item, "s", "extra_sources.s", 0);
      if (src.s_len < 1) throw ConfigError("extra_sources", "each source needs s >= 1");
      src.m_delta = get_or<double>(item, "m_delta", "extra_sources.m_delta", 0.0);
      if (!(src.m_delta >= 0.0)) throw ConfigError("extra_sources", "m_delta must be >= 0");
      cfg.extra_sources.push_back(std::move(src));
    }
  }

  cfg.workers = get_or<int>(doc, "workers", "workers", cfg.workers);
  if (cfg.workers < 1) throw ConfigError("workers", "must be >= 1");
  cfg.output_dir = get_or<std::string>(doc, "output_dir", "output_dir", cfg.output_dir);
  cfg.diagnostics_runs = get_or<int>(doc, "diagnostics_runs", "diagnostics_runs", cfg.diagnostics_runs);
  if (cfg.diagnostics_runs < 1) throw ConfigError("diagnostics_runs", "must be >= 1");
  return cfg;
}

}  // namespace

double ExperimentConfig::delta1_for(std::int64_t s_len, std::int64_t t) const {
  if (delta1) return *delta1;
  return delta / (16.0 * static_cast<double>(std::max(s_len, t + 1)));
}

double ExperimentConfig::delta2_for(std::int64_t t) const {
  if (delta2) return *delta2;
  return delta / (16.0 * static_cast<double>(std::max<std::int64_t>(t, 1)));
}

std::string config_key_help() {
  std::ostringstream out;
  for (const auto& k : kKeys) {
    out << "  " << k.path;
    if (*k.symbol) out << " [" << k.symbol << "]";
    out << ": " << k.help << "\n";
  }
  return out.str();
}

std::vector<std::string> validate_config(const ExperimentConfig& cfg) {
  std::vector<std::string> warnings;
  if (cfg.theta_mode == ThetaMode::fixed) {
    if (!in_set_q(cfg.theta_star, cfg.costs, cfg.set_q))
      throw ConfigError("a_star", "theta_* is not in the admissible set Q (raise set_q.m_p or set_q.rho)");
    const double gap = (cfg.theta_star - cfg.theta_sim).frobenius_norm();
    if (gap > cfg.m_delta)
      warnings.push_back("||theta_* - theta_sim||_F = " + format_double(gap) + " exceeds m_delta");
  }
  if (!cfg.offline_summary_file && cfg.offline.controller_mode == ControllerMode::ce_dither &&
      !in_set_p(cfg.theta_sim, cfg.costs, cfg.offline.set_p))
    throw ConfigError("a_sim", "theta_sim is not in the offline admissible set P");
  for (auto s : cfg.s_values) {
    if (s <= cfg.horizon)
      warnings.push_back("S = " + std::to_string(s) + " <= T = " + std::to_string(cfg.horizon) +
                         "; the regret guarantee assumes S > T");
  }
  return warnings;
}

ParsedConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides) {
  nlohmann::json doc = nlohmann::json::parse(text, nullptr, false, /*ignore_comments=*/true);
  if (doc.is_discarded()) throw ConfigError("", "config is not valid JSON");
  if (!doc.is_object()) throw ConfigError("", "config must be a JSON object");
  check_keys(doc, "");
  for (const auto& ov : overrides) apply_override(doc, ov);
  check_keys(doc, "");

  ParsedConfig parsed;
  parsed.config = build(doc);
  parsed.warnings = validate_config(parsed.config);
  parsed.document = std::move(doc);
  return parsed;
}

ParsedConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  if (!std::filesystem::is_regular_file(path)) throw UsageError("config file not found: " + path);
  return parse_config_text(read_text_file(path), overrides);
}

std::uint64_t config_fingerprint(const nlohmann::json& document) {
  // FNV-1a over the canonical dump (object keys are sorted).
  const std::string canon = document.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace tsod
