#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tsod/constraint_sets.hpp"
#include "tsod/episode.hpp"
#include "tsod/offline.hpp"

namespace tsod {

/// How the hidden online system is chosen for each run.
enum class ThetaMode {
  fixed,         // theta_* = (a_star, b_star)
  sample_delta,  // theta_* = theta_sim + delta with ||delta||_F <= m_delta, drawn per run
};

struct ExtraSource {
  Theta theta_sim;
  std::int64_t s_len = 0;
  double m_delta = 0.0;
};

struct ExperimentConfig {
  Theta theta_star;
  Theta theta_sim;
  ThetaMode theta_mode = ThetaMode::fixed;
  Costs costs;

  std::vector<std::int64_t> s_values{3000};
  std::int64_t horizon = 1500;
  std::vector<std::int64_t> t_values;  // scaling study only
  double delta = 0.1;
  std::optional<double> delta1;
  std::optional<double> delta2;
  double m_delta = 0.15;

  int num_runs = 10;
  std::uint64_t seed = 1;
  std::vector<Variant> variants{Variant::tsod, Variant::ts_no_offline, Variant::offline_estimate_only};

  ConstraintSetQ<double> set_q;
  int max_attempts = 100;
  double beta_mdelta_scale = 1.0;
  double state_ceiling = 1e6;
  OfflineConfig offline;
  bool share_offline = false;
  std::optional<std::string> offline_summary_file;
  std::vector<ExtraSource> extra_sources;

  int workers = 1;
  std::string output_dir = "tsod_out";
  int diagnostics_runs = 200;

  Eigen::Index n() const { return theta_sim.n(); }
  Eigen::Index m() const { return theta_sim.m(); }

  /// delta1 override, else delta / (16 max(S, T + 1)).
  double delta1_for(std::int64_t s_len, std::int64_t horizon) const;
  /// delta2 override, else delta / (16 T).
  double delta2_for(std::int64_t horizon) const;
};

struct ParsedConfig {
  ExperimentConfig config;
  nlohmann::json document;  // effective configuration after overrides
  std::vector<std::string> warnings;
};

/// One line per accepted key: name, math symbol where there is one, meaning.
std::string config_key_help();

/// Parses a JSON config (comments allowed) and applies KEY=VALUE overrides to scalar keys.
ParsedConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides = {});
/// Throws UsageError naming the path if the file cannot be read.
ParsedConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Checks the cross-field constraints (PD costs, dimensions, theta_* in Q, ...).
/// Returns warnings; throws ConfigError naming the offending key.
std::vector<std::string> validate_config(const ExperimentConfig& cfg);

/// Stable 64-bit hash of the effective configuration document.
std::uint64_t config_fingerprint(const nlohmann::json& document);

}  // namespace tsod
