#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tsod/config.hpp"
#include "tsod/episode.hpp"
#include "tsod/offline.hpp"

namespace tsod {

struct RunRecord {
  std::string label;  // variant name, suffixed with _S<s> in S sweeps
  Variant variant = Variant::tsod;
  std::int64_t s_value = 0;
  std::int64_t run_id = 0;
  std::uint64_t seed = 0;
  Theta theta_star;
  RegretTrace trace;
  EpisodeDiagnostics diagnostics;
  Assumption2Report assumption2;  // primary offline source
  bool gram_floor_ok = false;     // lambda_min(sum of offline Gram matrices) >= S_total / 40
  std::int64_t s_total = 0;
  std::optional<AppendixBoundCheck> appendix;  // tsod runs with gram_floor_ok only
};

struct AggregateResult {
  std::string label;
  Variant variant = Variant::tsod;
  std::int64_t s_value = 0;
  int n_runs = 0;
  std::vector<double> mean_cum_regret;  // index t-1
  std::vector<double> std_cum_regret;
  double mean_final = 0.0;
  double std_final = 0.0;
  std::uint64_t fingerprint = 0;
};

struct ExperimentOutcome {
  std::vector<AggregateResult> aggregates;
  std::vector<RunRecord> runs;
  std::uint64_t fingerprint = 0;

  /// Throws std::out_of_range when no aggregate has this label.
  const AggregateResult& find(const std::string& label) const;
};

struct HarnessOptions {
  bool write_files = true;
  std::vector<std::int64_t> checkpoints;
  bool quiet = true;
};

/// run seed = hash64(base_seed, variant_id, run_id, s_value).
std::uint64_t derive_run_seed(std::uint64_t base_seed, Variant variant, std::int64_t run_id,
                              std::int64_t s_value);

/// Aggregate label of a variant; S sweeps append _S<s>.
std::string run_label(Variant variant, std::int64_t s_value, bool sweep);

/// One Monte-Carlo run: offline data, hidden system, online episode.
RunRecord execute_run(const ExperimentConfig& cfg, Variant variant, std::int64_t s_value,
                      std::int64_t run_id, std::int64_t horizon,
                      const std::vector<std::int64_t>& checkpoints = {});

/// Every (S, variant, run) of the config; writes per-run CSVs, aggregate.csv,
/// regret.svg and summary.txt under cfg.output_dir when requested.
ExperimentOutcome run_experiment(const ExperimentConfig& cfg, std::uint64_t fingerprint,
                                 const HarnessOptions& options = {});

/// Per-step mean and sample std of cum_regret across traces of equal length.
AggregateResult aggregate_traces(const std::string& label, Variant variant, std::int64_t s_value,
                                 const std::vector<const RegretTrace*>& traces);

void write_trace_csv(const std::string& path, const RegretTrace& trace);
void write_aggregate_csv(const std::string& path, const std::vector<AggregateResult>& aggregates);
/// 960x540 plot: mean line and +-1 std band per aggregate.
void write_regret_svg(const std::string& path, const std::vector<AggregateResult>& aggregates,
                      const std::string& title);

struct DiagnosticsReport {
  std::int64_t runs = 0;
  std::int64_t s_value = 0;
  std::int64_t horizon = 0;
  double delta1 = 0.0;
  double delta2 = 0.0;
  std::vector<std::int64_t> checkpoints;
  std::int64_t covered_runs = 0;
  double coverage = 0.0;
  double coverage_target = 0.0;  // 1 - delta1 - delta2
  double binomial_p_value = 1.0;
  bool coverage_pass = false;

  std::int64_t appendix_checked = 0;
  std::int64_t appendix_skipped = 0;
  std::int64_t bound_z_t_violations = 0;
  std::int64_t polylog_beta_violations = 0;

  std::int64_t s_threshold = 0;
  bool s_meets_threshold = false;
  std::int64_t lambda_min_ok_runs = 0;
  std::int64_t alpha_covers_runs = 0;

  std::int64_t literal_q_checked = 0;
  std::int64_t literal_q_violations = 0;
  std::int64_t fallbacks = 0;

  std::optional<double> log_fit_r2;  // only when theta_* == theta_sim and M_delta == 0

  /// KEY=VALUE lines.
  std::string to_text() const;
};

DiagnosticsReport run_diagnostics(const ExperimentConfig& cfg, int num_runs,
                                  const HarnessOptions& options = {});

struct ScalingCell {
  std::int64_t s_value = 0;
  std::int64_t horizon = 0;
  double mean_final = 0.0;
  double std_final = 0.0;
  int n_runs = 0;
};

/// Regret ratio between two S values at one T against sqrt(s_hi / s_lo).
struct SRatioCheck {
  std::int64_t horizon = 0;
  std::int64_t s_lo = 0;
  std::int64_t s_hi = 0;
  double ratio = 0.0;     // mean regret at s_lo / mean regret at s_hi
  double expected = 0.0;  // sqrt(s_hi / s_lo)
  bool in_band = false;   // within a factor of 2 of expected
};

/// Advisory band for the log-regret vs log-T slope.
inline constexpr double kSlopeBandLo = 0.3;
inline constexpr double kSlopeBandHi = 0.8;

struct ScalingTable {
  std::vector<ScalingCell> cells;
  std::vector<SRatioCheck> s_ratios;  // consecutive S values, positive means only
  std::optional<double> slope_t_over_s;  // log mean regret vs log(T/S), positive cells only
  std::optional<double> r2_t_over_s;
  std::vector<std::pair<std::int64_t, double>> slope_vs_t;  // per S with >= 2 horizons
  std::vector<std::string> warnings;

  std::string to_text() const;
};

ScalingTable scaling_study(const ExperimentConfig& cfg, const std::vector<std::int64_t>& s_values,
                           const std::vector<std::int64_t>& t_values,
                           const HarnessOptions& options = {});

}  // namespace tsod
