#include "tsod/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <map>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <thread>

#include "tsod/io.hpp"
#include "tsod/linalg.hpp"
#include "tsod/linear_sim.hpp"
#include "tsod/stats.hpp"

namespace tsod {

namespace {

constexpr std::uint64_t kOfflineStream = 1;
constexpr std::uint64_t kOnlineStream = 2;
constexpr std::uint64_t kThetaStream = 3;
constexpr std::uint64_t kExtraSourceStream = 16;
constexpr std::uint64_t kSharedOfflineTag = 0x5ea7ed0ffULL;

template <typename Fn>
void parallel_for(std::size_t count, int workers, Fn&& fn) {
  const std::size_t n_threads = std::min<std::size_t>(static_cast<std::size_t>(std::max(workers, 1)), count);
  if (n_threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(count);
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < n_threads; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

OfflineSummary simulate_source(const ExperimentConfig& cfg, const Theta& theta_sim,
                               std::int64_t s_len, double m_delta, std::int64_t horizon,
                               RngStream rng) {
  const double delta1 = cfg.delta1_for(s_len, horizon);
  return run_offline(theta_sim, cfg.costs, s_len, cfg.offline, delta1, m_delta, rng).summary;
}

RngStream offline_stream(const ExperimentConfig& cfg, std::uint64_t run_seed, std::int64_t s_value,
                         std::uint64_t stream) {
  if (cfg.share_offline) return RngStream(hash64(cfg.seed, kSharedOfflineTag, s_value), stream);
  return RngStream(run_seed, stream);
}

Theta draw_theta_star(const ExperimentConfig& cfg, std::uint64_t run_seed) {
  if (cfg.theta_mode == ThetaMode::fixed) return cfg.theta_star;
  RngStream rng(run_seed, kThetaStream);
  for (int attempt = 0; attempt < 100; ++attempt) {
    const Theta delta = sample_theta_delta(cfg.m_delta, cfg.n(), cfg.m(), rng);
    Theta candidate = make_true_theta(cfg.theta_sim, delta).theta;
    if (in_set_q(candidate, cfg.costs, cfg.set_q)) return candidate;
  }
  throw ConfigError("m_delta", "could not draw a theta_* inside Q around theta_sim");
}

}  // namespace

const AggregateResult& ExperimentOutcome::find(const std::string& label) const {
  for (const auto& a : aggregates)
    if (a.label == label) return a;
  throw std::out_of_range("no aggregate labelled " + label);
}

std::uint64_t derive_run_seed(std::uint64_t base_seed, Variant variant, std::int64_t run_id,
                              std::int64_t s_value) {
  return hash64(base_seed, static_cast<std::uint64_t>(variant), run_id, s_value);
}

std::string run_label(Variant variant, std::int64_t s_value, bool sweep) {
  std::string label(variant_name(variant));
  if (sweep) label += "_S" + std::to_string(s_value);
  return label;
}

RunRecord execute_run(const ExperimentConfig& cfg, Variant variant, std::int64_t s_value,
                      std::int64_t run_id, std::int64_t horizon,
                      const std::vector<std::int64_t>& checkpoints) {
  RunRecord rec;
  rec.variant = variant;
  rec.s_value = s_value;
  rec.run_id = run_id;
  rec.seed = derive_run_seed(cfg.seed, variant, run_id, s_value);

  std::vector<OfflineSummary> summaries;
  if (cfg.offline_summary_file) {
    summaries.push_back(read_offline_summary(*cfg.offline_summary_file));
  } else {
    summaries.push_back(simulate_source(cfg, cfg.theta_sim, s_value, cfg.m_delta, horizon,
                                        offline_stream(cfg, rec.seed, s_value, kOfflineStream)));
  }
  for (std::size_t k = 0; k < cfg.extra_sources.size(); ++k) {
    const auto& src = cfg.extra_sources[k];
    summaries.push_back(simulate_source(cfg, src.theta_sim, src.s_len, src.m_delta, horizon,
                                        offline_stream(cfg, rec.seed, s_value, kExtraSourceStream + k)));
  }
  rec.assumption2 = check_assumption2(summaries.front(), cfg.theta_sim);
  const MultiSourceSummary sources(std::move(summaries));

  rec.s_total = sources.total_length();
  const Eigen::Index dim = cfg.n() + cfg.m();
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto& s : sources.summaries)
    gram += s.u_matrix - s.regularizer * Eigen::MatrixXd::Identity(dim, dim);
  rec.gram_floor_ok = lambda_min(gram) >= static_cast<double>(rec.s_total) / 40.0;

  rec.theta_star = draw_theta_star(cfg, rec.seed);

  EpisodeOptions opts;
  opts.max_attempts = cfg.max_attempts;
  opts.beta_mdelta_scale = cfg.beta_mdelta_scale;
  opts.state_ceiling = cfg.state_ceiling;
  opts.regularizer = cfg.offline.regularizer;
  opts.delta2 = cfg.delta2_for(horizon);
  opts.checkpoints = checkpoints;

  RngStream online(rec.seed, kOnlineStream);
  EpisodeResult res = run_episode(rec.theta_star, sources, cfg.costs, cfg.set_q, horizon, cfg.delta,
                                  variant, online, opts);
  rec.trace = std::move(res.trace);
  rec.trace.run_id = run_id;
  rec.trace.seed = rec.seed;
  rec.diagnostics = std::move(res.diagnostics);
  if (variant == Variant::tsod && rec.gram_floor_ok)
    rec.appendix = check_appendix_bounds(rec.diagnostics, horizon, rec.s_total, dim);
  return rec;
}

AggregateResult aggregate_traces(const std::string& label, Variant variant, std::int64_t s_value,
                                 const std::vector<const RegretTrace*>& traces) {
  AggregateResult agg;
  agg.label = label;
  agg.variant = variant;
  agg.s_value = s_value;
  agg.n_runs = static_cast<int>(traces.size());
  if (traces.empty()) return agg;
  const std::size_t steps = traces.front()->steps.size();
  for (const auto* tr : traces)
    if (tr->steps.size() != steps) throw DimensionMismatch("traces have different lengths");
  agg.mean_cum_regret.resize(steps);
  agg.std_cum_regret.resize(steps);
  std::vector<double> column(traces.size());
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t r = 0; r < traces.size(); ++r) column[r] = traces[r]->steps[t].cum_regret;
    agg.mean_cum_regret[t] = stats::mean(column);
    agg.std_cum_regret[t] = stats::sample_std(column);
  }
  if (steps > 0) {
    agg.mean_final = agg.mean_cum_regret.back();
    agg.std_final = agg.std_cum_regret.back();
  }
  return agg;
}

void write_trace_csv(const std::string& path, const RegretTrace& trace) {
  CsvWriter csv(path, {"t", "cost", "instant_regret", "cum_regret", "beta", "rejections", "state_norm"});
  for (const auto& s : trace.steps) {
    csv.field(s.t);
    csv.field(s.cost);
    csv.field(s.instant_regret);
    csv.field(s.cum_regret);
    csv.field(s.beta);
    csv.field(s.rejections);
    csv.field(s.state_norm);
    csv.end_row();
  }
  csv.close();
}

void write_aggregate_csv(const std::string& path, const std::vector<AggregateResult>& aggregates) {
  CsvWriter csv(path, {"t", "mean_cum_regret", "std_cum_regret", "variant", "n_runs"});
  for (const auto& agg : aggregates) {
    for (std::size_t i = 0; i < agg.mean_cum_regret.size(); ++i) {
      csv.field(static_cast<std::int64_t>(i + 1));
      csv.field(agg.mean_cum_regret[i]);
      csv.field(agg.std_cum_regret[i]);
      csv.field(agg.label);
      csv.field(static_cast<std::int64_t>(agg.n_runs));
      csv.end_row();
    }
  }
  csv.close();
}

namespace {

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  if (std::abs(v) >= 1e5 || (std::abs(v) < 1e-2 && v != 0.0))
    std::snprintf(buf, sizeof(buf), "%.2e", v);
  else
    std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

void write_regret_svg(const std::string& path, const std::vector<AggregateResult>& aggregates,
                      const std::string& title) {
  constexpr double width = 960, height = 540;
  constexpr double left = 90, right = 30, top = 50, bottom = 60;
  const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#17becf"};

  std::size_t steps = 0;
  double lo = 0.0, hi = 0.0;
  for (const auto& agg : aggregates) {
    steps = std::max(steps, agg.mean_cum_regret.size());
    for (std::size_t i = 0; i < agg.mean_cum_regret.size(); ++i) {
      lo = std::min(lo, agg.mean_cum_regret[i] - agg.std_cum_regret[i]);
      hi = std::max(hi, agg.mean_cum_regret[i] + agg.std_cum_regret[i]);
    }
  }
  if (hi <= lo) hi = lo + 1.0;
  const double x_max = static_cast<double>(std::max<std::size_t>(steps, 1));
  auto px = [&](double t) { return left + (t / x_max) * (width - left - right); };
  auto py = [&](double v) { return top + (hi - v) / (hi - lo) * (height - top - bottom); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"960\" height=\"540\" viewBox=\"0 0 960 540\">\n";
  svg << "<rect width=\"960\" height=\"540\" fill=\"white\"/>\n";
  svg << "<text x=\"480\" y=\"28\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"18\">"
      << xml_escape(title) << "</text>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right
      << "\" y2=\"" << height - bottom << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
      << height - bottom << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 5; ++k) {
    const double v = lo + (hi - lo) * k / 5.0;
    const double t = x_max * k / 5.0;
    svg << "<text x=\"" << left - 6 << "\" y=\"" << fmt2(py(v) + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(v) << "</text>\n";
    svg << "<text x=\"" << fmt2(px(t)) << "\" y=\"" << height - bottom + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << tick_label(std::round(t))
        << "</text>\n";
  }
  svg << "<text x=\"480\" y=\"" << height - 15
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">t</text>\n";
  svg << "<text x=\"20\" y=\"270\" transform=\"rotate(-90 20 270)\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"13\">cumulative regret</text>\n";

  for (std::size_t a = 0; a < aggregates.size(); ++a) {
    const auto& agg = aggregates[a];
    const char* color = palette[a % (sizeof(palette) / sizeof(palette[0]))];
    const std::size_t len = agg.mean_cum_regret.size();
    if (len == 0) continue;
    svg << "<polygon fill=\"" << color << "\" fill-opacity=\"0.18\" stroke=\"none\" points=\"";
    for (std::size_t i = 0; i < len; ++i)
      svg << fmt2(px(double(i + 1))) << ',' << fmt2(py(agg.mean_cum_regret[i] + agg.std_cum_regret[i])) << ' ';
    for (std::size_t i = len; i-- > 0;)
      svg << fmt2(px(double(i + 1))) << ',' << fmt2(py(agg.mean_cum_regret[i] - agg.std_cum_regret[i])) << ' ';
    svg << "\"/>\n";
    svg << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < len; ++i)
      svg << fmt2(px(double(i + 1))) << ',' << fmt2(py(agg.mean_cum_regret[i])) << ' ';
    svg << "\"/>\n";
    const double ly = top + 10 + 20.0 * static_cast<double>(a);
    svg << "<line x1=\"" << left + 15 << "\" y1=\"" << ly << "\" x2=\"" << left + 45 << "\" y2=\"" << ly
        << "\" stroke=\"" << color << "\" stroke-width=\"3\"/>\n";
    svg << "<text x=\"" << left + 52 << "\" y=\"" << ly + 4 << "\" font-family=\"sans-serif\" font-size=\"12\">"
        << xml_escape(agg.label) << " (n=" << agg.n_runs << ")</text>\n";
  }
  svg << "</svg>\n";
  write_text_file(path, svg.str());
}

ExperimentOutcome run_experiment(const ExperimentConfig& cfg, std::uint64_t fingerprint,
                                 const HarnessOptions& options) {
  struct Task {
    Variant variant;
    std::int64_t s_value;
    std::int64_t run_id;
  };
  std::vector<Task> tasks;
  for (auto s : cfg.s_values)
    for (auto v : cfg.variants)
      for (int r = 0; r < cfg.num_runs; ++r) tasks.push_back({v, s, r});

  const bool sweep = cfg.s_values.size() > 1;
  const std::string run_dir = cfg.output_dir + "/runs";
  if (options.write_files) ensure_directory(run_dir);

  ExperimentOutcome outcome;
  outcome.fingerprint = fingerprint;
  outcome.runs.resize(tasks.size());
  std::mutex log_mutex;
  parallel_for(tasks.size(), cfg.workers, [&](std::size_t i) {
    const Task& task = tasks[i];
    RunRecord rec = execute_run(cfg, task.variant, task.s_value, task.run_id, cfg.horizon, options.checkpoints);
    rec.label = run_label(task.variant, task.s_value, sweep);
    if (options.write_files) {
      char name[64];
      std::snprintf(name, sizeof(name), "_run%03lld.csv", static_cast<long long>(task.run_id));
      write_trace_csv(run_dir + "/" + rec.label + name, rec.trace);
    }
    if (!options.quiet) {
      std::lock_guard lock(log_mutex);
      std::cerr << "[run] " << rec.label << " #" << task.run_id << " final regret "
                << format_double(rec.trace.final_regret()) << "\n";
    }
    outcome.runs[i] = std::move(rec);
  });

  for (auto s : cfg.s_values) {
    for (auto v : cfg.variants) {
      std::vector<const RegretTrace*> traces;
      for (const auto& rec : outcome.runs)
        if (rec.variant == v && rec.s_value == s) traces.push_back(&rec.trace);
      AggregateResult agg = aggregate_traces(run_label(v, s, sweep), v, s, traces);
      agg.fingerprint = fingerprint;
      outcome.aggregates.push_back(std::move(agg));
    }
  }

  if (options.write_files) {
    write_aggregate_csv(cfg.output_dir + "/aggregate.csv", outcome.aggregates);
    write_regret_svg(cfg.output_dir + "/regret.svg", outcome.aggregates, "Cumulative regret (mean +- 1 std)");
    std::ostringstream summary;
    char fp[32];
    std::snprintf(fp, sizeof(fp), "%016llx", static_cast<unsigned long long>(fingerprint));
    summary << "FINGERPRINT=" << fp << "\n";
    summary << "HORIZON=" << cfg.horizon << "\n";
    for (const auto& agg : outcome.aggregates) {
      summary << "FINAL_MEAN_" << agg.label << "=" << format_double(agg.mean_final) << "\n";
      summary << "FINAL_STD_" << agg.label << "=" << format_double(agg.std_final) << "\n";
      summary << "N_RUNS_" << agg.label << "=" << agg.n_runs << "\n";
    }
    std::int64_t checked = 0, zt_viol = 0, poly_viol = 0, fallbacks = 0;
    for (const auto& rec : outcome.runs) {
      fallbacks += rec.diagnostics.fallbacks;
      if (!rec.appendix) continue;
      ++checked;
      zt_viol += rec.appendix->elliptical_ok ? 0 : 1;
      poly_viol += rec.appendix->logdet_ok ? 0 : 1;
    }
    summary << "APPENDIX_CHECKED_RUNS=" << checked << "\n";
    summary << "BOUND_Z_T_VIOLATIONS=" << zt_viol << "\n";
    summary << "POLYLOG_BETA_VIOLATIONS=" << poly_viol << "\n";
    summary << "SAMPLER_FALLBACKS=" << fallbacks << "\n";
    write_text_file(cfg.output_dir + "/summary.txt", summary.str());
  }
  return outcome;
}

std::string DiagnosticsReport::to_text() const {
  std::ostringstream out;
  out << "# TSOD-LQR diagnostics\n";
  out << "RUNS=" << runs << "\n";
  out << "S=" << s_value << "\n";
  out << "T=" << horizon << "\n";
  out << "DELTA1=" << format_double(delta1) << "\n";
  out << "DELTA2=" << format_double(delta2) << "\n";
  out << "CHECKPOINTS=";
  for (std::size_t i = 0; i < checkpoints.size(); ++i) out << (i ? "," : "") << checkpoints[i];
  out << "\n";
  out << "# confidence ellipsoid coverage at every checkpoint\n";
  out << "THM1_COVERED_RUNS=" << covered_runs << "\n";
  out << "THM1_COVERAGE=" << format_double(coverage) << "\n";
  out << "THM1_TARGET=" << format_double(coverage_target) << "\n";
  out << "THM1_BINOMIAL_P=" << format_double(binomial_p_value) << "\n";
  out << "THM1_PASS=" << (coverage_pass ? 1 : 0) << "\n";
  out << "# log-det inequalities (runs meeting lambda_min >= S/40)\n";
  out << "APPENDIX_CHECKED_RUNS=" << appendix_checked << "\n";
  out << "APPENDIX_SKIPPED_RUNS=" << appendix_skipped << "\n";
  out << "BOUND_Z_T_VIOLATIONS=" << bound_z_t_violations << "\n";
  out << "POLYLOG_BETA_VIOLATIONS=" << polylog_beta_violations << "\n";
  out << "# offline learner\n";
  out << "ASSUMPTION2_S_THRESHOLD=" << s_threshold << "\n";
  out << "ASSUMPTION2_S_OK=" << (s_meets_threshold ? 1 : 0) << "\n";
  out << "ASSUMPTION2_LAMBDA_OK_RUNS=" << lambda_min_ok_runs << "\n";
  out << "ASSUMPTION2_ALPHA_COVERS_RUNS=" << alpha_covers_runs << "\n";
  out << "# admissible-set predicate re-evaluated with the hidden system\n";
  out << "LITERAL_Q_CHECKED=" << literal_q_checked << "\n";
  out << "LITERAL_Q_VIOLATIONS=" << literal_q_violations << "\n";
  out << "SAMPLER_FALLBACKS=" << fallbacks << "\n";
  if (log_fit_r2) out << "LOG_T_FIT_R2=" << format_double(*log_fit_r2) << "\n";
  return out.str();
}

DiagnosticsReport run_diagnostics(const ExperimentConfig& cfg, int num_runs,
                                  const HarnessOptions& options) {
  if (num_runs < 1) throw DomainError("run_diagnostics: num_runs must be >= 1");
  DiagnosticsReport rep;
  rep.runs = num_runs;
  rep.s_value = cfg.s_values.front();
  rep.horizon = cfg.horizon;
  rep.delta1 = cfg.delta1_for(rep.s_value, cfg.horizon);
  rep.delta2 = cfg.delta2_for(cfg.horizon);
  const std::int64_t t = cfg.horizon;
  rep.checkpoints = {std::max<std::int64_t>(t / 4, 1), std::max<std::int64_t>(t / 2, 1), t};
  rep.checkpoints.erase(std::unique(rep.checkpoints.begin(), rep.checkpoints.end()), rep.checkpoints.end());

  std::vector<RunRecord> runs(static_cast<std::size_t>(num_runs));
  parallel_for(runs.size(), cfg.workers, [&](std::size_t i) {
    runs[i] = execute_run(cfg, Variant::tsod, rep.s_value, static_cast<std::int64_t>(i), cfg.horizon,
                          rep.checkpoints);
  });

  std::vector<const RegretTrace*> traces;
  for (const auto& rec : runs) {
    traces.push_back(&rec.trace);
    const bool all_covered = std::all_of(rec.diagnostics.checkpoints.begin(), rec.diagnostics.checkpoints.end(),
                                         [](const CheckpointRecord& c) { return c.covered(); });
    if (all_covered) ++rep.covered_runs;
    if (rec.appendix) {
      ++rep.appendix_checked;
      if (!rec.appendix->elliptical_ok) ++rep.bound_z_t_violations;
      if (!rec.appendix->logdet_ok) ++rep.polylog_beta_violations;
    } else {
      ++rep.appendix_skipped;
    }
    rep.s_threshold = rec.assumption2.s_threshold;
    rep.s_meets_threshold = rec.assumption2.s_meets_threshold;
    if (rec.assumption2.lambda_min_ok) ++rep.lambda_min_ok_runs;
    if (rec.assumption2.alpha_covers) ++rep.alpha_covers_runs;
    rep.literal_q_checked += rec.diagnostics.literal_q_checked;
    rep.literal_q_violations += rec.diagnostics.literal_q_violations;
    rep.fallbacks += rec.diagnostics.fallbacks;
  }
  rep.coverage = static_cast<double>(rep.covered_runs) / static_cast<double>(num_runs);
  rep.coverage_target = std::max(0.0, 1.0 - rep.delta1 - rep.delta2);
  rep.binomial_p_value = stats::binomial_cdf(rep.covered_runs, num_runs, rep.coverage_target);
  rep.coverage_pass = stats::binomial_not_below(rep.covered_runs, num_runs, rep.coverage_target);

  const bool same_system = cfg.theta_mode == ThetaMode::fixed && cfg.theta_star == cfg.theta_sim;
  if (same_system && cfg.m_delta == 0.0 && cfg.horizon >= 3) {
    const AggregateResult agg = aggregate_traces("tsod", Variant::tsod, rep.s_value, traces);
    std::vector<double> x, y;
    for (std::size_t i = 0; i < agg.mean_cum_regret.size(); ++i) {
      x.push_back(std::log(static_cast<double>(i + 1)));
      y.push_back(agg.mean_cum_regret[i]);
    }
    rep.log_fit_r2 = stats::linear_fit(x, y).r2;
  }

  if (options.write_files) {
    ensure_directory(cfg.output_dir);
    write_text_file(cfg.output_dir + "/diagnostics.txt", rep.to_text());
  }
  return rep;
}

std::string ScalingTable::to_text() const {
  std::ostringstream out;
  for (const auto& w : warnings) out << "# warning: " << w << "\n";
  for (const auto& c : cells)
    out << "CELL S=" << c.s_value << " T=" << c.horizon << " MEAN_FINAL=" << format_double(c.mean_final)
        << " STD_FINAL=" << format_double(c.std_final) << " N_RUNS=" << c.n_runs << "\n";
  if (slope_t_over_s) out << "SLOPE_T_OVER_S=" << format_double(*slope_t_over_s) << "\n";
  if (r2_t_over_s) out << "R2_T_OVER_S=" << format_double(*r2_t_over_s) << "\n";
  for (const auto& [s, slope] : slope_vs_t) {
    out << "SLOPE_VS_T_S" << s << "=" << format_double(slope) << "\n";
    out << "SLOPE_VS_T_IN_BAND_S" << s << "=" << (slope >= kSlopeBandLo && slope <= kSlopeBandHi ? 1 : 0) << "\n";
  }
  for (const auto& r : s_ratios) {
    const std::string tag = "_T" + std::to_string(r.horizon) + "_S" + std::to_string(r.s_lo) + "_S" + std::to_string(r.s_hi);
    out << "RATIO" << tag << "=" << format_double(r.ratio) << "\n";
    out << "RATIO_EXPECTED" << tag << "=" << format_double(r.expected) << "\n";
    out << "RATIO_IN_BAND" << tag << "=" << (r.in_band ? 1 : 0) << "\n";
  }
  return out.str();
}

ScalingTable scaling_study(const ExperimentConfig& cfg, const std::vector<std::int64_t>& s_values,
                           const std::vector<std::int64_t>& t_values, const HarnessOptions& options) {
  if (s_values.empty() || t_values.empty()) throw DomainError("scaling_study needs S and T values");
  ScalingTable table;
  struct Task {
    std::int64_t s, t;
    int run;
  };
  std::vector<Task> tasks;
  for (auto s : s_values)
    for (auto t : t_values) {
      if (s <= t)
        table.warnings.push_back("S = " + std::to_string(s) + " <= T = " + std::to_string(t));
      for (int r = 0; r < cfg.num_runs; ++r) tasks.push_back({s, t, r});
    }
  std::vector<double> finals(tasks.size());
  parallel_for(tasks.size(), cfg.workers, [&](std::size_t i) {
    const auto& task = tasks[i];
    finals[i] = execute_run(cfg, Variant::tsod, task.s, task.run, task.t).trace.final_regret();
  });

  std::vector<double> lx, ly;
  std::map<std::int64_t, std::pair<std::vector<double>, std::vector<double>>> per_s;
  for (auto s : s_values)
    for (auto t : t_values) {
      std::vector<double> vals;
      for (std::size_t i = 0; i < tasks.size(); ++i)
        if (tasks[i].s == s && tasks[i].t == t) vals.push_back(finals[i]);
      ScalingCell cell{s, t, stats::mean(vals), stats::sample_std(vals), static_cast<int>(vals.size())};
      table.cells.push_back(cell);
      if (cell.mean_final > 0.0) {
        lx.push_back(std::log(static_cast<double>(t) / static_cast<double>(s)));
        ly.push_back(std::log(cell.mean_final));
        per_s[s].first.push_back(std::log(static_cast<double>(t)));
        per_s[s].second.push_back(std::log(cell.mean_final));
      }
    }
  bool distinct_ratio = false;
  for (std::size_t i = 1; i < lx.size(); ++i) distinct_ratio |= lx[i] != lx[0];
  if (lx.size() >= 2 && distinct_ratio) {
    const auto fit = stats::linear_fit(lx, ly);
    table.slope_t_over_s = fit.slope;
    table.r2_t_over_s = fit.r2;
  }
  for (const auto& [s, xy] : per_s)
    if (xy.first.size() >= 2) table.slope_vs_t.emplace_back(s, stats::linear_fit(xy.first, xy.second).slope);

  std::vector<std::int64_t> sorted_s = s_values;
  std::sort(sorted_s.begin(), sorted_s.end());
  sorted_s.erase(std::unique(sorted_s.begin(), sorted_s.end()), sorted_s.end());
  auto cell_mean = [&](std::int64_t s, std::int64_t t) {
    for (const auto& c : table.cells)
      if (c.s_value == s && c.horizon == t) return c.mean_final;
    return 0.0;
  };
  for (auto t : t_values)
    for (std::size_t i = 1; i < sorted_s.size(); ++i) {
      const double lo = cell_mean(sorted_s[i - 1], t);
      const double hi = cell_mean(sorted_s[i], t);
      if (!(lo > 0.0 && hi > 0.0)) continue;
      SRatioCheck r;
      r.horizon = t;
      r.s_lo = sorted_s[i - 1];
      r.s_hi = sorted_s[i];
      r.ratio = lo / hi;
      r.expected = std::sqrt(static_cast<double>(r.s_hi) / static_cast<double>(r.s_lo));
      r.in_band = r.ratio >= 0.5 * r.expected && r.ratio <= 2.0 * r.expected;
      table.s_ratios.push_back(r);
    }

  if (options.write_files) {
    ensure_directory(cfg.output_dir);
    CsvWriter csv(cfg.output_dir + "/scaling.csv", {"s", "t", "mean_final_regret", "std_final_regret", "n_runs"});
    for (const auto& c : table.cells) {
      csv.field(c.s_value);
      csv.field(c.horizon);
      csv.field(c.mean_final);
      csv.field(c.std_final);
      csv.field(static_cast<std::int64_t>(c.n_runs));
      csv.end_row();
    }
    csv.close();
    write_text_file(cfg.output_dir + "/scaling.txt", table.to_text());
  }
  return table;
}

}  // namespace tsod
