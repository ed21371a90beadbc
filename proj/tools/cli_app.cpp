#include "cli_app.hpp"

#include <cstdlib>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "tsod/harness.hpp"
#include "tsod/io.hpp"
#include "tsod/riccati.hpp"

namespace tsod::cli {

namespace {

std::string resolve_output_dir(const CliInvocation& inv, const ParsedConfig& cfg) {
  if (!inv.output_dir.empty()) return inv.output_dir;
  if (cfg.document.contains("output_dir")) return cfg.config.output_dir;
  if (const char* env = std::getenv("TSOD_OUT_DIR"); env && *env) return env;
  return cfg.config.output_dir;
}

void print_matrix(std::ostream& out, const std::string& name, const Eigen::MatrixXd& mat) {
  out << name << " =\n";
  for (Eigen::Index i = 0; i < mat.rows(); ++i) {
    out << "  ";
    for (Eigen::Index j = 0; j < mat.cols(); ++j) out << (j ? " " : "") << format_double(mat(i, j) + 0.0);
    out << "\n";
  }
}

void print_riccati(std::ostream& out, const std::string& title, const Theta& theta, const Costs& costs) {
  out << "# " << title << "\n";
  const auto sol = solve_dare(theta, costs);
  print_matrix(out, "P", sol.p_matrix);
  print_matrix(out, "K", sol.gain);
  out << "J = " << format_double(sol.avg_cost) << "\n";
  out << "closed_loop_norm = " << format_double(closed_loop_norm(theta, sol.gain)) << "\n";
  out << "residual = " << format_double(riccati_residual(theta, costs, sol.p_matrix)) << "\n";
}

int do_offline(const ExperimentConfig& cfg, std::ostream& out) {
  ensure_directory(cfg.output_dir);
  for (auto s : cfg.s_values) {
    const double delta1 = cfg.delta1_for(s, cfg.horizon);
    RngStream rng(hash64(cfg.seed, 0x0ff1ULL, s), 1);
    const OfflineRun run = run_offline(cfg.theta_sim, cfg.costs, s, cfg.offline, delta1, cfg.m_delta, rng);
    const std::string stem = cfg.output_dir + "/offline_S" + std::to_string(s);
    write_offline_trajectory_csv(stem + "_trajectory.csv", run.trajectory);
    write_offline_summary(stem + "_summary.json", run.summary);
    const Assumption2Report rep = check_assumption2(run.summary, cfg.theta_sim);
    std::ostringstream txt;
    txt << "S=" << s << "\n"
        << "DELTA1=" << format_double(delta1) << "\n"
        << "ALPHA=" << format_double(run.summary.alpha) << "\n"
        << "ASSUMPTION2_S_THRESHOLD=" << rep.s_threshold << "\n"
        << "ASSUMPTION2_S_OK=" << (rep.s_meets_threshold ? 1 : 0) << "\n"
        << "LAMBDA_MIN_GRAM=" << format_double(rep.lambda_min_unregularized) << "\n"
        << "LAMBDA_MIN_U=" << format_double(rep.lambda_min_regularized) << "\n"
        << "LAMBDA_FLOOR=" << format_double(rep.lambda_floor) << "\n"
        << "LAMBDA_MIN_OK=" << (rep.lambda_min_ok ? 1 : 0) << "\n"
        << "WEIGHTED_ERROR=" << format_double(rep.weighted_error) << "\n"
        << "ALPHA_COVERS=" << (rep.alpha_covers ? 1 : 0) << "\n"
        << "GAIN_UPDATES=" << run.gain_updates << "\n"
        << "GAIN_UPDATE_SKIPS=" << run.gain_update_skips << "\n";
    write_text_file(stem + "_report.txt", txt.str());
    out << "wrote " << stem << "_{trajectory.csv,summary.json,report.txt}\n";
  }
  return ok;
}

}  // namespace

std::optional<Parsed> parse_and_validate(int argc, const char* const* argv, std::ostream& out) {
  CLI::App app{"Thompson-sampling LQR with offline data from a similar system", "tsod"};
  app.footer("Config keys (JSON file, // comments allowed; --set accepts scalar keys):\n" + config_key_help() +
             "\nExit codes: 0 ok, 1 usage error, 2 config error, 3 runtime failure.\n"
             "TSOD_OUT_DIR is used when neither --out nor output_dir is given.");
  app.require_subcommand(1, 1);

  CliInvocation inv;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", inv.config_path, "experiment config file")->required();
    sub->add_option("--out", inv.output_dir, "output directory");
    sub->add_option("--set", inv.overrides, "override a scalar key, KEY=VALUE (repeatable)");
    sub->add_option("--seed", inv.seed, "base seed");
    sub->add_option("--workers", inv.workers, "concurrent runs");
    sub->add_flag("--verbose,-v", inv.verbosity, "progress output");
  };
  auto* offline = app.add_subcommand("offline", "generate and cache offline datasets and summaries");
  auto* run = app.add_subcommand("run", "run the Monte-Carlo regret experiment");
  auto* diag = app.add_subcommand("diagnostics", "confidence-bound and inequality checks");
  auto* sweep = app.add_subcommand("sweep", "regret scaling over S and T");
  auto* riccati = app.add_subcommand("riccati", "print P, K and J for the configured systems");
  for (auto* sub : {offline, run, diag, sweep, riccati}) add_common(sub);
  diag->add_option("--runs", inv.runs, "number of runs (default: diagnostics_runs)");

  std::vector<std::string> args;
  for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
  try {
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return std::nullopt;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return std::nullopt;
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  if (offline->parsed()) inv.subcommand = Subcommand::offline;
  if (run->parsed()) inv.subcommand = Subcommand::run;
  if (diag->parsed()) inv.subcommand = Subcommand::diagnostics;
  if (sweep->parsed()) inv.subcommand = Subcommand::sweep;
  if (riccati->parsed()) inv.subcommand = Subcommand::riccati;

  Parsed parsed{inv, load_config(inv.config_path, inv.overrides)};
  auto& cfg = parsed.config.config;
  if (inv.seed) {
    cfg.seed = *inv.seed;
    parsed.config.document["seed"] = *inv.seed;
  }
  if (inv.workers) {
    if (*inv.workers < 1) throw UsageError("--workers must be >= 1");
    cfg.workers = *inv.workers;
  }
  if (inv.runs && *inv.runs < 1) throw UsageError("--runs must be >= 1");
  cfg.output_dir = resolve_output_dir(inv, parsed.config);
  return parsed;
}

int dispatch(const Parsed& parsed, std::ostream& out, std::ostream& err) {
  const auto& inv = parsed.invocation;
  const auto& cfg = parsed.config.config;
  for (const auto& w : parsed.config.warnings) err << "warning: " << w << "\n";

  HarnessOptions opts;
  opts.quiet = inv.verbosity == 0;
  switch (inv.subcommand) {
    case Subcommand::riccati:
      if (cfg.theta_mode == ThetaMode::fixed) print_riccati(out, "online system", cfg.theta_star, cfg.costs);
      print_riccati(out, "offline system", cfg.theta_sim, cfg.costs);
      return ok;
    case Subcommand::offline:
      return do_offline(cfg, out);
    case Subcommand::run: {
      const auto outcome = run_experiment(cfg, config_fingerprint(parsed.config.document), opts);
      for (const auto& agg : outcome.aggregates)
        out << agg.label << ": final cumulative regret " << format_double(agg.mean_final) << " +- "
            << format_double(agg.std_final) << " (n=" << agg.n_runs << ")\n";
      out << "outputs in " << cfg.output_dir << "\n";
      return ok;
    }
    case Subcommand::diagnostics: {
      const auto rep = run_diagnostics(cfg, inv.runs.value_or(cfg.diagnostics_runs), opts);
      out << rep.to_text();
      return ok;
    }
    case Subcommand::sweep: {
      const std::vector<std::int64_t> t_values =
          cfg.t_values.empty() ? std::vector<std::int64_t>{cfg.horizon} : cfg.t_values;
      const auto table = scaling_study(cfg, cfg.s_values, t_values, opts);
      out << table.to_text();
      return ok;
    }
  }
  return usage_error;
}

int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  std::optional<Parsed> parsed;
  try {
    parsed = parse_and_validate(argc, argv, out);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return usage_error;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const std::exception& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  }
  if (!parsed) return ok;
  try {
    return dispatch(*parsed, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return config_error;
  } catch (const std::exception& e) {
    err << "runtime error: " << e.what() << "\n";
    return runtime_error;
  }
}

}  // namespace tsod::cli
