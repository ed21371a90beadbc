#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "tsod/config.hpp"

namespace tsod::cli {

enum class Subcommand { offline, run, diagnostics, sweep, riccati };

enum ExitCode : int { ok = 0, usage_error = 1, config_error = 2, runtime_error = 3 };

struct CliInvocation {
  Subcommand subcommand = Subcommand::run;
  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<int> runs;  // diagnostics only
  int verbosity = 0;
};

struct Parsed {
  CliInvocation invocation;
  ParsedConfig config;
};

/// Parses argv and the referenced config. Throws UsageError or ConfigError.
/// Returns nullopt when help was requested (already printed to `out`).
std::optional<Parsed> parse_and_validate(int argc, const char* const* argv, std::ostream& out);

/// Executes a parsed invocation; returns the process exit code.
int dispatch(const Parsed& parsed, std::ostream& out, std::ostream& err);

/// parse_and_validate + dispatch with errors mapped to exit codes.
int run_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tsod::cli
