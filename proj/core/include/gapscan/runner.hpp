#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gapscan/gap_estimator.hpp"

namespace gapscan {

enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitNoWindow = 2, kExitNumeric = 3 };

/// Every knob of one run. Unset optionals take model-dependent defaults in
/// resolve(); the resolved values are what the summary echoes.
struct RunConfig {
  std::string model = "tfim2d";
  std::optional<double> J;
  std::optional<double> g;
  std::optional<std::string> scheme;
  std::optional<std::size_t> D;
  std::optional<double> dtau;
  std::optional<double> tau_max;
  std::size_t measure_every = 1;
  std::uint64_t seed = 1;
  double so_tol = 1e-10;
  std::size_t so_max_iter = 200;
  std::size_t so_every = 10;
  double window_rel_tol = 5e-3;
  std::size_t min_points = 20;
  /// Secant width for derivative flattening; defaults to 1 (off), and to
  /// so_every for the gates scheme so each secant spans one regauging period.
  std::optional<std::size_t> smoothing;
  std::size_t oracle_dim = 10;
  std::string trace_csv;
  std::string derivative_csv;
  std::string summary;
};

/// Parses "key = value" lines; '#' starts a comment. Throws InputError on
/// malformed lines.
std::map<std::string, std::string> parse_key_values(std::istream& in);
std::map<std::string, std::string> read_config_file(const std::string& path);

/// Applies settings by name; unknown keys and unparsable values throw InputError.
void apply_settings(RunConfig& config, const std::map<std::string, std::string>& settings);

/// Fills defaults and validates. Throws InputError for invalid combinations.
RunConfig resolve(const RunConfig& config);

/// Flat key=value echo of a resolved config.
std::map<std::string, std::string> describe(const RunConfig& resolved);

struct RunResult {
  RunConfig config;
  GapTrace trace;
  GapEstimate estimate;
  double wall_seconds = 0.0;
  /// Reference gap when the model has one (oracle E1 - E0, exact limits).
  std::optional<double> reference_gap;
  std::map<std::string, std::string> extra;
};

/// Runs an evolution (or oracle trace) and estimates the gap. Throws on failure.
RunResult execute(const RunConfig& config);

void write_trace_csv(const GapTrace& t, std::ostream& out);
void write_derivative_csv(const std::vector<DerivativeSample>& d, std::ostream& out);
void write_summary(const RunResult& r, std::ostream& out);

/// execute() plus the three outputs; returns an ExitCode.
int run(const RunConfig& config, std::ostream& log);

/// Runs `config` once per value of `param` and writes param,gap,err,quality.
int sweep(const RunConfig& config, const std::string& param, const std::vector<double>& values,
          const std::string& out_csv, std::ostream& log);

}  // namespace gapscan
