#pragma once

// Command-line pipelines: select, sweep and filter. Each command reads a
// CSV dataset, runs one pipeline and writes a JSON report; sweep and filter
// also write a CSV next to it.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace gfsel {

struct RunConfig {
  std::string input_path;
  std::optional<std::string> label_path;
  std::optional<std::string> label_column;
  int k = 5;
  double eta = 1.0;
  double alpha = 1.0;
  double lambda = 1.0;
  std::optional<int> clusters;  ///< defaults to the label class count
  std::optional<int> top;       ///< defaults to min(10, d)
  std::string features = "10:10:100";
  std::string grid = "1e-3:10x:1e3";
  std::uint64_t seed = 42;
  std::string output_path;  ///< empty or "-" writes the report to stdout
  double outer_tol = 1e-4;
  int max_outer_iters = 50;
  int max_inner = 200;
  double inner_tol = 1e-6;
  int runs = 20;
  int workers = 0;  ///< 0 uses every available processor
};

/// Geometric grid "lo:STEPx:hi", arithmetic "lo:step:hi", a comma list or
/// a single value.
std::vector<double> parse_grid(const std::string& spec);

/// Feature counts "start:step:stop", a comma list or a single value.
std::vector<int> parse_feature_counts(const std::string& spec);

nlohmann::json config_to_json(const RunConfig& config);

/// Inverse of config_to_json. Unknown keys and ill-typed values throw
/// InvalidInput; missing keys keep their defaults.
RunConfig config_from_json(const nlohmann::json& j);

/// Path with its extension replaced ("out/report.json" -> "out/report.csv").
std::string sibling_path(const std::string& path, const std::string& extension);

// The commands write their report to config.output_path (or `out`) and
// return 0. Errors propagate as exceptions; run_cli maps them to exit codes.
int cmd_select(const RunConfig& config, std::ostream& out);
int cmd_sweep(const RunConfig& config, std::ostream& out);
int cmd_filter(const RunConfig& config, std::ostream& out);

/// Exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Full command-line entry point: parses argv, applies GFSEL_SEED, runs the
/// subcommand and reports failures as a JSON record on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace gfsel
