#pragma once

#include "sketchprune/core.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sketchprune::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertionFailed = 1;
inline constexpr int kExitUsage = 2;

class UsageError : public Error {
 public:
  using Error::Error;
};

// Thrown by parse_options when --help was given; what() holds the help text.
class HelpRequested : public Error {
 public:
  using Error::Error;
};

// Flags layered over the --config JSON file, with SKETCHPRUNE_SEED as the
// last fallback for the seed. Unset fields take per-command defaults.
struct Options {
  std::string command;
  std::string suite;
  std::optional<Index> d;
  std::optional<Index> n;
  std::vector<Index> s;
  std::optional<double> density;
  std::optional<std::string> method;
  std::vector<std::string> methods;
  std::vector<std::uint64_t> seeds;
  std::optional<Index> trials;
  std::optional<double> noise_std;
  std::optional<Index> steps;
  std::optional<double> lr;
  std::optional<Index> width;
  std::optional<Index> bins;
  std::optional<std::string> out;
  unsigned threads = 1;
  bool timing = false;
};

// env_seed may be null. Throws UsageError or HelpRequested.
Options parse_options(int argc, const char* const* argv, const char* env_seed);

// 17 significant digits so the text round-trips; NaN prints as nan.
std::string format_double(double v);

struct ResultRow {
  std::string run_id;
  std::uint64_t seed = 0;
  Index d = 0;
  Index n = 0;
  Index s = 0;
  std::string method;
  double empirical_error = 0.0;
  double bound = 0.0;
  std::string kind;
  double standard_error = 0.0;
  double distance = 0.0;
  double wall_time_ms = 0.0;
  // Values for command-specific trailing columns, already formatted.
  std::vector<std::string> extra;
};

inline const std::vector<std::string> kResultColumns = {
    "run_id", "seed",           "d",        "n",            "s",
    "method", "empirical_error", "bound",   "kind",         "standard_error",
    "distance", "wall_time_ms"};

// Stable sort by (seed, method, s), then one CSV line per row.
std::string render_rows(std::vector<ResultRow> rows,
                        const std::vector<std::string>& extra_columns);

std::string render_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);

// Writes to a sibling temp file, then renames over path.
void write_atomically(const std::string& path, const std::string& content);

// Each returns the exit code; rows go to --out or to `out`.
int cmd_verify(const Options& opts, std::ostream& out, std::ostream& err);
int cmd_pipeline(const Options& opts, std::ostream& out);
int cmd_histogram(const Options& opts, std::ostream& out);
int cmd_ntk_demo(const Options& opts, std::ostream& out);

// Full entry point: parse, dispatch, and map errors onto exit codes.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sketchprune::cli
