#pragma once

#include "sketchprune/cli.hpp"

#include <chrono>
#include <ostream>

namespace sketchprune::cli {

// Label noise for pipeline runs: keeps ||w* - w0|| small relative to ||w0||.
inline constexpr double kDefaultNoiseStd = 0.01;

// Rows to --out (atomically) or to the stream.
inline void emit(const Options& opts, const std::string& text, std::ostream& out) {
  if (opts.out) {
    write_atomically(*opts.out, text);
  } else {
    out << text;
  }
}

// Wall-clock time is only recorded on request; otherwise 0 keeps reruns
// byte-identical.
class Stopwatch {
 public:
  explicit Stopwatch(bool enabled) : enabled_(enabled), start_(std::chrono::steady_clock::now()) {}
  double elapsed_ms() const {
    if (!enabled_) return 0.0;
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  bool enabled_;
  std::chrono::steady_clock::time_point start_;
};

inline std::uint64_t single_seed(const Options& opts) {
  if (opts.seeds.size() != 1) throw UsageError(opts.command + " takes exactly one seed");
  return opts.seeds.front();
}

}  // namespace sketchprune::cli
