#include "common.hpp"

#include "sketchprune/data.hpp"
#include "sketchprune/experiments.hpp"
#include "sketchprune/ntk.hpp"
#include "sketchprune/scores.hpp"

#include <cmath>
#include <cstdlib>
#include <iostream>

namespace sketchprune::cli {

namespace {

enum HistogramStream : std::uint64_t {
  kStreamWeights = 21,
  kStreamInput = 22,
  kStreamSelect = 23,
};

Index ceil_fraction(double density, Index d) {
  return std::max<Index>(1, static_cast<Index>(std::ceil(density * static_cast<double>(d) - 1e-9)));
}

std::vector<PruneMethod> pipeline_methods(const Options& opts) {
  std::vector<std::string> labels = opts.methods;
  if (labels.empty() && opts.method) labels.push_back(*opts.method);
  if (labels.empty()) {
    return all_prune_methods();
  }
  std::vector<PruneMethod> methods;
  for (const auto& label : labels) {
    const auto m = parse_prune_method(label);
    if (!m) throw UsageError("unknown pipeline method '" + label + "'");
    methods.push_back(*m);
  }
  return methods;
}

}  // namespace

int cmd_pipeline(const Options& opts, std::ostream& out) {
  const Index d = opts.d.value_or(64);
  std::vector<Index> s_values = opts.s;
  if (s_values.empty()) s_values.push_back(opts.density ? ceil_fraction(*opts.density, d) : 16);
  const std::vector<PruneMethod> methods = pipeline_methods(opts);

  struct Cell {
    std::uint64_t seed;
    PruneMethod method;
    Index s;
  };
  std::vector<Cell> cells;
  for (std::uint64_t seed : opts.seeds) {
    for (PruneMethod m : methods) {
      for (Index s : s_values) cells.push_back({seed, m, s});
    }
  }
  std::vector<ResultRow> rows(cells.size());
  parallel_for_blocks(cells.size(), opts.threads, [&](std::size_t i) {
    const Stopwatch watch(opts.timing);
    PruneRunConfig config;
    config.d = d;
    config.n = opts.n.value_or(32);
    config.s = cells[i].s;
    config.method = cells[i].method;
    config.seed = cells[i].seed;
    config.noise_std = opts.noise_std.value_or(kDefaultNoiseStd);
    config.steps = opts.steps.value_or(100);
    config.lr = opts.lr.value_or(0.0);
    const PipelineResult r = run_prune_pipeline(config);

    ResultRow& row = rows[i];
    row.method = std::string(to_string(r.method));
    row.run_id = "pipeline/" + std::to_string(r.seed) + "/" + row.method + "/" +
                 std::to_string(r.s);
    row.seed = r.seed;
    row.d = r.d;
    row.n = r.n;
    row.s = r.s;
    row.empirical_error = r.masked_error;
    row.bound = r.bound;
    row.kind = std::string(to_string(r.bound_kind));
    row.distance = r.w0_wstar_distance;
    row.extra = {format_double(r.density)};
    row.wall_time_ms = watch.elapsed_ms();
  });
  emit(opts, render_rows(std::move(rows), {"density"}), out);
  return kExitOk;
}

int cmd_histogram(const Options& opts, std::ostream& out) {
  const std::uint64_t seed = single_seed(opts);
  const Index d = opts.d.value_or(1024);
  const double density = opts.density.value_or(0.1);
  const Index bins = opts.bins.value_or(50);
  const std::string method = opts.method.value_or("randomized-synflow");
  const Index k = ceil_fraction(density, d);

  RngStream weight_rng(seed, kStreamWeights);
  RngStream input_rng(seed, kStreamInput);
  RngStream select_rng(seed, kStreamSelect);
  const WeightVector w(gen_normal_vector(d, 1.0, weight_rng));
  const Eigen::VectorXd input = gen_chi_input(d, input_rng);

  Mask mask = Mask::zeros(d);
  if (method == "randomized-synflow") {
    mask = select_randomized(synflow_scores(input, w), k, select_rng);
  } else if (method == "topk-synflow") {
    mask = select_topk(synflow_scores(input, w), k);
  } else if (method == "uniform") {
    mask = select_randomized(ScoreVector(Eigen::VectorXd::Ones(d)), k, select_rng);
  } else {
    throw UsageError("histogram method must be randomized-synflow, topk-synflow or uniform");
  }

  const Eigen::VectorXd mags = w.values().cwiseAbs();
  const double top = mags.maxCoeff();
  const double width = top > 0.0 ? top / static_cast<double>(bins) : 1.0;
  std::vector<Index> selected(static_cast<std::size_t>(bins), 0);
  std::vector<Index> all(static_cast<std::size_t>(bins), 0);
  for (Index i = 0; i < d; ++i) {
    const auto b = static_cast<std::size_t>(
        std::min<Index>(bins - 1, static_cast<Index>(std::floor(mags[i] / width))));
    ++all[b];
    if (mask[i] != 0.0) ++selected[b];
  }
  std::vector<std::vector<std::string>> table;
  for (Index b = 0; b < bins; ++b) {
    const auto ub = static_cast<std::size_t>(b);
    table.push_back({format_double(width * static_cast<double>(b)),
                     format_double(b + 1 == bins ? top : width * static_cast<double>(b + 1)),
                     std::to_string(selected[ub]), std::to_string(all[ub])});
  }
  emit(opts, render_csv({"bin_left", "bin_right", "count_selected", "count_all"}, table), out);
  return kExitOk;
}

int cmd_ntk_demo(const Options& opts, std::ostream& out) {
  std::vector<Index> s_values = opts.s;
  if (s_values.empty()) s_values.push_back(0);
  struct Cell {
    std::uint64_t seed;
    Index s;
  };
  std::vector<Cell> cells;
  for (std::uint64_t seed : opts.seeds) {
    for (Index s : s_values) cells.push_back({seed, s});
  }
  std::vector<ResultRow> rows(cells.size());
  parallel_for_blocks(cells.size(), opts.threads, [&](std::size_t i) {
    const Stopwatch watch(opts.timing);
    ntk::NtkRunConfig config;
    config.input_dim = opts.d.value_or(4);
    config.examples = opts.n.value_or(8);
    config.width = opts.width.value_or(64);
    config.steps = opts.steps.value_or(100);
    config.eta0 = opts.lr.value_or(0.0);
    config.mask_trials = opts.trials.value_or(1000);
    config.s = cells[i].s;
    config.seed = cells[i].seed;
    const ntk::NtkRunResult r = ntk::run_ntk_experiment(config);

    ResultRow& row = rows[i];
    row.method = "ntk-sketch";
    row.seed = config.seed;
    row.d = r.parameter_count;
    row.n = config.examples;
    row.s = r.error.s;
    row.run_id = "ntk-demo/" + std::to_string(row.seed) + "/w" + std::to_string(config.width) +
                 "/" + std::to_string(row.s);
    row.empirical_error = r.error.report.empirical_error;
    row.bound = r.error.report.closed_form_or_bound;
    row.kind = std::string(to_string(r.error.report.kind));
    row.standard_error = r.error.report.standard_error;
    row.distance = r.error.movement;
    row.extra = {format_double(r.error.movement_ratio), format_double(r.error.k_hat),
                 format_double(r.error.lambda_min), format_double(r.error.lambda_max),
                 format_double(r.error.r0)};
    row.wall_time_ms = watch.elapsed_ms();
  });
  emit(opts,
       render_rows(std::move(rows), {"movement_ratio", "k_hat", "lambda_min", "lambda_max", "r0"}),
       out);
  return kExitOk;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  try {
    const Options opts = parse_options(argc, argv, std::getenv("SKETCHPRUNE_SEED"));
    if (opts.command == "verify") return cmd_verify(opts, out, err);
    if (opts.command == "pipeline") return cmd_pipeline(opts, out);
    if (opts.command == "histogram") return cmd_histogram(opts, out);
    return cmd_ntk_demo(opts, out);
  } catch (const HelpRequested& help) {
    out << help.what();
    return kExitOk;
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}

}  // namespace sketchprune::cli
