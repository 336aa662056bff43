#include "common.hpp"

#include "sketchprune/bounds.hpp"
#include "sketchprune/data.hpp"
#include "sketchprune/experiments.hpp"
#include "sketchprune/ntk.hpp"
#include "sketchprune/scores.hpp"
#include "sketchprune/sketch.hpp"

#include <cmath>
#include <functional>
#include <map>
#include <ostream>

namespace sketchprune::cli {

namespace {

enum VerifyStream : std::uint64_t {
  kStreamX = 31,
  kStreamW = 32,
  kStreamMc = 33,
  kStreamXTilde = 34,
  kStreamDelta = 35,
};

constexpr double kEquivalenceTolerance = 1e-12;
constexpr double kEnumerationTolerance = 1e-10;
constexpr double kJacobianTolerance = 1e-5;
constexpr Index kEquivalenceInstances = 100;
constexpr Index kPairsPerRatio = 10;
constexpr Index kGapSeeds = 200;
const std::vector<double> kDistanceRatios = {0.1, 0.5, 1.0};

struct Suite {
  const Options& opts;
  std::uint64_t seed;
  std::vector<ResultRow>& rows;

  Index d(Index fallback) const { return opts.d.value_or(fallback); }
  Index n(Index fallback) const { return opts.n.value_or(fallback); }
  Index trials(Index fallback) const { return opts.trials.value_or(fallback); }
  std::vector<Index> s_values(std::vector<Index> fallback) const {
    return opts.s.empty() ? fallback : opts.s;
  }

  ResultRow& add(const std::string& id, const std::string& method, Index dd, Index nn, Index s) {
    ResultRow r;
    r.run_id = opts.suite + "/" + std::to_string(seed) + "/" + id;
    r.seed = seed;
    r.d = dd;
    r.n = nn;
    r.s = s;
    r.method = method;
    rows.push_back(std::move(r));
    return rows.back();
  }

  ResultRow& add_report(const std::string& id, const std::string& method, Index dd, Index nn,
                        Index s, const BoundReport& rep) {
    ResultRow& r = add(id, method, dd, nn, s);
    r.empirical_error = rep.empirical_error;
    r.bound = rep.closed_form_or_bound;
    r.kind = std::string(to_string(rep.kind));
    r.standard_error = rep.standard_error;
    r.extra = {format_double(rep.empirical_error - rep.closed_form_or_bound),
               rep.holds(4.0) ? "true" : "false"};
    return r;
  }
};

double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale > 0.0 ? std::abs(a - b) / scale : 0.0;
}

// max_i |a_i - b_i| / max(|a_i|, |b_i|), zero where both vanish.
double max_relative_deviation(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  double worst = 0.0;
  for (Index i = 0; i < a.size(); ++i) worst = std::max(worst, relative_gap(a[i], b[i]));
  return worst;
}

// w0 + delta with ||delta|| = ratio ||w0||, isotropic direction.
WeightVector perturb(const WeightVector& w0, double ratio, RngStream& rng) {
  const Eigen::VectorXd dir = gen_normal_vector(w0.size(), 1.0, rng);
  return WeightVector(w0.values() + ratio * w0.values().norm() * dir.normalized());
}

void finish_tolerance_row(ResultRow& r, double deviation, double tolerance) {
  r.empirical_error = deviation;
  r.bound = tolerance;
  r.kind = std::string(to_string(BoundKind::kUpperBound));
  r.extra = {format_double(deviation), deviation <= tolerance ? "true" : "false"};
}

void suite_expected_error(Suite& suite) {
  const Index d = suite.d(32), n = suite.n(16);
  for (Index s : suite.s_values({4, 16})) {
    RngStream xr(suite.seed, kStreamX), wr(suite.seed, kStreamW);
    const DataMatrix x = gen_normal_X(d, n, xr);
    const WeightVector w0(gen_normal_vector(d, 1.0 / static_cast<double>(d), wr));
    const ProbabilityVector p0 = optimal_probabilities(x, w0);
    const double closed = optimal_sketch_error(x, w0, s);

    RngStream mc = RngStream(suite.seed, kStreamMc).substream(static_cast<std::uint64_t>(s));
    BoundReport rep = mc_error_over_masks(x, w0, p0, s, suite.trials(100000), mc,
                                          suite.opts.threads);
    rep.closed_form_or_bound = closed;
    suite.add_report("mc/s" + std::to_string(s), "sketch-p0", d, n, s, rep);

    if (std::pow(static_cast<double>(d), static_cast<double>(s)) <= kMaxEnumeratedSequences) {
      const double exact = enumerate_exact_error(x, w0, p0, s);
      ResultRow& r = suite.add("enumeration/s" + std::to_string(s), "enumeration", d, n, s);
      r.empirical_error = exact;
      r.bound = closed;
      r.kind = std::string(to_string(BoundKind::kEquality));
      r.extra = {format_double(exact - closed),
                 relative_gap(exact, closed) <= kEnumerationTolerance ? "true" : "false"};
    }
  }
}

void suite_init_bound(Suite& suite) {
  const Index d = suite.d(64), n = suite.n(32);
  RngStream wr(suite.seed, kStreamW);
  const WeightVector w0(gen_normal_vector(d, 1.0 / static_cast<double>(d), wr));
  for (Index s : suite.s_values({8, 32})) {
    RngStream mc = RngStream(suite.seed, kStreamMc).substream(static_cast<std::uint64_t>(s));
    BoundReport rep = mc_error_over_data(w0, w0, s, n, suite.trials(2000), mc,
                                         MaskSampling::kOptimal, suite.opts.threads);
    rep.closed_form_or_bound = random_data_init_bound(w0, s);
    suite.add_report("s" + std::to_string(s), "sketch-p0", d, n, s, rep);
  }
}

void suite_transfer(Suite& suite) {
  const Index d = suite.d(32), n = suite.n(16);
  RngStream xr(suite.seed, kStreamX), xtr(suite.seed, kStreamXTilde);
  RngStream wr(suite.seed, kStreamW), dr(suite.seed, kStreamDelta);
  const DataMatrix x = gen_normal_X(d, n, xr);
  const DataMatrix x_tilde = gen_normal_X(d, n, xtr);
  const WeightVector w0(gen_normal_vector(d, 1.0 / static_cast<double>(d), wr));
  const WeightVector w_star = perturb(w0, 0.5, dr);
  const ProbabilityVector p_tilde = optimal_probabilities(x_tilde, w0);
  for (Index s : suite.s_values({4, 16})) {
    const TransferError te = transfer_error_bound(x, x_tilde, w0, w_star, s);
    RngStream mc = RngStream(suite.seed, kStreamMc).substream(static_cast<std::uint64_t>(s));
    BoundReport rep = mc_error_over_masks(x, w_star, p_tilde, s, suite.trials(100000), mc,
                                          suite.opts.threads);
    rep.closed_form_or_bound = te.exact;
    ResultRow& mc_row = suite.add_report("mc/s" + std::to_string(s), "transfer-mc", d, n, s, rep);
    mc_row.distance = (w_star.values() - w0.values()).norm();

    ResultRow& r = suite.add("bound/s" + std::to_string(s), "transfer-bound", d, n, s);
    r.empirical_error = te.exact;
    r.bound = te.bound;
    r.kind = std::string(to_string(BoundKind::kUpperBound));
    r.distance = mc_row.distance;
    r.extra = {format_double(te.exact - te.bound), te.exact <= te.bound ? "true" : "false"};
  }
}

void suite_distance_bound(Suite& suite) {
  const Index d = suite.d(64), n = suite.n(32);
  for (Index s : suite.s_values({16})) {
    for (std::size_t ri = 0; ri < kDistanceRatios.size(); ++ri) {
      for (Index pair = 0; pair < kPairsPerRatio; ++pair) {
        const std::uint64_t cell = ri * 1000 + static_cast<std::uint64_t>(pair);
        RngStream wr = RngStream(suite.seed, kStreamW).substream(cell);
        RngStream dr = RngStream(suite.seed, kStreamDelta).substream(cell);
        const WeightVector w0(gen_normal_vector(d, 1.0 / static_cast<double>(d), wr));
        const WeightVector w_star = perturb(w0, kDistanceRatios[ri], dr);
        RngStream mc = RngStream(suite.seed, kStreamMc)
                           .substream(cell * 4096 + static_cast<std::uint64_t>(s));
        const BoundReport rep = mc_error_over_data(w0, w_star, s, n, suite.trials(2000), mc,
                                                   MaskSampling::kOptimal, suite.opts.threads);
        ResultRow& r = suite.add_report("ratio" + format_double(kDistanceRatios[ri]) + "/pair" +
                                     std::to_string(pair) + "/s" + std::to_string(s),
                                 "sketch-p0", d, n, s, rep);
        r.distance = (w_star.values() - w0.values()).norm();
      }
    }
  }
}

void suite_uniform_bound(Suite& suite) {
  const Index d = suite.d(64), n = suite.n(32);
  for (Index s : suite.s_values({16})) {
    for (Index pair = 0; pair < kPairsPerRatio; ++pair) {
      const auto cell = static_cast<std::uint64_t>(pair);
      RngStream wr = RngStream(suite.seed, kStreamW).substream(cell);
      RngStream dr = RngStream(suite.seed, kStreamDelta).substream(cell);
      const WeightVector w0(gen_normal_vector(d, 1.0 / static_cast<double>(d), wr));
      const WeightVector w_star = perturb(w0, 0.5, dr);
      RngStream mc = RngStream(suite.seed, kStreamMc).substream(cell * 4096 + s);
      const BoundReport rep = mc_error_over_data(w0, w_star, s, n, suite.trials(2000), mc,
                                                 MaskSampling::kUniform, suite.opts.threads);
      ResultRow& r = suite.add_report("uniform/pair" + std::to_string(pair) + "/s" + std::to_string(s),
                               "sketch-uniform", d, n, s, rep);
      r.distance = (w_star.values() - w0.values()).norm();
    }

    // Paired pipeline runs: same data, init and training per seed.
    RunningMoments optimal, uniform, diff;
    for (Index k = 0; k < kGapSeeds; ++k) {
      PruneRunConfig config;
      config.d = d;
      config.n = n;
      config.s = s;
      config.seed = suite.seed * kGapSeeds + static_cast<std::uint64_t>(k);
      config.steps = suite.opts.steps.value_or(100);
      config.noise_std = suite.opts.noise_std.value_or(kDefaultNoiseStd);
      config.method = PruneMethod::kSketchOptimal;
      const double e_opt = run_prune_pipeline(config).masked_error;
      config.method = PruneMethod::kSketchUniform;
      const double e_uni = run_prune_pipeline(config).masked_error;
      optimal.add(e_opt);
      uniform.add(e_uni);
      diff.add(e_opt - e_uni);
    }
    ResultRow& r = suite.add("gap/s" + std::to_string(s), "paired-gap", d, n, s);
    r.empirical_error = optimal.mean;
    r.bound = uniform.mean;
    r.kind = std::string(to_string(BoundKind::kUpperBound));
    r.standard_error = diff.standard_error();
    r.extra = {format_double(optimal.mean - uniform.mean),
               optimal.mean < uniform.mean ? "true" : "false"};
  }
}

void suite_equivalence(Suite& suite, bool snip) {
  const Index d = suite.d(64), n = suite.n(32);
  for (Index k = 0; k < kEquivalenceInstances; ++k) {
    const auto cell = static_cast<std::uint64_t>(k);
    RngStream xr = RngStream(suite.seed, kStreamX).substream(cell);
    RngStream wr = RngStream(suite.seed, kStreamW).substream(cell);
    const WeightVector w(gen_normal_vector(d, 1.0 / static_cast<double>(d), wr));
    Eigen::VectorXd induced, optimal;
    if (snip) {
      const DataMatrix x = gen_sparse_X(d, n, xr);
      induced = scores_to_probabilities(snip_scores_l1(x, Eigen::VectorXd::Zero(n), w)).values();
      optimal = optimal_probabilities(x, w).values();
    } else {
      const DataMatrix x = gen_normal_X(d, n, xr);
      induced = scores_to_probabilities(synflow_scores(row_norms(x), w)).values();
      optimal = optimal_probabilities(x, w).values();
    }
    ResultRow& r = suite.add("instance" + std::to_string(k), snip ? "snip-l1" : "synflow", d, n, 0);
    finish_tolerance_row(r, max_relative_deviation(induced, optimal), kEquivalenceTolerance);
  }
}

void suite_ntk(Suite& suite, std::ostream& err) {
  const Index width = suite.opts.width.value_or(64);
  ntk::NtkRunConfig config;
  config.input_dim = suite.d(4);
  config.examples = suite.n(8);
  config.width = width;
  config.steps = suite.opts.steps.value_or(100);
  config.eta0 = suite.opts.lr.value_or(0.0);
  config.mask_trials = suite.trials(1000);
  config.seed = suite.seed;
  for (Index s : suite.s_values({0})) {
    config.s = s;
    const ntk::NtkRunResult res = ntk::run_ntk_experiment(config);
    ResultRow& r = suite.add_report("bound/w" + std::to_string(width) + "/s" + std::to_string(res.error.s),
                             "ntk-sketch", res.parameter_count, config.examples, res.error.s,
                             res.error.report);
    r.distance = res.error.movement;

    ResultRow& m = suite.add("movement/w" + std::to_string(width), "movement-ratio",
                             res.parameter_count, config.examples, res.error.s);
    m.distance = res.error.movement;
    const bool asserted = width >= 64;
    finish_tolerance_row(m, res.error.movement_ratio, 1.0);
    if (!asserted) {
      if (res.error.movement_ratio > 1.0) {
        err << "warning: movement ratio " << res.error.movement_ratio << " exceeds 1 at width "
            << width << "\n";
      }
      m.extra.back() = "true";
    }
  }

  RngStream mr(suite.seed, kStreamW), xr(suite.seed, kStreamX);
  const ntk::TinyMLP model =
      ntk::TinyMLP::initialize(config.input_dim, width, 1, ntk::Activation::kErf, mr);
  Eigen::MatrixXd raw(config.input_dim, config.examples);
  for (Index e = 0; e < raw.cols(); ++e) {
    for (Index j = 0; j < raw.rows(); ++j) raw(j, e) = xr.normal();
  }
  const DataMatrix inputs(std::move(raw));
  const Eigen::MatrixXd analytic = ntk::analytic_jacobian(model, inputs);
  const Eigen::MatrixXd numeric = ntk::numerical_jacobian(model, inputs);
  const double scale = analytic.cwiseAbs().maxCoeff();
  const double dev = scale > 0.0 ? (analytic - numeric).cwiseAbs().maxCoeff() / scale : 0.0;
  ResultRow& j = suite.add("jacobian/w" + std::to_string(width), "jacobian-fd",
                           model.parameter_count(), config.examples, 0);
  finish_tolerance_row(j, dev, kJacobianTolerance);
}

}  // namespace

int cmd_verify(const Options& opts, std::ostream& out, std::ostream& err) {
  const std::map<std::string, std::function<void(Suite&)>> suites = {
      {"lemma1", suite_expected_error},
      {"lemma2", suite_init_bound},
      {"lemma3", suite_transfer},
      {"theorem1", suite_distance_bound},
      {"lemma4", suite_uniform_bound},
      {"snip-equiv", [](Suite& s) { suite_equivalence(s, true); }},
      {"synflow-equiv", [](Suite& s) { suite_equivalence(s, false); }},
      {"ntk", [&err](Suite& s) { suite_ntk(s, err); }},
  };
  const auto it = suites.find(opts.suite);
  if (it == suites.end()) throw UsageError("unknown verify suite '" + opts.suite + "'");

  std::vector<ResultRow> rows;
  for (std::uint64_t seed : opts.seeds) {
    const Stopwatch watch(opts.timing);
    const std::size_t first = rows.size();
    Suite suite{opts, seed, rows};
    it->second(suite);
    const double ms = watch.elapsed_ms();
    for (std::size_t i = first; i < rows.size(); ++i) rows[i].wall_time_ms = ms;
  }
  bool all_pass = true;
  for (const auto& r : rows) all_pass = all_pass && r.extra.back() == "true";
  emit(opts, render_rows(std::move(rows), {"deviation", "pass"}), out);
  return all_pass ? kExitOk : kExitAssertionFailed;
}

}  // namespace sketchprune::cli
