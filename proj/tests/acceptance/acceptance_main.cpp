// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fail.

#include "sketchprune/bounds.hpp"
#include "sketchprune/cli.hpp"
#include "sketchprune/data.hpp"
#include "sketchprune/experiments.hpp"
#include "sketchprune/ntk.hpp"
#include "sketchprune/scores.hpp"
#include "sketchprune/sketch.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

using namespace sketchprune;

namespace {

struct Verdict {
  bool pass = true;
  std::string detail;
};

struct Criterion {
  int id;
  const char* name;
  double limit_s;
  std::function<Verdict()> run;
};

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

double relative_gap(double a, double b) {
  const double scale = std::max(std::abs(a), std::abs(b));
  return scale == 0.0 ? 0.0 : std::abs(a - b) / scale;
}

ProbabilityVector random_distribution(Index d, RngStream& rng) {
  Eigen::VectorXd v(d);
  for (Index i = 0; i < d; ++i) v[i] = 0.05 + rng.uniform();
  return ProbabilityVector(v / v.sum());
}

WeightVector perturb(const WeightVector& w0, double ratio, RngStream& rng) {
  const Eigen::VectorXd dir = gen_normal_vector(w0.size(), 1.0, rng);
  return WeightVector(w0.values() + ratio * w0.values().norm() * dir.normalized());
}

double chi_mean_squared(Index n) {
  const double nn = static_cast<double>(n);
  return 2.0 / nn * std::exp(2 * (std::lgamma((nn + 1) / 2) - std::lgamma(nn / 2)));
}

double analytic_random_data_error(const WeightVector& w0, const WeightVector& ws, Index s,
                                  Index n) {
  const double l1 = w0.values().lpNorm<1>();
  double acc = 0.0;
  for (Index k = 0; k < w0.size(); ++k) {
    acc += ws[k] * ws[k] * (l1 - std::abs(w0[k])) / std::abs(w0[k]);
  }
  return chi_mean_squared(n) * acc / static_cast<double>(s);
}

Verdict closed_form_equality() {
  Verdict v;
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RngStream rng(seed, 1001);
    const Index d = 2 + static_cast<Index>(rng.uniform_index(5));
    const Index n = 1 + static_cast<Index>(rng.uniform_index(5));
    const Index s = 1 + static_cast<Index>(rng.uniform_index(3));
    const DataMatrix x = gen_normal_X(d, n, rng);
    const WeightVector w(gen_normal_vector(d, 1.0, rng));
    const double gap = relative_gap(
        enumerate_exact_error(x, w, optimal_probabilities(x, w), s), optimal_sketch_error(x, w, s));
    worst = std::max(worst, gap);
  }
  v.pass = worst <= 1e-10;
  v.detail = fmt("enumeration max rel gap %.2e", worst);
  RngStream data(1, 1002);
  const DataMatrix x = gen_normal_X(32, 16, data);
  const WeightVector w(gen_normal_vector(32, 1.0 / 32, data));
  for (Index s : {4, 16}) {
    RngStream mc(1, 1003 + static_cast<std::uint64_t>(s));
    const BoundReport r = mc_error_over_masks(x, w, optimal_probabilities(x, w), s, 100000, mc);
    v.pass = v.pass && r.holds();
    v.detail += fmt("; s=%.0f mc %.5g closed %.5g (%.2f SE)", double(s), r.empirical_error,
                    r.closed_form_or_bound,
                    std::abs(r.empirical_error - r.closed_form_or_bound) / r.standard_error);
  }
  return v;
}

Verdict optimality() {
  Verdict v;
  int strict = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    RngStream rng(seed, 1010);
    const Index d = 2 + static_cast<Index>(rng.uniform_index(4));
    const Index s = 1 + static_cast<Index>(rng.uniform_index(3));
    const DataMatrix x = gen_normal_X(d, 3, rng);
    const WeightVector w(gen_normal_vector(d, 1.0, rng));
    const ProbabilityVector p0 = optimal_probabilities(x, w);
    const double best = enumerate_exact_error(x, w, p0, s);
    const ProbabilityVector uni = uniform_probabilities(d);
    const double u = enumerate_exact_error(x, w, uni, s);
    const bool nonuniform = (p0.values() - uni.values()).cwiseAbs().maxCoeff() > 1e-12;
    if (nonuniform) {
      if (best < u) ++strict;
      else v.pass = false;
    } else if (best > u * (1 + 1e-12)) {
      v.pass = false;
    }
    for (int r = 0; r < 20; ++r) {
      if (best > enumerate_exact_error(x, w, random_distribution(d, rng), s) * (1 + 1e-12))
        v.pass = false;
    }
  }
  v.detail = fmt("strictly below uniform on %.0f/50 non-uniform instances", strict);
  return v;
}

Verdict init_bound() {
  Verdict v;
  RngStream wr(3, 1020);
  const WeightVector w0(gen_normal_vector(64, 1.0 / 64, wr));
  for (Index s : {8, 32}) {
    RngStream mc(3, 1021 + static_cast<std::uint64_t>(s));
    BoundReport r = mc_error_over_data(w0, w0, s, 32, 2000, mc);
    r.closed_form_or_bound = random_data_init_bound(w0, s);
    v.pass = v.pass && r.holds();
    v.detail += fmt("s=%.0f E_X %.4g (SE %.2g) bound %.4g", double(s), r.empirical_error,
                    r.standard_error, r.closed_form_or_bound);
    v.detail += fmt(" analytic %.4g; ", analytic_random_data_error(w0, w0, s, 32));
  }
  return v;
}

Verdict distance_bound() {
  Verdict v;
  const double ratios[] = {0.1, 0.5, 1.0};
  for (std::size_t ri = 0; ri < 3; ++ri) {
    int held = 0;
    double worst = 0.0;
    for (std::uint64_t pair = 0; pair < 10; ++pair) {
      RngStream wr(pair, 1030 + ri);
      const WeightVector w0(gen_normal_vector(64, 1.0 / 64, wr));
      const WeightVector ws = perturb(w0, ratios[ri], wr);
      RngStream mc(pair, 1040 + ri);
      const BoundReport r = mc_error_over_data(w0, ws, 16, 32, 2000, mc);
      if (r.holds()) ++held;
      worst = std::max(worst, r.empirical_error / r.closed_form_or_bound);
    }
    v.pass = v.pass && held == 10;
    v.detail += fmt("ratio %.1f: %.0f/10 hold, worst E_X/bound %.3f; ", ratios[ri], held, worst);
  }
  return v;
}

Verdict uniform_gap() {
  Verdict v;
  int held = 0;
  for (std::uint64_t pair = 0; pair < 10; ++pair) {
    RngStream wr(pair, 1050);
    const WeightVector w0(gen_normal_vector(64, 1.0 / 64, wr));
    const WeightVector ws = perturb(w0, 0.5, wr);
    RngStream mc(pair, 1051);
    if (mc_error_over_data(w0, ws, 16, 32, 2000, mc, MaskSampling::kUniform).holds()) ++held;
  }
  RunningMoments opt, uni;
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    PruneRunConfig c;
    c.seed = 50000 + seed;
    c.noise_std = 0.01;
    c.method = PruneMethod::kSketchOptimal;
    opt.add(run_prune_pipeline(c).masked_error);
    c.method = PruneMethod::kSketchUniform;
    uni.add(run_prune_pipeline(c).masked_error);
  }
  v.pass = held == 10 && opt.mean < uni.mean;
  v.detail = fmt("uniform bound %.0f/10; paired means p0 %.4g uniform %.4g", held, opt.mean,
                 uni.mean);
  return v;
}

Verdict synflow_equivalence() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RngStream rng(seed, 1060);
    const Index d = 2 + static_cast<Index>(rng.uniform_index(60));
    const DataMatrix x = gen_normal_X(d, 1 + static_cast<Index>(rng.uniform_index(20)), rng);
    const WeightVector w(gen_normal_vector(d, 1.0, rng));
    const ProbabilityVector a = scores_to_probabilities(synflow_scores(row_norms(x), w));
    const ProbabilityVector b = optimal_probabilities(x, w);
    for (Index i = 0; i < d; ++i) worst = std::max(worst, relative_gap(a[i], b[i]));
  }
  return {worst <= 1e-12, fmt("max rel deviation %.2e", worst)};
}

Verdict snip_equivalence() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    RngStream rng(seed, 1070);
    const Index d = 2 + static_cast<Index>(rng.uniform_index(60));
    const Index n = 1 + static_cast<Index>(rng.uniform_index(20));
    const DataMatrix x = gen_sparse_X(d, n, rng);
    const WeightVector w(gen_normal_vector(d, 1.0, rng));
    const ProbabilityVector a =
        scores_to_probabilities(snip_scores_l1(x, Eigen::VectorXd::Zero(n), w));
    const ProbabilityVector b = optimal_probabilities(x, w);
    for (Index i = 0; i < d; ++i) worst = std::max(worst, relative_gap(a[i], b[i]));
  }
  return {worst <= 1e-12, fmt("max rel deviation %.2e", worst)};
}

Verdict moment_identities() {
  const Index d = 16, n = 6, s = 6;
  RngStream data(8, 1080);
  const DataMatrix x = gen_normal_X(d, n, data);
  const WeightVector w0(gen_normal_vector(d, 1.0, data));
  const WeightVector ws = perturb(w0, 0.5, data);
  const ProbabilityVector p = optimal_probabilities(x, w0);
  const Eigen::VectorXd target = features(x, ws);
  RngStream rng(8, 1081);
  std::vector<RunningMoments> mean(n), var(n);
  for (int t = 0; t < 100000; ++t) {
    const Eigen::VectorXd f = features(x, apply_mask(ws, sample_sketch_mask(p, s, rng)));
    for (Index i = 0; i < n; ++i) {
      mean[static_cast<std::size_t>(i)].add(f[i]);
      var[static_cast<std::size_t>(i)].add((f[i] - target[i]) * (f[i] - target[i]));
    }
  }
  Verdict v;
  double worst = 0.0;
  for (Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Index k = 0; k < d; ++k) acc += x(k, i) * x(k, i) * ws[k] * ws[k] / p[k];
    const double closed_var = (acc - target[i] * target[i]) / s;
    const auto& m = mean[static_cast<std::size_t>(i)];
    const auto& q = var[static_cast<std::size_t>(i)];
    const double zm = std::abs(m.mean - target[i]) / m.standard_error();
    const double zv = std::abs(q.mean - closed_var) / q.standard_error();
    worst = std::max({worst, zm, zv});
  }
  v.pass = worst <= 4.0;
  v.detail = fmt("largest deviation %.2f SE over %.0f coordinates", worst, double(n));
  return v;
}

Verdict linearized_bound() {
  Verdict v;
  int held = 0;
  double worst_ratio = 0.0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    ntk::NtkRunConfig c;
    c.seed = seed;
    const ntk::NtkRunResult r = ntk::run_ntk_experiment(c);
    if (r.error.report.holds()) ++held;
    worst_ratio = std::max(worst_ratio, r.error.movement_ratio);
  }
  double worst_fd = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RngStream rng(seed, 1090);
    const ntk::TinyMLP m = ntk::TinyMLP::initialize(4, 64, 1, ntk::Activation::kErf, rng);
    Eigen::MatrixXd raw(4, 8);
    for (Index i = 0; i < raw.size(); ++i) raw.data()[i] = rng.normal();
    const DataMatrix x(raw);
    const Eigen::MatrixXd a = ntk::analytic_jacobian(m, x);
    const Eigen::MatrixXd fd = ntk::numerical_jacobian(m, x);
    worst_fd = std::max(worst_fd, (a - fd).cwiseAbs().maxCoeff() / a.cwiseAbs().maxCoeff());
  }
  v.pass = held == 50 && worst_fd <= 1e-5;
  v.detail = fmt("bound held %.0f/50; max movement ratio %.3g; jacobian fd rel dev %.2e", held,
                 worst_ratio, worst_fd);
  return v;
}

Verdict magnitude_bias() {
  const Index d = 1024;
  const Index k = static_cast<Index>(std::ceil(0.1 * d));
  int wins = 0;
  for (std::uint64_t trial = 0; trial < 100; ++trial) {
    RngStream rng(trial, 1100);
    const WeightVector w(gen_normal_vector(d, 1.0, rng));
    const Eigen::VectorXd input = gen_chi_input(d, rng);
    const Mask chosen = select_randomized(synflow_scores(input, w), k, rng);
    const Mask random = select_randomized(ScoreVector(Eigen::VectorXd::Ones(d)), k, rng);
    const Eigen::VectorXd mags = w.values().cwiseAbs();
    const double a = mags.dot(chosen.values()) / static_cast<double>(k);
    const double b = mags.dot(random.values()) / static_cast<double>(k);
    if (a > b) ++wins;
  }
  return {wins >= 95, fmt("selected mean |w| above random mask in %.0f/100 trials", wins)};
}

Verdict determinism() {
  const std::vector<std::vector<std::string>> invocations = {
      {"verify", "lemma1", "--seed", "3", "--d", "8", "--trials", "2000"},
      {"verify", "theorem1", "--seed", "3", "--trials", "50", "--threads", "2"},
      {"pipeline", "--seed", "1,2", "--s", "8,16", "--threads", "3"},
      {"histogram", "--seed", "5"},
      {"ntk-demo", "--seed", "4", "--width", "16", "--trials", "100"},
  };
  Verdict v;
  int identical = 0;
  for (auto args : invocations) {
    args.insert(args.begin(), "sketchprune");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::string first;
    bool same = true;
    for (int rep = 0; rep < 2; ++rep) {
      std::ostringstream out, err;
      cli::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
      if (rep == 0) first = out.str();
      else same = same && out.str() == first && !first.empty();
    }
    if (same) ++identical;
    else v.pass = false;
  }
  v.detail = fmt("%.0f/%.0f invocations byte-identical", identical, double(invocations.size()));
  return v;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {1, "closed-form sketch error equals enumeration and Monte Carlo", 30, closed_form_equality},
      {2, "optimal distribution minimizes expected error", 10, optimality},
      {3, "random-data init bound (1/s)||w0||^2", 20, init_bound},
      {4, "random-data distance bound", 60, distance_bound},
      {5, "uniform-mask bound and paired optimal-vs-uniform gap", 60, uniform_gap},
      {6, "synflow scores induce the optimal distribution", 5, synflow_equivalence},
      {7, "snip scores on sparse data induce the optimal distribution", 5, snip_equivalence},
      {8, "sketch features unbiased with closed-form variance", 30, moment_identities},
      {9, "linearized-network bound and jacobian check", 120, linearized_bound},
      {10, "magnitude bias of randomized synflow selection", 10, magnitude_bias},
      {11, "CLI output byte-identical across reruns", 60, determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    while (!v.detail.empty() && (v.detail.back() == ' ' || v.detail.back() == ';'))
      v.detail.pop_back();
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs <= c.limit_s;
    const bool pass = v.pass && in_time;
    if (!pass) ++failures;
    std::printf("%s criterion %2d: %s [%.2fs / %.0fs%s] %s\n", pass ? "PASS" : "FAIL", c.id,
                c.name, secs, c.limit_s, in_time ? "" : " over limit", v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria failed\n", failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
