#include "sketchprune/experiments.hpp"

#include "sketchprune/scores.hpp"
#include "sketchprune/sketch.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sketchprune {

namespace {

// Stream ids for the independent random inputs of one pipeline run.
enum PipelineStream : std::uint64_t {
  kStreamTrainX = 1,
  kStreamInit = 2,
  kStreamNoise = 3,
  kStreamMask = 4,
  kStreamTestX = 5,
  kStreamSparseX = 6,
};

}  // namespace

SyntheticDataset make_synthetic_dataset(DataMatrix x, WeightVector w_true, double noise_std,
                                        RngStream& rng) {
  if (noise_std < 0.0) throw InvalidArgumentError("noise_std must be >= 0");
  Eigen::VectorXd y = features(x, w_true);
  if (noise_std > 0.0) {
    for (Index i = 0; i < y.size(); ++i) y[i] += noise_std * rng.normal();
  }
  return SyntheticDataset{std::move(x), std::move(y), std::move(w_true), noise_std};
}

double least_squares_loss(const DataMatrix& x, const Eigen::VectorXd& y, const WeightVector& w) {
  if (y.size() != x.examples()) throw DimensionError("labels length differs from n");
  return (features(x, w) - y).squaredNorm() / static_cast<double>(x.examples());
}

double power_iteration_top_eigenvalue(const Eigen::MatrixXd& sym, int iterations) {
  if (sym.rows() != sym.cols() || sym.rows() < 1) throw DimensionError("need a square matrix");
  Eigen::VectorXd v = Eigen::VectorXd::Ones(sym.rows()).normalized();
  for (int it = 0; it < iterations; ++it) {
    const Eigen::VectorXd next = sym * v;
    const double norm = next.norm();
    if (norm == 0.0) return 0.0;
    v = next / norm;
  }
  return v.dot(sym * v);
}

double default_learning_rate(const DataMatrix& x) {
  const double n = static_cast<double>(x.examples());
  const Eigen::MatrixXd hessian = 2.0 / n * x.values() * x.values().transpose();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(hessian, Eigen::EigenvaluesOnly);
  const double top = eig.eigenvalues().maxCoeff();
  if (!(top > 0.0)) throw DegenerateDistributionError("X X^T has no positive eigenvalue");
  return 0.9 * 2.0 / top;
}

TrainingTrace train_least_squares_traced(const DataMatrix& x, const Eigen::VectorXd& y,
                                         const WeightVector& w0, Index steps, double lr) {
  if (!(lr > 0.0)) throw InvalidArgumentError("learning rate must be positive");
  if (steps < 0) throw InvalidArgumentError("steps must be >= 0");
  if (x.dims() != w0.size() || x.examples() != y.size()) {
    throw DimensionError("train_least_squares: dimension mismatch");
  }
  const double scale = 2.0 / static_cast<double>(x.examples());
  Eigen::VectorXd w = w0.values();
  std::vector<double> losses;
  losses.reserve(static_cast<std::size_t>(steps) + 1);
  losses.push_back(least_squares_loss(x, y, w0));
  int rises = 0;
  for (Index t = 0; t < steps; ++t) {
    const Eigen::VectorXd residual = x.values().transpose() * w - y;
    w -= lr * scale * (x.values() * residual);
    const double loss = (x.values().transpose() * w - y).squaredNorm() /
                        static_cast<double>(x.examples());
    if (!std::isfinite(loss)) throw DivergenceError("loss became non-finite");
    rises = loss > losses.back() ? rises + 1 : 0;
    losses.push_back(loss);
    if (rises >= 2) throw DivergenceError("loss increased on two consecutive steps");
  }
  return TrainingTrace{WeightVector(std::move(w)), std::move(losses)};
}

WeightVector train_least_squares(const DataMatrix& x, const Eigen::VectorXd& y,
                                 const WeightVector& w0, Index steps, double lr) {
  return train_least_squares_traced(x, y, w0, steps, lr).weights;
}

// ---------------------------------------------------------------------------

std::string_view to_string(PruneMethod method) {
  switch (method) {
    case PruneMethod::kSketchOptimal:
      return "sketch-p0";
    case PruneMethod::kSketchUniform:
      return "sketch-uniform";
    case PruneMethod::kTopkSynflow:
      return "topk-synflow";
    case PruneMethod::kRandomizedSynflow:
      return "randomized-synflow";
    case PruneMethod::kRandomizedSnipSparse:
      return "randomized-snip-sparse";
  }
  return "unknown";
}

const std::vector<PruneMethod>& all_prune_methods() {
  static const std::vector<PruneMethod> methods = {
      PruneMethod::kSketchOptimal,     PruneMethod::kSketchUniform,
      PruneMethod::kTopkSynflow,       PruneMethod::kRandomizedSynflow,
      PruneMethod::kRandomizedSnipSparse,
  };
  return methods;
}

std::optional<PruneMethod> parse_prune_method(std::string_view label) {
  for (PruneMethod m : all_prune_methods()) {
    if (to_string(m) == label) return m;
  }
  return std::nullopt;
}

PipelineResult run_prune_pipeline(const PruneRunConfig& config) {
  if (config.d < 1 || config.n < 1) throw DimensionError("pipeline needs d, n >= 1");
  if (config.s < 1) throw InvalidDensityError("pipeline needs s >= 1");
  if (config.noise_std < 0.0) throw InvalidArgumentError("noise_std must be >= 0");
  const Index d = config.d;

  RngStream train_rng(config.seed, kStreamTrainX);
  RngStream init_rng(config.seed, kStreamInit);
  RngStream noise_rng(config.seed, kStreamNoise);
  RngStream mask_rng(config.seed, kStreamMask);
  RngStream test_rng(config.seed, kStreamTestX);
  RngStream sparse_rng(config.seed, kStreamSparseX);

  const DataMatrix x = gen_normal_X(d, config.n, train_rng);
  const WeightVector w0(gen_normal_vector(d, 1.0 / static_cast<double>(d), init_rng));
  const SyntheticDataset data = make_synthetic_dataset(x, w0, config.noise_std, noise_rng);

  const Index kept = std::min(config.s, d);
  auto synflow = [&] { return synflow_scores(row_norms(x), w0); };
  std::optional<Mask> mask;
  switch (config.method) {
    case PruneMethod::kSketchOptimal:
      mask = sample_sketch_mask(optimal_probabilities(x, w0), config.s, mask_rng);
      break;
    case PruneMethod::kSketchUniform:
      mask = sample_sketch_mask(uniform_probabilities(d), config.s, mask_rng);
      break;
    case PruneMethod::kTopkSynflow:
      mask = select_topk(synflow(), kept);
      break;
    case PruneMethod::kRandomizedSynflow:
      mask = select_randomized(synflow(), kept, mask_rng);
      break;
    case PruneMethod::kRandomizedSnipSparse: {
      const DataMatrix sparse = gen_sparse_X(d, config.n, sparse_rng);
      const Eigen::VectorXd zero_labels = Eigen::VectorXd::Zero(config.n);
      mask = select_randomized(snip_scores_l1(sparse, zero_labels, w0), kept, mask_rng);
      break;
    }
  }

  const double lr = config.lr > 0.0 ? config.lr : default_learning_rate(x);
  const WeightVector w_star = train_least_squares(data.x, data.y, w0, config.steps, lr);

  const DataMatrix x_test = gen_normal_X(d, config.n, test_rng);
  const double err = approximation_error(x_test, w_star, *mask);

  PipelineResult r;
  r.method = config.method;
  r.seed = config.seed;
  r.d = d;
  r.n = config.n;
  r.s = config.s;
  const bool is_sketch = config.method == PruneMethod::kSketchOptimal ||
                         config.method == PruneMethod::kSketchUniform;
  r.density = static_cast<double>(is_sketch ? config.s : kept) / static_cast<double>(d);
  r.masked_error = err * err;
  r.w0_wstar_distance = (w_star.values() - w0.values()).norm();
  if (config.method == PruneMethod::kSketchOptimal) {
    r.bound = random_data_distance_bound(w0, w_star, config.s);
    r.bound_kind = BoundKind::kUpperBound;
  } else if (config.method == PruneMethod::kSketchUniform) {
    r.bound = uniform_mask_bound(w_star, d, config.s);
    r.bound_kind = BoundKind::kUpperBound;
  } else {
    r.bound = std::numeric_limits<double>::quiet_NaN();
    r.bound_kind = BoundKind::kNone;
  }
  return r;
}

}  // namespace sketchprune
