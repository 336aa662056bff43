#pragma once

#include "sketchprune/bounds.hpp"
#include "sketchprune/core.hpp"
#include "sketchprune/data.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace sketchprune {

class DivergenceError : public Error {
 public:
  using Error::Error;
};

// y = X^T w_true + eps, eps ~ N(0, noise_std^2 I).
struct SyntheticDataset {
  DataMatrix x;
  Eigen::VectorXd y;
  WeightVector w_true;
  double noise_std = 0.0;
};

SyntheticDataset make_synthetic_dataset(DataMatrix x, WeightVector w_true, double noise_std,
                                        RngStream& rng);

// (1/n) ||X^T w - y||^2.
double least_squares_loss(const DataMatrix& x, const Eigen::VectorXd& y, const WeightVector& w);

// Largest eigenvalue of a symmetric PSD matrix by power iteration from the
// normalized all-ones vector (Rayleigh quotient of the final iterate).
double power_iteration_top_eigenvalue(const Eigen::MatrixXd& sym, int iterations = 20);

// 0.9 * 2 / lambda_max of the loss Hessian (2/n) X X^T. lambda_max comes from
// a dense symmetric eigensolver; a short power iteration can underestimate it
// when the top eigenvalues cluster, which lets the loss rise.
double default_learning_rate(const DataMatrix& x);

// Gradient descent on least_squares_loss from w0. steps = 0 returns w0.
// Throws DivergenceError when the loss rises on two consecutive steps.
WeightVector train_least_squares(const DataMatrix& x, const Eigen::VectorXd& y,
                                 const WeightVector& w0, Index steps, double lr);

// Same as train_least_squares but also returns the loss after every step
// (element 0 is the initial loss).
struct TrainingTrace {
  WeightVector weights;
  std::vector<double> losses;
};
TrainingTrace train_least_squares_traced(const DataMatrix& x, const Eigen::VectorXd& y,
                                         const WeightVector& w0, Index steps, double lr);

// ---------------------------------------------------------------------------
// Pipeline
// ---------------------------------------------------------------------------

enum class PruneMethod {
  kSketchOptimal,
  kSketchUniform,
  kTopkSynflow,
  kRandomizedSynflow,
  kRandomizedSnipSparse,
};

std::string_view to_string(PruneMethod method);
std::optional<PruneMethod> parse_prune_method(std::string_view label);
const std::vector<PruneMethod>& all_prune_methods();

struct PruneRunConfig {
  Index d = 64;
  Index n = 32;
  // Draws for sketch methods; kept weights (capped at d) for binary methods.
  Index s = 16;
  PruneMethod method = PruneMethod::kSketchOptimal;
  std::uint64_t seed = 0;
  double noise_std = 0.0;
  Index steps = 100;
  // <= 0 selects default_learning_rate.
  double lr = 0.0;
};

struct PipelineResult {
  PruneMethod method = PruneMethod::kSketchOptimal;
  std::uint64_t seed = 0;
  Index d = 0;
  Index n = 0;
  Index s = 0;
  double density = 0.0;
  // Squared feature error of the masked w* on a fresh test matrix.
  double masked_error = 0.0;
  // Distance bound for the optimal sketch, uniform bound for the uniform
  // sketch, NaN otherwise.
  double bound = 0.0;
  BoundKind bound_kind = BoundKind::kNone;
  double w0_wstar_distance = 0.0;
};

// Draws X and w0 ~ N(0, I/d), labels from the teacher w0 plus noise, finds the
// mask from (X, w0) per method, trains w* by gradient descent, and measures
// the masked error of w* on an independent test matrix. Every random input
// is keyed on the seed alone, so methods run on the same seed are paired.
PipelineResult run_prune_pipeline(const PruneRunConfig& config);

}  // namespace sketchprune
