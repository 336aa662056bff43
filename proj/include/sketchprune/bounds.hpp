#pragma once

#include "sketchprune/core.hpp"

#include <string_view>

namespace sketchprune {

class BoundUndefinedError : public Error {
 public:
  using Error::Error;
};

class EnumerationInfeasibleError : public Error {
 public:
  using Error::Error;
};

enum class BoundKind { kEquality, kUpperBound, kNone };

std::string_view to_string(BoundKind kind);

// Outcome of checking an estimated mean squared error against a closed form
// (equality) or a bound (upper-bound).
struct BoundReport {
  double empirical_error = 0.0;
  double standard_error = 0.0;
  double closed_form_or_bound = 0.0;
  BoundKind kind = BoundKind::kNone;
  Index trials = 1;

  // equality: |empirical - closed| <= k SE; upper-bound: empirical <= bound + k SE.
  // Both allow a 1e-12 relative rounding margin.
  bool holds(double se_multiplier = 4.0) const;
};

// Which distribution the sketch mask is drawn from.
enum class MaskSampling { kOptimal, kUniform };

// ---------------------------------------------------------------------------
// Closed forms
// ---------------------------------------------------------------------------

// Exact E_m ||X^T w - X^T (w ⊙ m)||^2 for a sketch mask with s draws from any
// p. Indices outside the support of p contribute a deterministic bias; on
// the support the error is the summed per-coordinate variance
//   (1/s) sum_k ||X_(k)||^2 w_k^2 / p_k - (1/s) ||X_S^T w_S||^2.
double expected_sketch_error(const DataMatrix& x, const WeightVector& w,
                             const ProbabilityVector& p, Index s);

// Exact expected squared error when the mask is drawn from the optimal
// distribution of (X, w0) and applied to w0 itself:
//   (1/s) (sum_k ||X_(k)|| |w0_k|)^2 - (1/s) ||X^T w0||^2.
// The second term is the squared norm; enumeration confirms it.
double optimal_sketch_error(const DataMatrix& x, const WeightVector& w0, Index s);

struct TransferError {
  double exact = 0.0;
  double bound = 0.0;
};

// Mask drawn from the optimal distribution of (X_tilde, w0), applied to
// (X, w_star). `exact` is the expectation, `bound` drops the negative term
// and expands p0. Throws BoundUndefinedError if p0 vanishes where w_star
// does not.
TransferError transfer_error_bound(const DataMatrix& x, const DataMatrix& x_tilde,
                                   const WeightVector& w0, const WeightVector& w_star, Index s);

// (1/s) ||w0||_1 (||w*-w0||^2 / ||w0||_inf + 2 ||w*-w0||_1 + ||w0||_1), the
// claimed bound on E_X of the error for X ~ N(0, I/n).
double random_data_distance_bound(const WeightVector& w0, const WeightVector& w_star, Index s);

// (d/s) ||w*||^2, the uniform-mask bound on random data.
double uniform_mask_bound(const WeightVector& w_star, Index d, Index s);

// (1/s) ||w0||^2, the claimed bound on E_X of the error at initialization.
double random_data_init_bound(const WeightVector& w0, Index s);

// ---------------------------------------------------------------------------
// Estimators
// ---------------------------------------------------------------------------

// Largest d^s enumerate_exact_error will walk.
inline constexpr double kMaxEnumeratedSequences = 1e6;

// Exact expectation by walking all d^s ordered draw sequences, each weighted
// by the product of its draw probabilities.
double enumerate_exact_error(const DataMatrix& x, const WeightVector& w,
                             const ProbabilityVector& p, Index s);

// Monte Carlo over masks for fixed X. closed_form_or_bound is
// expected_sketch_error (kind = equality).
BoundReport mc_error_over_masks(const DataMatrix& x, const WeightVector& w,
                                const ProbabilityVector& p, Index s, Index trials, RngStream& rng,
                                unsigned threads = 1);

// Monte Carlo over X ~ N(0, I/n) with the exact inner expectation over masks.
// The mask distribution is computed from (X, w0) (optimal) or is uniform; the
// error is measured on w_star. closed_form_or_bound is
// random_data_distance_bound (optimal) or uniform_mask_bound (uniform).
BoundReport mc_error_over_data(const WeightVector& w0, const WeightVector& w_star, Index s,
                               Index n, Index x_trials, RngStream& rng,
                               MaskSampling sampling = MaskSampling::kOptimal,
                               unsigned threads = 1);

}  // namespace sketchprune
