#pragma once

#include "sketchprune/core.hpp"

#include <vector>

namespace sketchprune {

// Per-weight saliency, finite and nonnegative.
class ScoreVector {
 public:
  explicit ScoreVector(Eigen::VectorXd entries);
  ScoreVector(std::initializer_list<double> entries);

  Index size() const { return entries_.size(); }
  double operator[](Index i) const { return entries_[i]; }
  const Eigen::VectorXd& values() const { return entries_; }
  Index positive_count() const { return count_nonzeros(entries_); }

 private:
  Eigen::VectorXd entries_;
};

// SynFlow on a linear model: the gradient of R = input^T |w| with respect to
// |w_i|, times |w_i|. input = ones gives the data-free score; input =
// row_norms(X) gives ||X_(i)|| |w_i|.
ScoreVector synflow_scores(const Eigen::VectorXd& input, const WeightVector& w);

// SNIP saliency under l1 loss:
//   g_j = (1/n) |w_j| |sum_i sign(x_i^T w - y_i) x_ij|,  sign(0) = 0.
ScoreVector snip_scores_l1(const DataMatrix& x, const Eigen::VectorXd& y, const WeightVector& w);

ScoreVector magnitude_scores(const WeightVector& w);

ProbabilityVector scores_to_probabilities(const ScoreVector& scores);

// Binary mask keeping the s largest scores; equal scores go to the lower index.
Mask select_topk(const ScoreVector& scores, Index s);

// Binary mask with exactly s ones, drawn sequentially without replacement;
// each step picks a remaining index with probability proportional to its score.
Mask select_randomized(const ScoreVector& scores, Index s, RngStream& rng);

// Per-layer surviving counts under a global hard threshold keeping
// round(density * total) weights. Ties at the threshold are admitted in
// (layer, index) order.
std::vector<Index> layerwise_survivor_counts(const std::vector<ScoreVector>& layer_scores,
                                             double global_density);

// Three-step mask randomization: global threshold, per-layer counts, then
// select_randomized inside each layer. Layers with zero survivors get an
// all-zero mask.
std::vector<Mask> layerwise_randomized_selection(const std::vector<ScoreVector>& layer_scores,
                                                 double global_density, RngStream& rng);

}  // namespace sketchprune
