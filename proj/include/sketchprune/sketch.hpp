#pragma once

#include "sketchprune/core.hpp"

#include <vector>

namespace sketchprune {

// p_i = ||X_(i)|| |w0_i| / sum_j ||X_(j)|| |w0_j|, the distribution that
// minimizes the expected squared feature error of the sketch mask.
// Throws DegenerateDistributionError when every product is zero.
ProbabilityVector optimal_probabilities(const DataMatrix& x, const WeightVector& w0);

ProbabilityVector uniform_probabilities(Index d);

// Inverse-CDF sampler over a fixed ProbabilityVector. A uniform draw u maps
// to the first positive-probability index whose cumulative mass is >= u, so
// draws landing exactly on a bin boundary go to the lower index.
class CategoricalSampler {
 public:
  explicit CategoricalSampler(const ProbabilityVector& p);

  Index draw(RngStream& rng) const;
  Index size() const { return static_cast<Index>(probabilities_.size()); }

 private:
  std::vector<double> probabilities_;
  std::vector<double> cumulative_;
  Index last_positive_ = 0;
};

// Draws s indices i.i.d. from p (with replacement) and adds 1 / (s p_i) to
// m_i for each draw. E[m_i] = 1 on the support of p.
Mask sample_sketch_mask(const ProbabilityVector& p, Index s, RngStream& rng);
Mask sample_sketch_mask(const CategoricalSampler& sampler, const ProbabilityVector& p, Index s,
                        RngStream& rng);

// ||X^T w - X^T (w ⊙ m)||, unsquared.
double approximation_error(const DataMatrix& x, const WeightVector& w, const Mask& m);

}  // namespace sketchprune
