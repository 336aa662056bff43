#include "sketchprune/sketch.hpp"

#include <algorithm>

namespace sketchprune {

ProbabilityVector optimal_probabilities(const DataMatrix& x, const WeightVector& w0) {
  if (x.dims() != w0.size()) {
    throw DimensionError("optimal_probabilities: X rows and w0 length differ");
  }
  const Eigen::VectorXd weights = row_norms(x).cwiseProduct(w0.values().cwiseAbs());
  const double total = weights.sum();
  if (!(total > 0.0)) {
    throw DegenerateDistributionError("every ||X_(i)|| |w0_i| is zero");
  }
  return ProbabilityVector(weights / total);
}

ProbabilityVector uniform_probabilities(Index d) {
  if (d < 1) throw DimensionError("uniform_probabilities needs d >= 1");
  return ProbabilityVector(Eigen::VectorXd::Constant(d, 1.0 / static_cast<double>(d)));
}

CategoricalSampler::CategoricalSampler(const ProbabilityVector& p)
    : probabilities_(p.values().begin(), p.values().end()) {
  cumulative_.resize(probabilities_.size());
  double running = 0.0;
  for (std::size_t i = 0; i < probabilities_.size(); ++i) {
    running += probabilities_[i];
    cumulative_[i] = running;
    if (probabilities_[i] > 0.0) last_positive_ = static_cast<Index>(i);
  }
}

Index CategoricalSampler::draw(RngStream& rng) const {
  const double u = rng.uniform();
  auto it = std::lower_bound(cumulative_.begin(), cumulative_.end(), u);
  auto i = static_cast<std::size_t>(it - cumulative_.begin());
  // Zero-probability bins share their predecessor's cumulative value.
  while (i < probabilities_.size() && probabilities_[i] == 0.0) ++i;
  if (i >= probabilities_.size()) return last_positive_;
  return static_cast<Index>(i);
}

Mask sample_sketch_mask(const CategoricalSampler& sampler, const ProbabilityVector& p, Index s,
                        RngStream& rng) {
  if (s < 1) throw InvalidDensityError("sketch density s must be >= 1");
  if (sampler.size() != p.size()) throw DimensionError("sampler and p lengths differ");
  Eigen::VectorXd m = Eigen::VectorXd::Zero(p.size());
  const double sd = static_cast<double>(s);
  for (Index t = 0; t < s; ++t) {
    const Index i = sampler.draw(rng);
    m[i] += 1.0 / (sd * p[i]);
  }
  return Mask::fractional(std::move(m), s);
}

Mask sample_sketch_mask(const ProbabilityVector& p, Index s, RngStream& rng) {
  if (s < 1) throw InvalidDensityError("sketch density s must be >= 1");
  return sample_sketch_mask(CategoricalSampler(p), p, s, rng);
}

double approximation_error(const DataMatrix& x, const WeightVector& w, const Mask& m) {
  if (x.dims() != w.size() || w.size() != m.size()) {
    throw DimensionError("approximation_error: dimension mismatch");
  }
  const Eigen::VectorXd residual_weights = w.values().cwiseProduct(
      Eigen::VectorXd::Ones(m.size()) - m.values());
  return (x.values().transpose() * residual_weights).norm();
}

}  // namespace sketchprune
