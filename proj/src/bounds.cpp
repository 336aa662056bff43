#include "sketchprune/bounds.hpp"

#include "sketchprune/data.hpp"
#include "sketchprune/sketch.hpp"

#include <cmath>
#include <vector>

namespace sketchprune {

namespace {

void require_density(Index s) {
  if (s < 1) throw InvalidDensityError("density s must be >= 1");
}

constexpr Index kMaskBlock = 4096;
constexpr Index kDataBlock = 64;

template <typename TrialFn>
RunningMoments run_blocked(Index trials, Index block_size, RngStream& rng, unsigned threads,
                    TrialFn trial) {
  const std::uint64_t salt = rng.next_u64();
  const auto blocks = static_cast<std::size_t>((trials + block_size - 1) / block_size);
  std::vector<RunningMoments> partial(blocks);
  parallel_for_blocks(blocks, threads, [&](std::size_t b) {
    RngStream local(salt, b);
    const Index begin = static_cast<Index>(b) * block_size;
    const Index end = std::min(trials, begin + block_size);
    RunningMoments m;
    for (Index t = begin; t < end; ++t) m.add(trial(local));
    partial[b] = m;
  });
  RunningMoments total;
  for (const auto& m : partial) total.merge(m);
  return total;
}

}  // namespace

std::string_view to_string(BoundKind kind) {
  switch (kind) {
    case BoundKind::kEquality:
      return "equality";
    case BoundKind::kUpperBound:
      return "upper-bound";
    case BoundKind::kNone:
      return "none";
  }
  return "none";
}

bool BoundReport::holds(double se_multiplier) const {
  // Rounding allowance for zero-variance estimates.
  const double slack =
      se_multiplier * standard_error + 1e-12 * std::abs(closed_form_or_bound);
  switch (kind) {
    case BoundKind::kEquality:
      return std::abs(empirical_error - closed_form_or_bound) <= slack;
    case BoundKind::kUpperBound:
      return empirical_error <= closed_form_or_bound + slack;
    case BoundKind::kNone:
      return true;
  }
  return true;
}

// ---------------------------------------------------------------------------

double expected_sketch_error(const DataMatrix& x, const WeightVector& w,
                             const ProbabilityVector& p, Index s) {
  require_density(s);
  if (x.dims() != w.size() || w.size() != p.size()) {
    throw DimensionError("expected_sketch_error: dimension mismatch");
  }
  const Eigen::VectorXd norms_sq = x.values().rowwise().squaredNorm();
  Eigen::VectorXd on_support = Eigen::VectorXd::Zero(w.size());
  Eigen::VectorXd off_support = Eigen::VectorXd::Zero(w.size());
  double weighted = 0.0;
  for (Index k = 0; k < w.size(); ++k) {
    if (p[k] > 0.0) {
      on_support[k] = w[k];
      weighted += norms_sq[k] * w[k] * w[k] / p[k];
    } else {
      off_support[k] = w[k];
    }
  }
  const double sd = static_cast<double>(s);
  const double variance =
      weighted / sd - (x.values().transpose() * on_support).squaredNorm() / sd;
  const double bias = (x.values().transpose() * off_support).squaredNorm();
  return variance + bias;
}

double optimal_sketch_error(const DataMatrix& x, const WeightVector& w0, Index s) {
  require_density(s);
  if (x.dims() != w0.size()) throw DimensionError("optimal_sketch_error: dimension mismatch");
  const double mass = row_norms(x).dot(w0.values().cwiseAbs());
  if (!(mass > 0.0)) throw DegenerateDistributionError("every ||X_(i)|| |w0_i| is zero");
  const double sd = static_cast<double>(s);
  return mass * mass / sd - features(x, w0).squaredNorm() / sd;
}

TransferError transfer_error_bound(const DataMatrix& x, const DataMatrix& x_tilde,
                                   const WeightVector& w0, const WeightVector& w_star, Index s) {
  require_density(s);
  const Index d = x.dims();
  if (x_tilde.dims() != d || w0.size() != d || w_star.size() != d) {
    throw DimensionError("transfer_error_bound: dimension mismatch");
  }
  const Eigen::VectorXd tilde_mass = row_norms(x_tilde).cwiseProduct(w0.values().cwiseAbs());
  const double total = tilde_mass.sum();
  if (!(total > 0.0)) throw DegenerateDistributionError("every ||X~_(i)|| |w0_i| is zero");
  const Eigen::VectorXd norms_sq = x.values().rowwise().squaredNorm();
  const double sd = static_cast<double>(s);

  double weighted = 0.0;
  for (Index k = 0; k < d; ++k) {
    if (w_star[k] == 0.0) continue;
    if (!(tilde_mass[k] > 0.0)) {
      throw BoundUndefinedError("mask distribution is zero at an index where w* is not");
    }
    weighted += total / tilde_mass[k] * norms_sq[k] * w_star[k] * w_star[k];
  }
  TransferError out;
  out.bound = weighted / sd;
  out.exact = out.bound - features(x, w_star).squaredNorm() / sd;
  return out;
}

double random_data_distance_bound(const WeightVector& w0, const WeightVector& w_star, Index s) {
  require_density(s);
  if (w0.size() != w_star.size()) throw DimensionError("w0 and w* lengths differ");
  const double w0_l1 = w0.values().lpNorm<1>();
  const double w0_inf = w0.values().lpNorm<Eigen::Infinity>();
  if (!(w0_inf > 0.0)) throw BoundUndefinedError("bound needs w0 != 0");
  const Eigen::VectorXd delta = w_star.values() - w0.values();
  const double sd = static_cast<double>(s);
  return w0_l1 * (delta.squaredNorm() / w0_inf + 2.0 * delta.lpNorm<1>() + w0_l1) / sd;
}

double uniform_mask_bound(const WeightVector& w_star, Index d, Index s) {
  require_density(s);
  if (w_star.size() != d) throw DimensionError("uniform_mask_bound: w* length differs from d");
  return static_cast<double>(d) / static_cast<double>(s) * w_star.values().squaredNorm();
}

double random_data_init_bound(const WeightVector& w0, Index s) {
  require_density(s);
  return w0.values().squaredNorm() / static_cast<double>(s);
}

// ---------------------------------------------------------------------------

double enumerate_exact_error(const DataMatrix& x, const WeightVector& w,
                             const ProbabilityVector& p, Index s) {
  require_density(s);
  const Index d = w.size();
  if (x.dims() != d || p.size() != d) {
    throw DimensionError("enumerate_exact_error: dimension mismatch");
  }
  if (std::pow(static_cast<double>(d), static_cast<double>(s)) > kMaxEnumeratedSequences) {
    throw EnumerationInfeasibleError("d^s exceeds the enumeration limit");
  }

  const Eigen::VectorXd full = features(x, w);
  const double sd = static_cast<double>(s);
  // Contribution of one draw of index k to X^T (w ⊙ m).
  std::vector<Eigen::VectorXd> step(static_cast<std::size_t>(d));
  for (Index k = 0; k < d; ++k) {
    step[static_cast<std::size_t>(k)] =
        p[k] > 0.0 ? Eigen::VectorXd(x.row(k).transpose() * (w[k] / (sd * p[k])))
                   : Eigen::VectorXd::Zero(x.examples());
  }

  std::vector<Index> draw(static_cast<std::size_t>(s), 0);
  double expectation = 0.0;
  Eigen::VectorXd masked(x.examples());
  while (true) {
    double weight = 1.0;
    masked.setZero();
    for (Index t = 0; t < s; ++t) {
      const Index k = draw[static_cast<std::size_t>(t)];
      weight *= p[k];
      masked += step[static_cast<std::size_t>(k)];
    }
    if (weight > 0.0) expectation += weight * (full - masked).squaredNorm();

    Index pos = 0;
    while (pos < s && ++draw[static_cast<std::size_t>(pos)] == d) {
      draw[static_cast<std::size_t>(pos)] = 0;
      ++pos;
    }
    if (pos == s) break;
  }
  return expectation;
}

BoundReport mc_error_over_masks(const DataMatrix& x, const WeightVector& w,
                                const ProbabilityVector& p, Index s, Index trials, RngStream& rng,
                                unsigned threads) {
  require_density(s);
  if (trials < 2) throw InvalidArgumentError("mc_error_over_masks needs trials >= 2");
  const CategoricalSampler sampler(p);
  const RunningMoments m = run_blocked(trials, kMaskBlock, rng, threads, [&](RngStream& local) {
    const double e = approximation_error(x, w, sample_sketch_mask(sampler, p, s, local));
    return e * e;
  });
  BoundReport r;
  r.empirical_error = m.mean;
  r.standard_error = m.standard_error();
  r.closed_form_or_bound = expected_sketch_error(x, w, p, s);
  r.kind = BoundKind::kEquality;
  r.trials = trials;
  return r;
}

BoundReport mc_error_over_data(const WeightVector& w0, const WeightVector& w_star, Index s,
                               Index n, Index x_trials, RngStream& rng, MaskSampling sampling,
                               unsigned threads) {
  require_density(s);
  if (x_trials < 2) throw InvalidArgumentError("mc_error_over_data needs x_trials >= 2");
  const Index d = w0.size();
  if (w_star.size() != d) throw DimensionError("w0 and w* lengths differ");
  const ProbabilityVector uniform = uniform_probabilities(d);
  const RunningMoments m = run_blocked(x_trials, kDataBlock, rng, threads, [&](RngStream& local) {
    const DataMatrix x = gen_normal_X(d, n, local);
    if (sampling == MaskSampling::kUniform) return expected_sketch_error(x, w_star, uniform, s);
    return expected_sketch_error(x, w_star, optimal_probabilities(x, w0), s);
  });
  BoundReport r;
  r.empirical_error = m.mean;
  r.standard_error = m.standard_error();
  r.closed_form_or_bound = sampling == MaskSampling::kUniform
                               ? uniform_mask_bound(w_star, d, s)
                               : random_data_distance_bound(w0, w_star, s);
  r.kind = BoundKind::kUpperBound;
  r.trials = x_trials;
  return r;
}

}  // namespace sketchprune
