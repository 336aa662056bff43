#include "sketchprune/scores.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sketchprune {

namespace {

double sign_or_zero(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

Eigen::VectorXd to_vector(std::initializer_list<double> entries) {
  Eigen::VectorXd v(static_cast<Index>(entries.size()));
  Index i = 0;
  for (double e : entries) v[i++] = e;
  return v;
}

}  // namespace

ScoreVector::ScoreVector(Eigen::VectorXd entries) : entries_(std::move(entries)) {
  if (!entries_.allFinite() || (entries_.array() < 0.0).any()) {
    throw InvalidArgumentError("scores must be finite and nonnegative");
  }
}

ScoreVector::ScoreVector(std::initializer_list<double> entries) : ScoreVector(to_vector(entries)) {}

ScoreVector synflow_scores(const Eigen::VectorXd& input, const WeightVector& w) {
  if (input.size() != w.size()) throw DimensionError("synflow_scores: input and w lengths differ");
  if ((input.array() < 0.0).any()) throw InvalidArgumentError("synflow input must be nonnegative");
  return ScoreVector(input.cwiseProduct(w.values().cwiseAbs()));
}

ScoreVector snip_scores_l1(const DataMatrix& x, const Eigen::VectorXd& y, const WeightVector& w) {
  if (x.dims() != w.size() || x.examples() != y.size()) {
    throw DimensionError("snip_scores_l1: dimension mismatch");
  }
  const Eigen::VectorXd residual = x.values().transpose() * w.values() - y;
  const Eigen::VectorXd signs = residual.unaryExpr(&sign_or_zero);
  const Eigen::VectorXd correlation = x.values() * signs;
  const double n = static_cast<double>(x.examples());
  return ScoreVector(w.values().cwiseAbs().cwiseProduct(correlation.cwiseAbs()) / n);
}

ScoreVector magnitude_scores(const WeightVector& w) { return ScoreVector(w.values().cwiseAbs()); }

ProbabilityVector scores_to_probabilities(const ScoreVector& scores) {
  const double total = scores.values().sum();
  if (!(total > 0.0)) throw DegenerateDistributionError("all scores are zero");
  return ProbabilityVector(scores.values() / total);
}

Mask select_topk(const ScoreVector& scores, Index s) {
  const Index d = scores.size();
  if (s > d) throw InvalidDensityError("select_topk: s exceeds the number of weights");
  if (s < 0) throw InvalidDensityError("select_topk: negative s");
  std::vector<Index> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return scores[a] > scores[b]; });
  Eigen::VectorXd m = Eigen::VectorXd::Zero(d);
  for (Index k = 0; k < s; ++k) m[order[static_cast<std::size_t>(k)]] = 1.0;
  return Mask::binary(std::move(m));
}

Mask select_randomized(const ScoreVector& scores, Index s, RngStream& rng) {
  const Index d = scores.size();
  if (s < 0) throw InvalidDensityError("select_randomized: negative s");
  if (s > scores.positive_count()) {
    throw DegenerateDistributionError("select_randomized: fewer positive scores than s");
  }
  // O(s d); fine for the layer sizes used here.
  std::vector<double> remaining(scores.values().begin(), scores.values().end());
  double total = std::accumulate(remaining.begin(), remaining.end(), 0.0);
  Eigen::VectorXd m = Eigen::VectorXd::Zero(d);
  for (Index t = 0; t < s; ++t) {
    const double target = rng.uniform() * total;
    double running = 0.0;
    Index chosen = -1;
    Index last_positive = -1;
    for (Index i = 0; i < d; ++i) {
      const double wi = remaining[static_cast<std::size_t>(i)];
      if (wi <= 0.0) continue;
      last_positive = i;
      running += wi;
      if (target <= running) {
        chosen = i;
        break;
      }
    }
    if (chosen < 0) chosen = last_positive;
    m[chosen] = 1.0;
    remaining[static_cast<std::size_t>(chosen)] = 0.0;
    // Recompute instead of subtracting so rounding cannot accumulate.
    total = std::accumulate(remaining.begin(), remaining.end(), 0.0);
  }
  return Mask::binary(std::move(m));
}

std::vector<Index> layerwise_survivor_counts(const std::vector<ScoreVector>& layer_scores,
                                             double global_density) {
  if (layer_scores.empty()) throw InvalidArgumentError("no layers given");
  if (!(global_density > 0.0 && global_density <= 1.0)) {
    throw InvalidDensityError("global density must lie in (0, 1]");
  }
  struct Entry {
    double score;
    std::size_t layer;
    Index index;
  };
  std::vector<Entry> all;
  for (std::size_t l = 0; l < layer_scores.size(); ++l) {
    if (layer_scores[l].size() < 1) throw DimensionError("empty layer");
    for (Index i = 0; i < layer_scores[l].size(); ++i) {
      all.push_back({layer_scores[l][i], l, i});
    }
  }
  const double total = static_cast<double>(all.size());
  if (global_density * total < 1.0) {
    throw InvalidDensityError("density keeps fewer than one weight");
  }
  const auto keep = static_cast<std::size_t>(std::llround(global_density * total));
  // Entries are generated in (layer, index) order, so a stable sort on score
  // alone admits ties in that order.
  std::stable_sort(all.begin(), all.end(),
                   [](const Entry& a, const Entry& b) { return a.score > b.score; });
  std::vector<Index> counts(layer_scores.size(), 0);
  for (std::size_t k = 0; k < keep && k < all.size(); ++k) ++counts[all[k].layer];
  return counts;
}

std::vector<Mask> layerwise_randomized_selection(const std::vector<ScoreVector>& layer_scores,
                                                 double global_density, RngStream& rng) {
  const std::vector<Index> counts = layerwise_survivor_counts(layer_scores, global_density);
  std::vector<Mask> masks;
  masks.reserve(layer_scores.size());
  for (std::size_t l = 0; l < layer_scores.size(); ++l) {
    if (counts[l] == 0) {
      masks.push_back(Mask::zeros(layer_scores[l].size()));
    } else {
      masks.push_back(select_randomized(layer_scores[l], counts[l], rng));
    }
  }
  return masks;
}

}  // namespace sketchprune
