#include "sketchprune/data.hpp"

#include <cmath>

namespace sketchprune {

namespace {

void require_positive(Index d, Index n) {
  if (d < 1 || n < 1) throw DimensionError("generator needs d >= 1 and n >= 1");
}

}  // namespace

DataMatrix gen_normal_X(Index d, Index n, RngStream& rng) {
  require_positive(d, n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));
  Eigen::MatrixXd x(d, n);
  // Fill row by row so a row's draws are contiguous in the stream.
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < n; ++j) x(i, j) = scale * rng.normal();
  }
  return DataMatrix(std::move(x));
}

Eigen::VectorXd gen_chi_input(Index d, RngStream& rng, Index n) {
  require_positive(d, n);
  Eigen::VectorXd out(d);
  const double inv_n = 1.0 / static_cast<double>(n);
  for (Index i = 0; i < d; ++i) {
    double sum = 0.0;
    for (Index j = 0; j < n; ++j) {
      const double z = rng.normal();
      sum += z * z;
    }
    out[i] = std::sqrt(sum * inv_n);
  }
  return out;
}

DataMatrix gen_sparse_X(Index d, Index n, RngStream& rng) {
  require_positive(d, n);
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(d, n);
  for (Index i = 0; i < d; ++i) {
    const auto j = static_cast<Index>(rng.uniform_index(static_cast<std::uint64_t>(n)));
    double v = 0.0;
    // A zero draw would break the one-nonzero-per-row invariant.
    do {
      v = rng.normal();
    } while (v == 0.0);
    x(i, j) = v;
  }
  return DataMatrix(std::move(x));
}

Eigen::VectorXd gen_normal_vector(Index d, double variance, RngStream& rng) {
  if (d < 1) throw DimensionError("gen_normal_vector needs d >= 1");
  const double scale = std::sqrt(variance);
  Eigen::VectorXd v(d);
  for (Index i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

}  // namespace sketchprune
