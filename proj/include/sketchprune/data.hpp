#pragma once

#include "sketchprune/core.hpp"

namespace sketchprune {

// Dimension of the normal vectors behind the default chi-distributed input.
inline constexpr Index kDefaultChiDegrees = 128;

// d x n matrix with i.i.d. N(0, 1/n) entries, so E||X_(k)||^2 = 1.
DataMatrix gen_normal_X(Index d, Index n, RngStream& rng);

// entry_i = sqrt(sum_j z_ij^2 / n), z standard normal: the row-norm law of
// gen_normal_X(d, n).
Eigen::VectorXd gen_chi_input(Index d, RngStream& rng, Index n = kDefaultChiDegrees);

// Each row holds a single N(0, 1) entry in a uniformly chosen column.
DataMatrix gen_sparse_X(Index d, Index n, RngStream& rng);

// Vector of i.i.d. N(0, variance) entries.
Eigen::VectorXd gen_normal_vector(Index d, double variance, RngStream& rng);

}  // namespace sketchprune
