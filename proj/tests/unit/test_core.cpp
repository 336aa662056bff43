#include "sketchprune/core.hpp"

#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

using namespace sketchprune;

TEST(DataMatrix, RejectsEmptyAndNonFinite) {
  EXPECT_THROW(DataMatrix(Eigen::MatrixXd(0, 3)), DimensionError);
  EXPECT_THROW(DataMatrix(Eigen::MatrixXd(2, 0)), DimensionError);
  Eigen::MatrixXd bad = Eigen::MatrixXd::Zero(2, 2);
  bad(1, 0) = std::nan("");
  EXPECT_THROW(DataMatrix{bad}, InvalidArgumentError);
  bad(1, 0) = INFINITY;
  EXPECT_THROW(DataMatrix{bad}, InvalidArgumentError);
  EXPECT_THROW(DataMatrix::from_rows({{1, 2}, {3}}), DimensionError);
}

TEST(DataMatrix, RowAndColumnAccessors) {
  const DataMatrix x = DataMatrix::from_rows({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(x.dims(), 2);
  EXPECT_EQ(x.examples(), 3);
  EXPECT_EQ(x.row(1)[2], 6.0);
  EXPECT_EQ(x.col(2)[0], 3.0);
  EXPECT_EQ(x(0, 1), 2.0);
}

TEST(WeightVector, RejectsNonFinite) {
  EXPECT_THROW(WeightVector({1.0, NAN}), InvalidArgumentError);
  EXPECT_EQ(WeightVector::zeros(3).values().norm(), 0.0);
}

TEST(ProbabilityVector, Validation) {
  EXPECT_THROW(ProbabilityVector({0.5, -0.1, 0.6}), InvalidArgumentError);
  EXPECT_THROW(ProbabilityVector({0.0, 0.0}), DegenerateDistributionError);
  EXPECT_THROW(ProbabilityVector({0.5, 0.6}), InvalidArgumentError);
  EXPECT_THROW(ProbabilityVector(Eigen::VectorXd(0)), DimensionError);
  const ProbabilityVector ok({0.25, 0.25, 0.5});
  EXPECT_EQ(ok.support_size(), 3);
}

TEST(ProbabilityVector, RenormalizesSmallDrift) {
  const ProbabilityVector p({0.5 + 4e-10, 0.5});
  EXPECT_NEAR(p.values().sum(), 1.0, 1e-12);
  EXPECT_GT(p[0], p[1]);
}

TEST(Mask, FractionalBudget) {
  EXPECT_THROW(Mask::fractional(Eigen::Vector3d(1, 1, 1), 2), InvalidArgumentError);
  EXPECT_THROW(Mask::fractional(Eigen::Vector3d(1, 0, 0), 0), InvalidDensityError);
  EXPECT_THROW(Mask::fractional(Eigen::Vector3d(-1, 0, 0), 1), InvalidArgumentError);
  const Mask m = Mask::fractional(Eigen::Vector3d(2, 0, 0), 1);
  EXPECT_EQ(m.kind(), MaskKind::kSketchFractional);
  EXPECT_EQ(m.budget(), 1);
  EXPECT_EQ(m.nonzeros(), 1);
}

TEST(Mask, BinaryEntries) {
  EXPECT_THROW(Mask::binary(Eigen::Vector2d(0.5, 1)), InvalidArgumentError);
  const Mask m = Mask::binary(Eigen::Vector3d(1, 0, 1));
  EXPECT_EQ(m.kind(), MaskKind::kBinary);
  EXPECT_EQ(m.budget(), 2);
  EXPECT_EQ(Mask::all_ones(4).nonzeros(), 4);
  EXPECT_EQ(Mask::zeros(4).nonzeros(), 0);
}

TEST(RowNorms, Examples) {
  const Eigen::VectorXd a = row_norms(DataMatrix::from_rows({{3, 0}, {0, 4}}));
  EXPECT_EQ(a[0], 3.0);
  EXPECT_EQ(a[1], 4.0);
  const Eigen::VectorXd z = row_norms(DataMatrix::from_rows({{0, 0}, {0, 0}}));
  EXPECT_EQ(z.norm(), 0.0);
  const Eigen::VectorXd b = row_norms(DataMatrix::from_rows({{1, 1}, {2, 2}}));
  EXPECT_DOUBLE_EQ(b[0], std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(b[1], 2.0 * std::sqrt(2.0));
}

TEST(RowNorms, MatchesNaiveLoop) {
  RngStream rng(5, 0);
  Eigen::MatrixXd m(7, 5);
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j) m(i, j) = rng.normal();
  const Eigen::VectorXd norms = row_norms(DataMatrix(m));
  for (Index i = 0; i < m.rows(); ++i) {
    double sq = 0.0;
    for (Index j = 0; j < m.cols(); ++j) sq += m(i, j) * m(i, j);
    EXPECT_NEAR(norms[i] * norms[i], sq, 1e-12 * sq);
  }
}

TEST(ApplyMask, Examples) {
  const WeightVector a = apply_mask(WeightVector{1, 2}, Mask::binary(Eigen::Vector2d(0, 1)));
  EXPECT_EQ(a[0], 0.0);
  EXPECT_EQ(a[1], 2.0);
  const WeightVector b =
      apply_mask(WeightVector{1, 1}, Mask::fractional(Eigen::Vector2d(2, 0), 1));
  EXPECT_EQ(b[0], 2.0);
  EXPECT_EQ(b[1], 0.0);
  const WeightVector w{0.3, -1.7, 2.5};
  EXPECT_EQ(apply_mask(w, Mask::all_ones(3)).values(), w.values());
  EXPECT_THROW(apply_mask(w, Mask::all_ones(2)), DimensionError);
}

TEST(Features, Examples) {
  const DataMatrix eye = DataMatrix::from_rows({{1, 0}, {0, 1}});
  EXPECT_EQ(features(eye, WeightVector{1, 1}), Eigen::Vector2d(1, 1));
  const DataMatrix x = DataMatrix::from_rows({{3, 0}, {0, 4}});
  EXPECT_EQ(features(x, WeightVector{2, 1}), Eigen::Vector2d(6, 4));
  EXPECT_EQ(features(x, WeightVector::zeros(2)).norm(), 0.0);
  EXPECT_THROW(features(x, WeightVector{1, 2, 3}), DimensionError);
}

TEST(Features, AllOnesMaskIsIdentity) {
  RngStream rng(2, 2);
  Eigen::MatrixXd m(6, 3);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
  Eigen::VectorXd wv(6);
  for (Index i = 0; i < 6; ++i) wv[i] = rng.normal();
  const DataMatrix x(m);
  const WeightVector w(wv);
  EXPECT_EQ(features(x, apply_mask(w, Mask::all_ones(6))), features(x, w));
}

TEST(RngStream, Reproducible) {
  RngStream a(42, 7), b(42, 7);
  for (int i = 0; i < 10000; ++i) ASSERT_EQ(a.next_u64(), b.next_u64());
  RngStream c(42, 7), d(42, 7);
  for (int i = 0; i < 1000; ++i) ASSERT_EQ(c.normal(), d.normal());
}

TEST(RngStream, DistinctStreamsDiffer) {
  RngStream a(42, 7), b(42, 8), c(43, 7);
  EXPECT_NE(a.next_u64(), b.next_u64());
  RngStream a2(42, 7);
  EXPECT_NE(a2.next_u64(), c.next_u64());
  const RngStream base(1, 1);
  RngStream s0 = base.substream(0), s1 = base.substream(1), s0b = base.substream(0);
  const auto v0 = s0.next_u64();
  EXPECT_NE(v0, s1.next_u64());
  EXPECT_EQ(v0, s0b.next_u64());
}

TEST(RngStream, UniformAndNormalMoments) {
  RngStream rng(9, 1);
  const int n = 200000;
  double su = 0, sn = 0, sn2 = 0;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    su += u;
    const double z = rng.normal();
    sn += z;
    sn2 += z * z;
  }
  EXPECT_NEAR(su / n, 0.5, 4 * std::sqrt(1.0 / 12 / n));
  EXPECT_NEAR(sn / n, 0.0, 4 * std::sqrt(1.0 / n));
  EXPECT_NEAR(sn2 / n, 1.0, 4 * std::sqrt(2.0 / n));
}

TEST(RngStream, UniformIndexRangeAndBalance) {
  RngStream rng(3, 3);
  std::vector<int> counts(5, 0);
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const auto k = rng.uniform_index(5);
    ASSERT_LT(k, 5u);
    ++counts[k];
  }
  for (int c : counts) EXPECT_NEAR(c, n / 5.0, 4 * std::sqrt(n * 0.2 * 0.8));
  EXPECT_THROW(rng.uniform_index(0), InvalidArgumentError);
}

TEST(RunningMoments, MatchesTwoPass) {
  RngStream rng(4, 4);
  std::vector<double> xs;
  for (int i = 0; i < 1000; ++i) xs.push_back(rng.normal() * 3 + 1);
  RunningMoments all, left, right;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    all.add(xs[i]);
    (i < 377 ? left : right).add(xs[i]);
  }
  left.merge(right);
  double mean = 0;
  for (double x : xs) mean += x;
  mean /= xs.size();
  double ss = 0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  const double se = std::sqrt(ss / (xs.size() - 1) / xs.size());
  EXPECT_NEAR(all.mean, mean, 1e-12);
  EXPECT_NEAR(all.standard_error(), se, 1e-12);
  EXPECT_NEAR(left.mean, mean, 1e-12);
  EXPECT_NEAR(left.standard_error(), se, 1e-12);
  RunningMoments one;
  one.add(2.0);
  EXPECT_EQ(one.standard_error(), 0.0);
}

TEST(ParallelForBlocks, VisitsEveryBlockOnce) {
  for (unsigned threads : {1u, 4u}) {
    std::vector<std::atomic<int>> hits(37);
    parallel_for_blocks(hits.size(), threads, [&](std::size_t b) { ++hits[b]; });
    for (auto& h : hits) EXPECT_EQ(h.load(), 1);
  }
}

TEST(ParallelForBlocks, PropagatesExceptions) {
  EXPECT_THROW(parallel_for_blocks(8, 3,
                                   [](std::size_t b) {
                                     if (b == 5) throw std::runtime_error("boom");
                                   }),
               std::runtime_error);
}
