#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sketchprune {

using Index = Eigen::Index;

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class InvalidArgumentError : public Error {
 public:
  using Error::Error;
};

class DegenerateDistributionError : public Error {
 public:
  using Error::Error;
};

class InvalidDensityError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// DataMatrix: X in R^{d x n}. Rows are feature dimensions, columns examples.
// ---------------------------------------------------------------------------

class DataMatrix {
 public:
  explicit DataMatrix(Eigen::MatrixXd entries);

  // Row-major nested list, one inner list per feature dimension.
  static DataMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  Index dims() const { return entries_.rows(); }
  Index examples() const { return entries_.cols(); }

  // X_(i) in R^n.
  Eigen::MatrixXd::ConstRowXpr row(Index i) const { return entries_.row(i); }
  // X^(j) in R^d.
  Eigen::MatrixXd::ConstColXpr col(Index j) const { return entries_.col(j); }

  double operator()(Index i, Index j) const { return entries_(i, j); }

  const Eigen::MatrixXd& values() const { return entries_; }

 private:
  Eigen::MatrixXd entries_;
};

// ---------------------------------------------------------------------------
// WeightVector: w in R^d (init w0, trained w*, or |w| for SynFlow).
// ---------------------------------------------------------------------------

class WeightVector {
 public:
  explicit WeightVector(Eigen::VectorXd entries);
  WeightVector(std::initializer_list<double> entries);

  static WeightVector zeros(Index d) { return WeightVector(Eigen::VectorXd::Zero(d)); }

  Index size() const { return entries_.size(); }
  double operator[](Index i) const { return entries_[i]; }
  const Eigen::VectorXd& values() const { return entries_; }

 private:
  Eigen::VectorXd entries_;
};

// ---------------------------------------------------------------------------
// ProbabilityVector: nonnegative, sums to one, nonempty support.
//
// Sums within 1e-9 of one are renormalized; anything further off is rejected.
// ---------------------------------------------------------------------------

class ProbabilityVector {
 public:
  static constexpr double kSumTolerance = 1e-12;
  static constexpr double kRenormalizeTolerance = 1e-9;

  explicit ProbabilityVector(Eigen::VectorXd entries);
  ProbabilityVector(std::initializer_list<double> entries);

  Index size() const { return entries_.size(); }
  double operator[](Index i) const { return entries_[i]; }
  const Eigen::VectorXd& values() const { return entries_; }

  Index support_size() const;

 private:
  Eigen::VectorXd entries_;
};

// ---------------------------------------------------------------------------
// Mask
// ---------------------------------------------------------------------------

enum class MaskKind { kSketchFractional, kBinary };

class Mask {
 public:
  // Reweighted mask accumulated from `budget` draws; at most `budget` nonzeros.
  static Mask fractional(Eigen::VectorXd entries, Index budget);
  // 0/1 mask; the budget is the number of ones.
  static Mask binary(Eigen::VectorXd entries);
  static Mask all_ones(Index d);
  static Mask zeros(Index d);

  Index size() const { return entries_.size(); }
  double operator[](Index i) const { return entries_[i]; }
  const Eigen::VectorXd& values() const { return entries_; }
  MaskKind kind() const { return kind_; }
  Index budget() const { return budget_; }
  Index nonzeros() const;

 private:
  Mask(Eigen::VectorXd entries, MaskKind kind, Index budget);

  Eigen::VectorXd entries_;
  MaskKind kind_;
  Index budget_;
};

// ---------------------------------------------------------------------------
// RngStream
//
// A (seed, stream id) pair fully determines the draw sequence. The engine is
// mt19937_64 (bit-exact across standard libraries); uniform and normal
// variates are derived here rather than through <random> distributions,
// whose output is implementation-defined.
// ---------------------------------------------------------------------------

class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // Independent child stream; does not advance this stream.
  RngStream substream(std::uint64_t index) const;

  std::uint64_t next_u64() { return engine_(); }
  // Uniform on [0, 1), 53 bits.
  double uniform();
  // Standard normal via the Marsaglia polar method.
  double normal();
  // Uniform integer on [0, n).
  std::uint64_t uniform_index(std::uint64_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

std::uint64_t splitmix64(std::uint64_t x);

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

// Euclidean norm of each row X_(i).
Eigen::VectorXd row_norms(const DataMatrix& x);

// w ⊙ m.
WeightVector apply_mask(const WeightVector& w, const Mask& m);

// X^T w.
Eigen::VectorXd features(const DataMatrix& x, const WeightVector& w);

// Running mean and second central moment (Welford), mergeable in a fixed
// order so blocked reductions are reproducible.
struct RunningMoments {
  double count = 0.0;
  double mean = 0.0;
  double m2 = 0.0;

  void add(double x);
  void merge(const RunningMoments& other);
  // Sample standard deviation over sqrt(count); 0 for fewer than two samples.
  double standard_error() const;
};

// Counts entries that are exactly nonzero.
Index count_nonzeros(const Eigen::VectorXd& v);

// Runs fn(block) for block in [0, blocks) on up to `threads` workers. Blocks
// are claimed dynamically; callers store per-block results and reduce them
// in block order so the outcome does not depend on the worker count.
void parallel_for_blocks(std::size_t blocks, unsigned threads,
                         const std::function<void(std::size_t)>& fn);

}  // namespace sketchprune
