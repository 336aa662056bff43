#include "sketchprune/core.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace sketchprune {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

Eigen::VectorXd to_vector(std::initializer_list<double> entries) {
  Eigen::VectorXd v(static_cast<Index>(entries.size()));
  Index i = 0;
  for (double e : entries) v[i++] = e;
  return v;
}

}  // namespace

// ---------------------------------------------------------------------------

DataMatrix::DataMatrix(Eigen::MatrixXd entries) : entries_(std::move(entries)) {
  if (entries_.rows() < 1 || entries_.cols() < 1) {
    throw DimensionError("DataMatrix needs at least one row and one column");
  }
  if (!all_finite(entries_)) {
    throw InvalidArgumentError("DataMatrix entries must be finite");
  }
}

DataMatrix DataMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const auto d = static_cast<Index>(rows.size());
  const auto n = d > 0 ? static_cast<Index>(rows.begin()->size()) : 0;
  Eigen::MatrixXd m(d, n);
  Index i = 0;
  for (const auto& r : rows) {
    if (static_cast<Index>(r.size()) != n) throw DimensionError("ragged rows in DataMatrix");
    Index j = 0;
    for (double e : r) m(i, j++) = e;
    ++i;
  }
  return DataMatrix(std::move(m));
}

// ---------------------------------------------------------------------------

WeightVector::WeightVector(Eigen::VectorXd entries) : entries_(std::move(entries)) {
  if (!entries_.allFinite()) throw InvalidArgumentError("WeightVector entries must be finite");
}

WeightVector::WeightVector(std::initializer_list<double> entries)
    : WeightVector(to_vector(entries)) {}

// ---------------------------------------------------------------------------

ProbabilityVector::ProbabilityVector(Eigen::VectorXd entries) : entries_(std::move(entries)) {
  if (entries_.size() < 1) throw DimensionError("ProbabilityVector must be nonempty");
  if (!entries_.allFinite() || (entries_.array() < 0.0).any()) {
    throw InvalidArgumentError("probabilities must be finite and nonnegative");
  }
  const double total = entries_.sum();
  if (total <= 0.0) throw DegenerateDistributionError("probability vector has empty support");
  const double drift = std::abs(total - 1.0);
  if (drift > kRenormalizeTolerance) {
    throw InvalidArgumentError("probabilities sum to " + std::to_string(total) + ", not 1");
  }
  if (drift > 0.0) entries_ /= total;
}

ProbabilityVector::ProbabilityVector(std::initializer_list<double> entries)
    : ProbabilityVector(to_vector(entries)) {}

Index ProbabilityVector::support_size() const { return count_nonzeros(entries_); }

// ---------------------------------------------------------------------------

Mask::Mask(Eigen::VectorXd entries, MaskKind kind, Index budget)
    : entries_(std::move(entries)), kind_(kind), budget_(budget) {}

Mask Mask::fractional(Eigen::VectorXd entries, Index budget) {
  if (budget < 1) throw InvalidDensityError("sketch mask budget must be positive");
  if (!entries.allFinite() || (entries.array() < 0.0).any()) {
    throw InvalidArgumentError("mask entries must be finite and nonnegative");
  }
  if (count_nonzeros(entries) > budget) {
    throw InvalidArgumentError("sketch mask has more nonzeros than its budget");
  }
  return Mask(std::move(entries), MaskKind::kSketchFractional, budget);
}

Mask Mask::binary(Eigen::VectorXd entries) {
  for (Index i = 0; i < entries.size(); ++i) {
    if (entries[i] != 0.0 && entries[i] != 1.0) {
      throw InvalidArgumentError("binary mask entries must be 0 or 1");
    }
  }
  const Index ones = count_nonzeros(entries);
  return Mask(std::move(entries), MaskKind::kBinary, ones);
}

Mask Mask::all_ones(Index d) { return binary(Eigen::VectorXd::Ones(d)); }

Mask Mask::zeros(Index d) { return binary(Eigen::VectorXd::Zero(d)); }

Index Mask::nonzeros() const { return count_nonzeros(entries_); }

// ---------------------------------------------------------------------------

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed),
      stream_id_(stream_id),
      engine_(splitmix64(splitmix64(seed) ^ splitmix64(stream_id ^ 0xD1B54A32D192ED03ULL))) {}

RngStream RngStream::substream(std::uint64_t index) const {
  return RngStream(seed_, splitmix64(stream_id_ + 0x632BE59BD9B4E019ULL) ^ index);
}

double RngStream::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u = 0.0, v = 0.0, r2 = 0.0;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    r2 = u * u + v * v;
  } while (r2 >= 1.0 || r2 == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(r2) / r2);
  spare_normal_ = v * scale;
  has_spare_ = true;
  return u * scale;
}

std::uint64_t RngStream::uniform_index(std::uint64_t n) {
  if (n == 0) throw InvalidArgumentError("uniform_index needs n > 0");
  // Rejection sampling removes modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = 0;
  do {
    x = engine_();
  } while (x >= limit);
  return x % n;
}

// ---------------------------------------------------------------------------

Eigen::VectorXd row_norms(const DataMatrix& x) { return x.values().rowwise().norm(); }

WeightVector apply_mask(const WeightVector& w, const Mask& m) {
  if (w.size() != m.size()) throw DimensionError("apply_mask: weight and mask lengths differ");
  return WeightVector(w.values().cwiseProduct(m.values()));
}

Eigen::VectorXd features(const DataMatrix& x, const WeightVector& w) {
  if (x.dims() != w.size()) throw DimensionError("features: X has d rows but w has other length");
  return x.values().transpose() * w.values();
}

void RunningMoments::add(double x) {
  count += 1.0;
  const double delta = x - mean;
  mean += delta / count;
  m2 += delta * (x - mean);
}

void RunningMoments::merge(const RunningMoments& o) {
  if (o.count == 0.0) return;
  const double total = count + o.count;
  const double delta = o.mean - mean;
  mean += delta * o.count / total;
  m2 += o.m2 + delta * delta * count * o.count / total;
  count = total;
}

double RunningMoments::standard_error() const {
  if (count < 2.0) return 0.0;
  return std::sqrt(m2 / (count - 1.0) / count);
}

Index count_nonzeros(const Eigen::VectorXd& v) {
  return static_cast<Index>((v.array() != 0.0).count());
}

void parallel_for_blocks(std::size_t blocks, unsigned threads,
                         const std::function<void(std::size_t)>& fn) {
  if (threads <= 1 || blocks <= 1) {
    for (std::size_t b = 0; b < blocks; ++b) fn(b);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(threads, blocks));
  pool.reserve(workers);
  for (unsigned t = 0; t < workers; ++t) {
    pool.emplace_back([&] {
      for (std::size_t b = next++; b < blocks; b = next++) {
        try {
          fn(b);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

}  // namespace sketchprune
