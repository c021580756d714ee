#pragma once

// Compensated, chunk-deterministic reductions.
//
// Every O(N) reduction is split into chunks whose boundaries depend only on N
// in deterministic mode. Chunk partials are Neumaier sums and are combined
// serially in chunk order, so results do not depend on the worker count.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include <Eigen/Core>

namespace fel {

template <typename Scalar>
class CompensatedSum {
 public:
  void add(Scalar x) noexcept {
    const Scalar s = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - s) + x;
    } else {
      comp_ += (x - s) + sum_;
    }
    sum_ = s;
  }

  CompensatedSum& operator+=(Scalar x) noexcept {
    add(x);
    return *this;
  }

  CompensatedSum& operator+=(const CompensatedSum& other) noexcept {
    add(other.sum_);
    add(other.comp_);
    return *this;
  }

  Scalar value() const noexcept { return sum_ + comp_; }

 private:
  Scalar sum_{0};
  Scalar comp_{0};
};

template <typename Derived>
typename Derived::Scalar compensated_sum(const Eigen::DenseBase<Derived>& values) {
  CompensatedSum<typename Derived::Scalar> acc;
  for (Eigen::Index i = 0; i < values.size(); ++i) acc.add(values(i));
  return acc.value();
}

/// Parallel execution settings shared by the particle kernels.
struct Execution {
  /// Worker threads; values < 1 are treated as 1.
  int workers = 1;
  /// Fixed chunk size (fixed reduction tree) regardless of `workers`.
  bool deterministic = true;

  static constexpr Eigen::Index kDeterministicChunk = 2048;

  Eigen::Index chunk_size(Eigen::Index n) const {
    if (deterministic || workers <= 1) return kDeterministicChunk;
    const Eigen::Index w = workers;
    return std::max<Eigen::Index>(1, (n + w - 1) / w);
  }
};

/// Runs `body(begin, end, partials)` over fixed chunks of [0, n), where
/// `partials` points at `width` accumulators owned by that chunk, then folds
/// the chunk partials in chunk order.
template <typename Scalar, typename Body>
std::vector<Scalar> chunked_reduce(Eigen::Index n, std::size_t width, const Execution& exec,
                                   Body&& body) {
  const Eigen::Index chunk = exec.chunk_size(n);
  const Eigen::Index chunks = n == 0 ? 0 : (n + chunk - 1) / chunk;
  std::vector<CompensatedSum<Scalar>> partials(static_cast<std::size_t>(chunks) * width);
  const int workers = std::max(1, exec.workers);

#pragma omp parallel for num_threads(workers) schedule(static) if (workers > 1 && chunks > 1)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    const Eigen::Index begin = c * chunk;
    const Eigen::Index end = std::min(n, begin + chunk);
    body(begin, end, partials.data() + static_cast<std::size_t>(c) * width);
  }

  std::vector<CompensatedSum<Scalar>> total(width);
  for (Eigen::Index c = 0; c < chunks; ++c) {
    for (std::size_t k = 0; k < width; ++k) {
      total[k] += partials[static_cast<std::size_t>(c) * width + k];
    }
  }
  std::vector<Scalar> out(width);
  for (std::size_t k = 0; k < width; ++k) out[k] = total[k].value();
  return out;
}

/// Element-wise loop over the same chunk layout (no reduction).
template <typename Body>
void chunked_for(Eigen::Index n, const Execution& exec, Body&& body) {
  const Eigen::Index chunk = exec.chunk_size(n);
  const Eigen::Index chunks = n == 0 ? 0 : (n + chunk - 1) / chunk;
  const int workers = std::max(1, exec.workers);

#pragma omp parallel for num_threads(workers) schedule(static) if (workers > 1 && chunks > 1)
  for (Eigen::Index c = 0; c < chunks; ++c) {
    const Eigen::Index begin = c * chunk;
    body(begin, std::min(n, begin + chunk));
  }
}

}  // namespace fel
