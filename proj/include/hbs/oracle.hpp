#pragma once

#include <hbs/error.hpp>
#include <hbs/linalg.hpp>

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <utility>

namespace hbs {

/// Black-box access to a square operator: batched products with A and A^T.
///
/// There is deliberately no entry access. Every column pushed through either
/// product is counted; copies share the counters.
class MatVecOracle {
public:
  using BatchMap = std::function<DenseMatrix(const DenseMatrix&)>;

  struct Counts {
    std::uint64_t a = 0;
    std::uint64_t at = 0;
  };

  MatVecOracle(Index n, BatchMap apply_a, BatchMap apply_at)
      : n_(n), apply_a_(std::move(apply_a)), apply_at_(std::move(apply_at)),
        counters_(std::make_shared<Counters>()) {}

  Index n() const noexcept { return n_; }

  DenseMatrix apply(const DenseMatrix& x) const {
    check(x);
    counters_->a.fetch_add(static_cast<std::uint64_t>(x.cols()), std::memory_order_relaxed);
    return apply_a_(x);
  }

  DenseMatrix apply_transpose(const DenseMatrix& x) const {
    check(x);
    counters_->at.fetch_add(static_cast<std::uint64_t>(x.cols()), std::memory_order_relaxed);
    return apply_at_(x);
  }

  Counts counts() const noexcept {
    return {counters_->a.load(std::memory_order_relaxed),
            counters_->at.load(std::memory_order_relaxed)};
  }

  void reset_counts() noexcept {
    counters_->a.store(0, std::memory_order_relaxed);
    counters_->at.store(0, std::memory_order_relaxed);
  }

  /// Single-vector views for the power method.
  LinearMap as_map() const {
    return [this](const Vector& x) -> Vector { return apply(x).col(0); };
  }
  LinearMap as_transpose_map() const {
    return [this](const Vector& x) -> Vector { return apply_transpose(x).col(0); };
  }

private:
  struct Counters {
    std::atomic<std::uint64_t> a{0};
    std::atomic<std::uint64_t> at{0};
  };

  void check(const DenseMatrix& x) const {
    if (x.rows() != n_)
      throw DimensionError("oracle expects " + std::to_string(n_) + " rows, got " +
                           std::to_string(x.rows()));
  }

  Index n_;
  BatchMap apply_a_;
  BatchMap apply_at_;
  std::shared_ptr<Counters> counters_;
};

} // namespace hbs
