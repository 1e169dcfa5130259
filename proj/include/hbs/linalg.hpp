#pragma once
//
// Dense building blocks used throughout the library: Gaussian test
// matrices, orthonormal column/null-space bases from unpivoted Householder
// QR, the right pseudoinverse action B * pinv(M) for wide M, and a power
// method estimate of the relative spectral-norm error between two maps.
//

#include <hbs/error.hpp>

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <random>
#include <string>

namespace hbs {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Seed for every random draw in a run. A single seed drives all streams.
struct RngSeed {
  std::uint64_t value = 0;

  friend bool operator==(RngSeed, RngSeed) = default;
};

/// Named random streams derived from one seed.
namespace stream {
inline constexpr std::uint64_t omega = 0;
inline constexpr std::uint64_t psi = 1;
inline constexpr std::uint64_t power = 2;
} // namespace stream

/// Tally of scalar multiply-adds performed after sampling.
struct OpCounter {
  std::uint64_t madds = 0;

  void add(Index a, Index b, Index c) {
    madds += static_cast<std::uint64_t>(a) * static_cast<std::uint64_t>(b) *
             static_cast<std::uint64_t>(c);
  }
};

namespace detail {

inline void count(OpCounter* ops, Index a, Index b, Index c) {
  if (ops != nullptr) ops->add(a, b, c);
}

/// Product with madd accounting; the only gemm path used by the compressor.
template <typename Lhs, typename Rhs>
DenseMatrix mul(const Lhs& a, const Rhs& b, OpCounter* ops) {
  count(ops, a.rows(), a.cols(), b.cols());
  return a * b;
}

inline std::mt19937_64 make_engine(RngSeed seed, std::uint64_t stream_id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed.value),
                    static_cast<std::uint32_t>(seed.value >> 32),
                    static_cast<std::uint32_t>(stream_id),
                    static_cast<std::uint32_t>(stream_id >> 32)};
  return std::mt19937_64(seq);
}

} // namespace detail

/// n x s matrix of independent standard normal draws, filled column-major.
inline DenseMatrix gaussian_matrix(Index n, Index s, RngSeed seed, std::uint64_t stream_id) {
  auto engine = detail::make_engine(seed, stream_id);
  std::normal_distribution<double> normal(0.0, 1.0);
  DenseMatrix g(n, s);
  for (Index j = 0; j < s; ++j)
    for (Index i = 0; i < n; ++i) g(i, j) = normal(engine);
  return g;
}

/// First k columns of the Q factor of an unpivoted QR of b.
///
/// When b has rank at most k and its leading columns are in general
/// position (true for products with Gaussian matrices) the result is an
/// orthonormal basis for range(b).
inline DenseMatrix col(const DenseMatrix& b, Index k, OpCounter* ops = nullptr) {
  if (k < 0 || k > std::min(b.rows(), b.cols()))
    throw DimensionError("col: requested " + std::to_string(k) + " columns from a " +
                         std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + " matrix");
  const Index m = b.rows();
  const Index n = b.cols();
  Eigen::HouseholderQR<DenseMatrix> qr(b);
  detail::count(ops, m, n, std::min(m, n));
  detail::count(ops, 2 * m, std::min(m, n), k);
  return qr.householderQ() * DenseMatrix::Identity(m, k);
}

/// k orthonormal vectors in the null space of b: the trailing k columns of
/// the full Q factor of a QR of b^T.
inline DenseMatrix nullspace(const DenseMatrix& b, Index k, OpCounter* ops = nullptr) {
  const Index rows = b.rows();
  const Index n = b.cols();
  if (k < 0 || n - rows < k)
    throw DimensionError("nullspace: a " + std::to_string(rows) + "x" + std::to_string(n) +
                         " matrix has guaranteed nullity " + std::to_string(n - rows) +
                         ", requested " + std::to_string(k));
  Eigen::HouseholderQR<DenseMatrix> qr(b.transpose());
  detail::count(ops, n, rows, std::min(n, rows));
  detail::count(ops, 2 * n, std::min(n, rows), k);
  DenseMatrix tail = DenseMatrix::Zero(n, k);
  tail.bottomRows(k).setIdentity();
  return qr.householderQ() * tail;
}

/// Relative threshold on pivots below which a wide probe matrix is treated
/// as rank deficient.
inline constexpr double default_ill_conditioning_tol = 1e-10;

/// X = b * pinv(m) for a wide m with full row rank, i.e. the minimum-norm
/// least-squares solution of X * m = b.
///
/// Solved as m^T X^T = b^T through a column-pivoted QR of m^T. Throws
/// IllConditionedError when a pivot falls below tol times the largest one.
inline DenseMatrix lstsq_right(const DenseMatrix& b, const DenseMatrix& m,
                               double tol = default_ill_conditioning_tol,
                               OpCounter* ops = nullptr) {
  if (b.cols() != m.cols())
    throw DimensionError("lstsq_right: b has " + std::to_string(b.cols()) +
                         " columns, m has " + std::to_string(m.cols()));
  if (m.rows() > m.cols())
    throw DimensionError("lstsq_right: m must be wide, got " + std::to_string(m.rows()) + "x" +
                         std::to_string(m.cols()));
  const Index p = m.rows();
  const Index s = m.cols();
  if (p == 0) return DenseMatrix::Zero(b.rows(), 0);

  Eigen::ColPivHouseholderQR<DenseMatrix> qr(m.transpose());
  qr.setThreshold(tol);
  detail::count(ops, s, p, p);
  if (qr.rank() < p) {
    throw IllConditionedError("probe matrix of size " + std::to_string(p) + "x" +
                              std::to_string(s) + " has numerical rank " +
                              std::to_string(qr.rank()) +
                              "; increase the number of samples");
  }
  detail::count(ops, 2 * s, p, b.rows());
  detail::count(ops, p, p, b.rows());
  return qr.solve(b.transpose()).transpose();
}

/// Action of a linear map on one vector.
using LinearMap = std::function<Vector(const Vector&)>;

/// Power iteration on op^T op; returns ||op x|| for the final unit iterate x,
/// which never exceeds the spectral norm of op.
inline double spectral_norm_estimate(const LinearMap& op, const LinearMap& op_t,
                                     const Vector& start, int iters) {
  Vector x = start;
  double estimate = 0.0;
  for (int it = 0; it < iters; ++it) {
    const Vector y = op(x);
    estimate = y.norm();
    if (estimate == 0.0) return 0.0;
    const Vector z = op_t(y);
    const double zn = z.norm();
    if (zn == 0.0) break;
    x = z / zn;
  }
  return estimate;
}

/// Estimate of ||E|| / ||A|| with both norms from `iters` power iterations
/// started at the same random unit vector.
inline double power_method_relnorm(const LinearMap& op_e, const LinearMap& op_et,
                                   const LinearMap& op_a, const LinearMap& op_at, Index n,
                                   int iters = 20, RngSeed seed = {}) {
  if (iters < 1) throw DimensionError("power_method_relnorm: iters must be positive");
  Vector start;
  for (std::uint64_t attempt = 0;; ++attempt) {
    start = gaussian_matrix(n, 1, seed, stream::power + 16 * attempt).col(0);
    if (start.norm() > 0.0) break;
  }
  start.normalize();
  const double num = spectral_norm_estimate(op_e, op_et, start, iters);
  const double den = spectral_norm_estimate(op_a, op_at, start, iters);
  if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return num / den;
}

} // namespace hbs
