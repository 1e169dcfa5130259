#pragma once
//
// Test operators exposed through MatVecOracle: explicit dense matrices,
// synthetic HBS matrices, Nystrom discretizations of boundary integral
// operators on a smooth closed curve, and the Schur complement of a
// five-point Laplacian across a grid separator.
//

#include <hbs/error.hpp>
#include <hbs/factorization.hpp>
#include <hbs/linalg.hpp>
#include <hbs/oracle.hpp>

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <memory>
#include <numbers>
#include <string>
#include <vector>

namespace hbs {

inline MatVecOracle dense_oracle(DenseMatrix a) {
  if (a.rows() != a.cols()) throw DimensionError("dense_oracle: matrix must be square");
  auto m = std::make_shared<const DenseMatrix>(std::move(a));
  const Index n = m->rows();
  return MatVecOracle(
      n, [m](const DenseMatrix& x) -> DenseMatrix { return *m * x; },
      [m](const DenseMatrix& x) -> DenseMatrix { return m->transpose() * x; });
}

/// Oracle backed by the fast apply of a factorization.
inline MatVecOracle hbs_oracle(HbsFactorization f) {
  auto shared = std::make_shared<const HbsFactorization>(std::move(f));
  return MatVecOracle(
      shared->n(), [shared](const DenseMatrix& x) { return apply_matrix(*shared, x); },
      [shared](const DenseMatrix& x) { return apply_transpose_matrix(*shared, x); });
}

// ---------------------------------------------------------------------------
// Contours
// ---------------------------------------------------------------------------

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Star-shaped curve rho(theta) = radius * (1 + amplitude * cos(lobes * theta)),
/// traversed counter-clockwise. amplitude = 0 gives a circle.
struct Contour {
  double radius = 1.0;
  double amplitude = 0.0;
  int lobes = 0;

  double rho(double t) const { return radius * (1.0 + amplitude * std::cos(lobes * t)); }
  double drho(double t) const { return -radius * amplitude * lobes * std::sin(lobes * t); }
  double ddrho(double t) const {
    return -radius * amplitude * lobes * lobes * std::cos(lobes * t);
  }

  Point2 point(double t) const { return {rho(t) * std::cos(t), rho(t) * std::sin(t)}; }

  Point2 derivative(double t) const {
    const double c = std::cos(t), s = std::sin(t);
    return {drho(t) * c - rho(t) * s, drho(t) * s + rho(t) * c};
  }

  Point2 second_derivative(double t) const {
    const double c = std::cos(t), s = std::sin(t);
    return {ddrho(t) * c - 2.0 * drho(t) * s - rho(t) * c,
            ddrho(t) * s + 2.0 * drho(t) * c - rho(t) * s};
  }

  double speed(double t) const {
    const Point2 d = derivative(t);
    return std::hypot(d.x, d.y);
  }

  /// Outward unit normal.
  Point2 normal(double t) const {
    const Point2 d = derivative(t);
    const double len = std::hypot(d.x, d.y);
    return {d.y / len, -d.x / len};
  }

  double curvature(double t) const {
    const Point2 d = derivative(t);
    const Point2 dd = second_derivative(t);
    const double len = std::hypot(d.x, d.y);
    return (d.x * dd.y - d.y * dd.x) / (len * len * len);
  }
};

inline Contour circle(double radius) { return Contour{radius, 0.0, 0}; }

/// Five-lobed star rho = 1 + 0.3 cos(5 theta).
inline Contour default_contour() { return Contour{1.0, 0.3, 5}; }

/// Equispaced trapezoidal discretization of a contour.
struct Discretization {
  std::vector<double> theta;
  std::vector<Point2> points;
  std::vector<Point2> normals;
  std::vector<double> weights;
};

inline Discretization discretize(const Contour& contour, Index n) {
  Discretization out;
  const double h = 2.0 * std::numbers::pi / static_cast<double>(n);
  for (Index i = 0; i < n; ++i) {
    const double t = h * static_cast<double>(i);
    out.theta.push_back(t);
    out.points.push_back(contour.point(t));
    out.normals.push_back(contour.normal(t));
    out.weights.push_back(h * contour.speed(t));
  }
  return out;
}

namespace detail {

/// (x - y) . n(y) / (4 pi |x - y|^2).
inline double double_layer_kernel(Point2 x, Point2, Point2 y, Point2 ny) {
  const double dx = x.x - y.x, dy = x.y - y.y;
  return (dx * ny.x + dy * ny.y) / (4.0 * std::numbers::pi * (dx * dx + dy * dy));
}

/// n(x) . (x - y) / (2 pi |x - y|^2).
inline double adjoint_double_layer_kernel(Point2 x, Point2 nx, Point2 y, Point2) {
  const double dx = x.x - y.x, dy = x.y - y.y;
  return (dx * nx.x + dy * nx.y) / (2.0 * std::numbers::pi * (dx * dx + dy * dy));
}

/// Limit of the kernel as the source point approaches the target along the
/// curve: symmetric averages at offsets 1e-3 and 5e-4 in the parameter,
/// combined by one Richardson step.
template <typename Kernel>
double diagonal_limit(const Contour& c, double t, Kernel kernel) {
  const Point2 x = c.point(t), nx = c.normal(t);
  const auto at = [&](double ty) { return kernel(x, nx, c.point(ty), c.normal(ty)); };
  const auto g = [&](double e) { return 0.5 * (at(t + e) + at(t - e)); };
  constexpr double eps = 1e-3;
  return (4.0 * g(0.5 * eps) - g(eps)) / 3.0;
}

template <typename Kernel>
DenseMatrix nystrom_matrix(const Contour& contour, Index n, Kernel kernel) {
  const Discretization disc = discretize(contour, n);
  DenseMatrix k(n, n);
  for (Index j = 0; j < n; ++j) {
    const Point2 y = disc.points[j], ny = disc.normals[j];
    const double w = disc.weights[j];
    for (Index i = 0; i < n; ++i) {
      k(i, j) = i == j ? w * diagonal_limit(contour, disc.theta[j], kernel)
                       : w * kernel(disc.points[i], disc.normals[i], y, ny);
    }
  }
  return k;
}

} // namespace detail

/// 1/2 I + K with K the trapezoidal Nystrom discretization of the double
/// layer kernel (x - y) . n(y) / (4 pi |x - y|^2).
inline DenseMatrix double_layer_matrix(Index n, const Contour& contour) {
  if (n < 16) throw DimensionError("double_layer_matrix: need at least 16 nodes");
  DenseMatrix a = detail::nystrom_matrix(contour, n, detail::double_layer_kernel);
  a.diagonal().array() += 0.5;
  return a;
}

/// Nystrom discretization of the adjoint double layer
/// n(x) . (x - y) / (2 pi |x - y|^2), without the identity term.
inline DenseMatrix adjoint_double_layer_matrix(Index n, const Contour& contour) {
  if (n < 16) throw DimensionError("adjoint_double_layer_matrix: need at least 16 nodes");
  return detail::nystrom_matrix(contour, n, detail::adjoint_double_layer_kernel);
}

/// Single layer -1/(2 pi) log|x - y| with trapezoidal weights. The diagonal
/// uses the self-interaction rule w_i * (-1/(2 pi)) * log(w_i / (2e)).
inline DenseMatrix single_layer_matrix(Index n, const Contour& contour) {
  if (n < 16) throw DimensionError("single_layer_matrix: need at least 16 nodes");
  const Discretization disc = discretize(contour, n);
  const double c = -1.0 / (2.0 * std::numbers::pi);
  DenseMatrix s(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i < n; ++i) {
      if (i == j) {
        s(i, i) = disc.weights[i] * c * std::log(disc.weights[i] / (2.0 * std::numbers::e));
      } else {
        const double dx = disc.points[i].x - disc.points[j].x;
        const double dy = disc.points[i].y - disc.points[j].y;
        s(i, j) = disc.weights[j] * c * std::log(std::hypot(dx, dy));
      }
    }
  }
  return s;
}

inline MatVecOracle bie_oracle(Index n, const Contour& contour) {
  return dense_oracle(double_layer_matrix(n, contour));
}

/// Neumann-to-Dirichlet map T = S (1/2 I + D*)^{-1}, applied with one dense
/// LU of 1/2 I + D* computed up front.
inline MatVecOracle ntd_oracle(Index n, const Contour& contour) {
  struct State {
    DenseMatrix s;
    Eigen::PartialPivLU<DenseMatrix> lu;
  };
  auto state = std::make_shared<State>();
  state->s = single_layer_matrix(n, contour);
  DenseMatrix m = adjoint_double_layer_matrix(n, contour);
  m.diagonal().array() += 0.5;
  state->lu.compute(m);
  const double rcond = state->lu.rcond();
  if (!(rcond > 1e-14))
    throw FactorizationError("ntd_oracle: 1/2 I + D* is numerically singular (rcond " +
                             std::to_string(rcond) + ")");
  std::shared_ptr<const State> st = state;
  return MatVecOracle(
      n, [st](const DenseMatrix& x) -> DenseMatrix { return st->s * st->lu.solve(x); },
      [st](const DenseMatrix& x) -> DenseMatrix {
        return st->lu.transpose().solve(DenseMatrix(st->s.transpose() * x));
      });
}

// ---------------------------------------------------------------------------
// Nested dissection Schur complement
// ---------------------------------------------------------------------------

/// width x height grid split by its middle row into two subdomains.
///
/// I3 is the middle row (width nodes); I1 the rows above it and I2 the rows
/// below. Subdomain nodes are numbered column by column, so each subdomain
/// Laplacian has bandwidth equal to its row count.
struct GridProblem {
  Index width = 0;
  Index height = 0;

  Index separator_row() const { return height / 2; }
  Index rows_above() const { return separator_row(); }
  Index rows_below() const { return height - separator_row() - 1; }

  /// Global indices (row * width + col) of I1, I2 or I3, in ascending order.
  std::vector<Index> indices(int part) const {
    std::vector<Index> out;
    const Index sep = separator_row();
    for (Index row = 0; row < height; ++row) {
      const int owner = row < sep ? 1 : row > sep ? 2 : 3;
      if (owner != part) continue;
      for (Index col = 0; col < width; ++col) out.push_back(row * width + col);
    }
    return out;
  }
};

namespace detail {

/// Five-point Laplacian (4 on the diagonal, -1 per neighbor) on a
/// rows x cols grid with Dirichlet closure, nodes numbered col * rows + row.
inline Eigen::SparseMatrix<double> grid_laplacian(Index rows, Index cols) {
  std::vector<Eigen::Triplet<double>> entries;
  const auto id = [rows](Index row, Index col) { return col * rows + row; };
  for (Index col = 0; col < cols; ++col) {
    for (Index row = 0; row < rows; ++row) {
      const Index i = id(row, col);
      entries.emplace_back(i, i, 4.0);
      if (row > 0) entries.emplace_back(i, id(row - 1, col), -1.0);
      if (row + 1 < rows) entries.emplace_back(i, id(row + 1, col), -1.0);
      if (col > 0) entries.emplace_back(i, id(row, col - 1), -1.0);
      if (col + 1 < cols) entries.emplace_back(i, id(row, col + 1), -1.0);
    }
  }
  Eigen::SparseMatrix<double> c(rows * cols, rows * cols);
  c.setFromTriplets(entries.begin(), entries.end());
  return c;
}

} // namespace detail

/// Schur complement C33 - C31 C11^{-1} C13 - C32 C22^{-1} C23 of the
/// five-point Laplacian on a width x height grid, eliminating the two halves
/// on either side of the middle row. Symmetric positive definite.
inline MatVecOracle schur_oracle(Index width, Index height = 51) {
  if (width < 8) throw DimensionError("schur_oracle: width must be at least 8");
  if (height < 3 || height % 2 == 0)
    throw DimensionError("schur_oracle: height must be odd and at least 3");

  struct State {
    GridProblem grid;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> above;
    Eigen::SimplicialLLT<Eigen::SparseMatrix<double>> below;
  };
  auto state = std::make_shared<State>();
  state->grid = GridProblem{width, height};
  const Index up = state->grid.rows_above();
  const Index down = state->grid.rows_below();
  state->above.compute(detail::grid_laplacian(up, width));
  state->below.compute(detail::grid_laplacian(down, width));
  if (state->above.info() != Eigen::Success || state->below.info() != Eigen::Success)
    throw FactorizationError("schur_oracle: subdomain Cholesky failed");

  std::shared_ptr<const State> st = state;
  auto apply = [st, up, width](const DenseMatrix& q) -> DenseMatrix {
    const Index c = q.cols();
    // C33: tridiagonal along the separator row.
    DenseMatrix out = 4.0 * q;
    out.topRows(width - 1) -= q.bottomRows(width - 1);
    out.bottomRows(width - 1) -= q.topRows(width - 1);

    // I1 couples to I3 through its last row, I2 through its first row;
    // both couplings are -1, so C31 X C13 q reduces to row scatter/gather.
    DenseMatrix rhs_up = DenseMatrix::Zero(up * width, c);
    const Index down = st->grid.rows_below();
    DenseMatrix rhs_down = DenseMatrix::Zero(down * width, c);
    for (Index col = 0; col < width; ++col) {
      rhs_up.row(col * up + (up - 1)) = -q.row(col);
      rhs_down.row(col * down) = -q.row(col);
    }
    const DenseMatrix x_up = st->above.solve(rhs_up);
    const DenseMatrix x_down = st->below.solve(rhs_down);
    for (Index col = 0; col < width; ++col) {
      out.row(col) += x_up.row(col * up + (up - 1));
      out.row(col) += x_down.row(col * down);
    }
    return out;
  };
  return MatVecOracle(width, apply, apply);
}

} // namespace hbs
