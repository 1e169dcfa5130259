#pragma once
//
// Telescoping HBS factorization
//
//   A = U^(L) ( ... U^(1) D^(0) V^(1)^T + D^(1) ... ) V^(L)^T + D^(L)
//
// where U^(l), V^(l), D^(l) are block diagonal over the nodes of level l.
// The diagonal blocks D_t are discrepancies, D_t = A_tt - U_t U_t^T A_tt V_t V_t^T,
// so they are full matrices and not raw diagonal blocks of A.
//

#include <hbs/cluster_tree.hpp>
#include <hbs/error.hpp>
#include <hbs/linalg.hpp>

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace hbs {

/// Basis and discrepancy blocks for every node of a cluster tree.
///
/// Leaf t: U_t, V_t are |I_t| x r and D_t is |I_t| x |I_t|.
/// Interior non-root t: U_t, V_t are 2r x r and D_t is 2r x 2r.
/// Root: no bases, D is 2r x 2r.
class HbsFactorization {
public:
  HbsFactorization() = default;

  /// Zero factorization with correctly shaped blocks.
  HbsFactorization(ClusterTree tree, Index rank) : tree_(std::move(tree)), rank_(rank) {
    if (rank < 0) throw DimensionError("HbsFactorization: negative rank");
    const std::size_t count = tree_.size();
    u_.resize(count);
    v_.resize(count);
    d_.resize(count);
    for (const auto& node : tree_.nodes()) {
      const Index rows = block_rows(node);
      if (!node.is_root()) {
        u_[node.id] = DenseMatrix::Zero(rows, rank_);
        v_[node.id] = DenseMatrix::Zero(rows, rank_);
      }
      d_[node.id] = DenseMatrix::Zero(rows, rows);
    }
  }

  const ClusterTree& tree() const noexcept { return tree_; }
  Index rank() const noexcept { return rank_; }
  Index n() const noexcept { return static_cast<Index>(tree_.n()); }

  DenseMatrix& u(std::size_t id) { return u_.at(id); }
  DenseMatrix& v(std::size_t id) { return v_.at(id); }
  DenseMatrix& d(std::size_t id) { return d_.at(id); }
  const DenseMatrix& u(std::size_t id) const { return u_.at(id); }
  const DenseMatrix& v(std::size_t id) const { return v_.at(id); }
  const DenseMatrix& d(std::size_t id) const { return d_.at(id); }

  DenseMatrix& root_disc() { return d_.front(); }
  const DenseMatrix& root_disc() const { return d_.front(); }

  /// Row count of the blocks stored at a node: |I_t| at leaves, 2r elsewhere.
  Index block_rows(const Node& node) const {
    return node.is_leaf() ? static_cast<Index>(node.range.size()) : 2 * rank_;
  }

  /// Throws DimensionError if any block has the wrong shape or a non-finite entry.
  void validate() const {
    for (const auto& node : tree_.nodes()) {
      const Index rows = block_rows(node);
      const auto check = [&](const DenseMatrix& m, Index r, Index c, const char* what) {
        if (m.rows() != r || m.cols() != c)
          throw DimensionError(std::string(what) + " block of node " + std::to_string(node.id) +
                               " is " + std::to_string(m.rows()) + "x" +
                               std::to_string(m.cols()) + ", expected " + std::to_string(r) +
                               "x" + std::to_string(c));
        if (!m.allFinite())
          throw DimensionError(std::string(what) + " block of node " + std::to_string(node.id) +
                               " has non-finite entries");
      };
      if (!node.is_root()) {
        check(u_[node.id], rows, rank_, "U");
        check(v_[node.id], rows, rank_, "V");
      }
      check(d_[node.id], rows, rows, "D");
    }
  }

  /// Largest ||B^T B - I||_F over all stored bases.
  double orthonormality_defect() const {
    double worst = 0.0;
    const DenseMatrix eye = DenseMatrix::Identity(rank_, rank_);
    for (const auto& node : tree_.nodes()) {
      if (node.is_root()) continue;
      worst = std::max(worst, (u_[node.id].transpose() * u_[node.id] - eye).norm());
      worst = std::max(worst, (v_[node.id].transpose() * v_[node.id] - eye).norm());
    }
    return worst;
  }

  friend bool operator==(const HbsFactorization& a, const HbsFactorization& b) {
    if (a.tree_.n() != b.tree_.n() || a.tree_.leaf_threshold() != b.tree_.leaf_threshold() ||
        a.rank_ != b.rank_ || a.d_.size() != b.d_.size())
      return false;
    const auto same = [](const DenseMatrix& x, const DenseMatrix& y) {
      return x.rows() == y.rows() && x.cols() == y.cols() && x == y;
    };
    for (std::size_t i = 0; i < a.d_.size(); ++i)
      if (!same(a.u_[i], b.u_[i]) || !same(a.v_[i], b.v_[i]) || !same(a.d_[i], b.d_[i]))
        return false;
    return true;
  }

private:
  ClusterTree tree_;
  Index rank_ = 0;
  std::vector<DenseMatrix> u_;
  std::vector<DenseMatrix> v_;
  std::vector<DenseMatrix> d_;
};

namespace detail {

template <typename T>
DenseMatrix stack(const T& top, const T& bottom) {
  DenseMatrix out(top.rows() + bottom.rows(), top.cols());
  out << top, bottom;
  return out;
}

/// Upward and downward pass over the tree. With transpose set the roles of
/// U and V swap and every D block is transposed, giving A^T q.
template <bool Transpose>
DenseMatrix apply_impl(const HbsFactorization& f, const DenseMatrix& q, OpCounter* ops) {
  if (q.rows() != f.n())
    throw DimensionError("apply: input has " + std::to_string(q.rows()) + " rows, expected " +
                         std::to_string(f.n()));
  const ClusterTree& tree = f.tree();
  const Index r = f.rank();
  const Index c = q.cols();
  const auto in_basis = [&](std::size_t id) -> const DenseMatrix& {
    return Transpose ? f.u(id) : f.v(id);
  };
  const auto out_basis = [&](std::size_t id) -> const DenseMatrix& {
    return Transpose ? f.v(id) : f.u(id);
  };
  const auto disc_times = [&](std::size_t id, const DenseMatrix& x) -> DenseMatrix {
    const DenseMatrix& d = f.d(id);
    count(ops, d.rows(), d.cols(), x.cols());
    if constexpr (Transpose)
      return d.transpose() * x;
    else
      return d * x;
  };

  std::vector<DenseMatrix> qhat(tree.size());
  for (std::size_t l = tree.depth(); l >= 1; --l) {
    for (const auto& node : tree.level(l)) {
      const DenseMatrix& basis = in_basis(node.id);
      if (node.is_leaf()) {
        const auto rows = q.middleRows(static_cast<Index>(node.range.begin),
                                       static_cast<Index>(node.range.size()));
        qhat[node.id] = mul(basis.transpose(), rows, ops);
      } else {
        const auto [a, b] = *node.children;
        qhat[node.id] = mul(basis.transpose(), stack(qhat[a], qhat[b]), ops);
      }
    }
  }

  DenseMatrix out(q.rows(), c);
  std::vector<DenseMatrix> uhat(tree.size());
  for (std::size_t l = 0; l <= tree.depth(); ++l) {
    for (const auto& node : tree.level(l)) {
      if (node.is_leaf()) {
        const Index begin = static_cast<Index>(node.range.begin);
        const Index size = static_cast<Index>(node.range.size());
        out.middleRows(begin, size) = mul(out_basis(node.id), uhat[node.id], ops) +
                                      disc_times(node.id, q.middleRows(begin, size));
        continue;
      }
      const auto [a, b] = *node.children;
      DenseMatrix t = disc_times(node.id, stack(qhat[a], qhat[b]));
      if (!node.is_root()) t += mul(out_basis(node.id), uhat[node.id], ops);
      uhat[a] = t.topRows(r);
      uhat[b] = t.bottomRows(r);
      qhat[a].resize(0, 0);
      qhat[b].resize(0, 0);
    }
  }
  return out;
}

} // namespace detail

/// A q for a block of vectors.
inline DenseMatrix apply_matrix(const HbsFactorization& f, const DenseMatrix& q,
                                OpCounter* ops = nullptr) {
  return detail::apply_impl<false>(f, q, ops);
}

/// A^T q for a block of vectors.
inline DenseMatrix apply_transpose_matrix(const HbsFactorization& f, const DenseMatrix& q,
                                          OpCounter* ops = nullptr) {
  return detail::apply_impl<true>(f, q, ops);
}

inline Vector apply(const HbsFactorization& f, const Vector& q, OpCounter* ops = nullptr) {
  return detail::apply_impl<false>(f, q, ops).col(0);
}

inline Vector apply_transpose(const HbsFactorization& f, const Vector& q,
                              OpCounter* ops = nullptr) {
  return detail::apply_impl<true>(f, q, ops).col(0);
}

inline constexpr std::size_t default_dense_cap = 8192;

/// Expands the telescoping factorization into an explicit N x N matrix.
/// Intended for tests and small problems only.
inline DenseMatrix to_dense(const HbsFactorization& f, std::size_t cap = default_dense_cap) {
  if (f.tree().n() > cap)
    throw ResourceError("to_dense: N = " + std::to_string(f.tree().n()) + " exceeds cap " +
                        std::to_string(cap));
  const ClusterTree& tree = f.tree();
  const Index r = f.rank();

  // core holds the level-l coupling matrix, with one r x r block per node pair.
  DenseMatrix core = f.root_disc();
  for (std::size_t l = 1; l <= tree.depth(); ++l) {
    const auto nodes = tree.level(l);
    const bool leaves = l == tree.depth();
    const auto offset = [&](std::size_t i) -> Index {
      return leaves ? static_cast<Index>(nodes[i].range.begin) : static_cast<Index>(i) * 2 * r;
    };
    const Index dim = leaves ? f.n() : static_cast<Index>(nodes.size()) * 2 * r;
    DenseMatrix next = DenseMatrix::Zero(dim, dim);
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const DenseMatrix& ui = f.u(nodes[i].id);
      const DenseMatrix left = ui * core.middleRows(static_cast<Index>(i) * r, r);
      for (std::size_t j = 0; j < nodes.size(); ++j) {
        const DenseMatrix& vj = f.v(nodes[j].id);
        next.block(offset(i), offset(j), ui.rows(), vj.rows()) =
            left.middleCols(static_cast<Index>(j) * r, r) * vj.transpose();
      }
      const DenseMatrix& di = f.d(nodes[i].id);
      next.block(offset(i), offset(i), di.rows(), di.cols()) += di;
    }
    core = std::move(next);
  }
  return core;
}

struct LevelStorage {
  std::size_t level = 0;
  std::size_t basis_floats = 0;
  std::size_t disc_floats = 0;
};

struct StorageReport {
  std::size_t total_floats = 0;
  double floats_per_dof = 0.0;
  std::vector<LevelStorage> levels;
};

/// Number of stored scalars, in total and per tree level.
inline StorageReport storage(const HbsFactorization& f) {
  StorageReport report;
  const ClusterTree& tree = f.tree();
  report.levels.resize(tree.depth() + 1);
  for (const auto& node : tree.nodes()) {
    LevelStorage& level = report.levels[node.level];
    level.level = node.level;
    if (!node.is_root())
      level.basis_floats += static_cast<std::size_t>(f.u(node.id).size() + f.v(node.id).size());
    level.disc_floats += static_cast<std::size_t>(f.d(node.id).size());
  }
  for (const auto& level : report.levels)
    report.total_floats += level.basis_floats + level.disc_floats;
  report.floats_per_dof =
      static_cast<double>(report.total_floats) / static_cast<double>(tree.n());
  return report;
}

/// Random factorization of exact block rank k on the given tree.
///
/// Bases are orthonormalized Gaussian blocks. Discrepancies are Gaussian
/// blocks with their U_t U_t^T (.) V_t V_t^T component removed, so the
/// result is the canonical factorization of its own dense matrix.
inline HbsFactorization random_hbs(const ClusterTree& tree, Index k, RngSeed seed) {
  if (k < 0 || static_cast<std::size_t>(k) > tree.min_leaf_size())
    throw DimensionError("random_hbs: rank " + std::to_string(k) +
                         " exceeds the smallest leaf size " +
                         std::to_string(tree.min_leaf_size()));
  HbsFactorization f(tree, k);
  for (const auto& node : tree.nodes()) {
    const Index rows = f.block_rows(node);
    const std::uint64_t base = 8 * (static_cast<std::uint64_t>(node.id) + 1);
    DenseMatrix d = gaussian_matrix(rows, rows, seed, base + 2);
    if (!node.is_root()) {
      f.u(node.id) = col(gaussian_matrix(rows, k, seed, base), k);
      f.v(node.id) = col(gaussian_matrix(rows, k, seed, base + 1), k);
      const DenseMatrix& u = f.u(node.id);
      const DenseMatrix& v = f.v(node.id);
      d -= u * (u.transpose() * d * v) * v.transpose();
    }
    f.d(node.id) = std::move(d);
  }
  return f;
}

} // namespace hbs
