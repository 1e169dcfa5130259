#pragma once
//
// Black-box HBS compression from randomized samples.
//
// Two batched products Y = A Omega and Z = A^T Psi with N x s Gaussian test
// matrices are the only contact with A. Levels are processed from the leaves
// up. At each node the test matrix restricted to the node is annihilated by
// a null-space basis, which isolates the off-diagonal part of the sample and
// yields U_t and V_t; the discrepancy D_t then follows from least-squares
// solves against the restricted test matrices. Lifting the samples through
// the new bases gives samples of the coarser coupling matrix, and the root
// block is a single least-squares solve.
//

#include <hbs/cluster_tree.hpp>
#include <hbs/error.hpp>
#include <hbs/factorization.hpp>
#include <hbs/linalg.hpp>
#include <hbs/oracle.hpp>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace hbs {

struct CompressionConfig {
  /// Basis columns per node (block rank plus oversampling).
  Index rank = 0;
  /// Upper bound on leaf size.
  std::size_t leaf_threshold = 0;
  /// Columns per test matrix; 0 selects max(rank + largest leaf, 3 * rank).
  Index probes = 0;
  RngSeed seed{};
  double ill_conditioning_tol = default_ill_conditioning_tol;
};

/// Smallest admissible probe count for a tree and rank.
inline Index minimum_probes(const ClusterTree& tree, Index rank) {
  return std::max(rank + static_cast<Index>(tree.max_leaf_size()), 3 * rank);
}

/// Checks the config against the tree it will run on and returns the
/// probe count to use.
inline Index validate_config(const CompressionConfig& config, const ClusterTree& tree) {
  if (config.rank < 1) throw ConfigError("rank must be at least 1");
  if (config.leaf_threshold < static_cast<std::size_t>(config.rank))
    throw ConfigError("leaf threshold " + std::to_string(config.leaf_threshold) +
                      " is smaller than rank " + std::to_string(config.rank));
  if (tree.min_leaf_size() < static_cast<std::size_t>(config.rank))
    throw ConfigError("smallest leaf has " + std::to_string(tree.min_leaf_size()) +
                      " indices, fewer than rank " + std::to_string(config.rank));
  if (!(config.ill_conditioning_tol > 0.0))
    throw ConfigError("ill-conditioning tolerance must be positive");
  const Index needed = minimum_probes(tree, config.rank);
  if (config.probes == 0) return needed;
  if (config.probes < needed)
    throw ConfigError("probe count " + std::to_string(config.probes) +
                      " is below max(rank + largest leaf, 3 * rank) = " +
                      std::to_string(needed));
  return config.probes;
}

/// Global test matrices and their images.
struct SampleSet {
  DenseMatrix omega;
  DenseMatrix psi;
  DenseMatrix y;
  DenseMatrix z;
};

/// Test and sample matrices restricted (leaf) or lifted (interior) to one node.
struct NodeSamples {
  DenseMatrix omega;
  DenseMatrix psi;
  DenseMatrix y;
  DenseMatrix z;
};

struct NodeBases {
  DenseMatrix u;
  DenseMatrix v;
  DenseMatrix p; ///< null(Omega_t, r)
  DenseMatrix q; ///< null(Psi_t, r)
};

/// Compressed blocks of a finished node together with the samples it was
/// built from; the parent consumes both.
struct NodeResult {
  DenseMatrix u;
  DenseMatrix v;
  DenseMatrix d;
  NodeSamples samples;
};

/// Draws Omega and Psi from streams 0 and 1 and makes one batched call to
/// each side of the oracle.
inline SampleSet draw_samples(const MatVecOracle& oracle, Index s, RngSeed seed) {
  if (s < 1) throw ConfigError("probe count must be positive");
  SampleSet out;
  out.omega = gaussian_matrix(oracle.n(), s, seed, stream::omega);
  out.psi = gaussian_matrix(oracle.n(), s, seed, stream::psi);
  out.y = oracle.apply(out.omega);
  out.z = oracle.apply_transpose(out.psi);
  return out;
}

inline NodeSamples leaf_node_samples(const SampleSet& samples, const Node& node) {
  const Index begin = static_cast<Index>(node.range.begin);
  const Index size = static_cast<Index>(node.range.size());
  if (begin + size > samples.omega.rows())
    throw DimensionError("node range exceeds sample rows");
  return {samples.omega.middleRows(begin, size), samples.psi.middleRows(begin, size),
          samples.y.middleRows(begin, size), samples.z.middleRows(begin, size)};
}

/// U_t = col(Y_t P_t, r) with P_t = null(Omega_t, r), and likewise V_t from Z_t, Psi_t.
inline NodeBases compress_node_bases(const NodeSamples& ns, Index r, OpCounter* ops = nullptr) {
  const Index rows = ns.omega.rows();
  const Index s = ns.omega.cols();
  if (s - rows < r)
    throw ConfigError("test matrix of size " + std::to_string(rows) + "x" + std::to_string(s) +
                      " has nullity below rank " + std::to_string(r) +
                      "; increase the number of samples");
  NodeBases out;
  out.p = nullspace(ns.omega, r, ops);
  out.u = col(detail::mul(ns.y, out.p, ops), r, ops);
  out.q = nullspace(ns.psi, r, ops);
  out.v = col(detail::mul(ns.z, out.q, ops), r, ops);
  return out;
}

/// D_t = (I - U U^T) Y Omega^+ + U U^T ((I - V V^T) Z Psi^+)^T.
inline DenseMatrix compute_discrepancy(const DenseMatrix& u, const DenseMatrix& v,
                                       const NodeSamples& ns,
                                       double tol = default_ill_conditioning_tol,
                                       OpCounter* ops = nullptr) {
  const Index rows = ns.omega.rows();
  if (ns.y.rows() != rows || ns.psi.rows() != rows || ns.z.rows() != rows ||
      u.rows() != rows || v.rows() != rows)
    throw DimensionError("compute_discrepancy: inconsistent node block shapes");

  DenseMatrix row_part = lstsq_right(ns.y, ns.omega, tol, ops);
  row_part -= detail::mul(u, detail::mul(u.transpose(), row_part, ops), ops);

  DenseMatrix col_part = lstsq_right(ns.z, ns.psi, tol, ops);
  col_part -= detail::mul(v, detail::mul(v.transpose(), col_part, ops), ops);

  row_part += detail::mul(u, detail::mul(u.transpose(), col_part.transpose(), ops), ops);
  return row_part;
}

/// Samples of the next coarser coupling matrix for the parent of alpha and beta.
inline NodeSamples lift_to_parent(const NodeResult& alpha, const NodeResult& beta,
                                  OpCounter* ops = nullptr) {
  const auto lift = [ops](const NodeResult& c) {
    NodeSamples out;
    out.omega = detail::mul(c.v.transpose(), c.samples.omega, ops);
    out.psi = detail::mul(c.u.transpose(), c.samples.psi, ops);
    out.y = detail::mul(c.u.transpose(),
                        c.samples.y - detail::mul(c.d, c.samples.omega, ops), ops);
    out.z = detail::mul(c.v.transpose(),
                        c.samples.z - detail::mul(c.d.transpose(), c.samples.psi, ops), ops);
    return out;
  };
  const NodeSamples a = lift(alpha);
  const NodeSamples b = lift(beta);
  if (a.omega.cols() != b.omega.cols() || a.omega.rows() != b.omega.rows())
    throw DimensionError("lift_to_parent: children disagree in shape");
  return {detail::stack(a.omega, b.omega), detail::stack(a.psi, b.psi),
          detail::stack(a.y, b.y), detail::stack(a.z, b.z)};
}

/// D^(0) = Y_root Omega_root^+.
inline DenseMatrix compute_root(const NodeSamples& ns, double tol = default_ill_conditioning_tol,
                                OpCounter* ops = nullptr) {
  return lstsq_right(ns.y, ns.omega, tol, ops);
}

/// Runs the level sweep on precomputed samples.
inline HbsFactorization compress_samples(const SampleSet& samples, const ClusterTree& tree,
                                         const CompressionConfig& config,
                                         OpCounter* ops = nullptr) {
  const Index s = validate_config(config, tree);
  if (samples.omega.cols() != s || samples.omega.rows() != static_cast<Index>(tree.n()))
    throw DimensionError("sample set does not match tree size and probe count");
  const Index r = config.rank;
  const double tol = config.ill_conditioning_tol;

  HbsFactorization f(tree, r);
  std::vector<std::optional<NodeResult>> results(tree.size());

  const auto with_context = [](const Node& node, auto&& body) {
    try {
      return body();
    } catch (const IllConditionedError& e) {
      throw IllConditionedError("node " + std::to_string(node.id) + " (level " +
                                    std::to_string(node.level) + "): " + e.what(),
                                static_cast<std::ptrdiff_t>(node.id),
                                static_cast<std::ptrdiff_t>(node.level));
    } catch (const ConfigError& e) {
      throw ConfigError("node " + std::to_string(node.id) + " (level " +
                        std::to_string(node.level) + "): " + e.what());
    }
  };

  for (std::size_t l = tree.depth(); l >= 1; --l) {
    for (const auto& node : tree.level(l)) {
      with_context(node, [&] {
        NodeResult result;
        if (node.is_leaf()) {
          result.samples = leaf_node_samples(samples, node);
        } else {
          const auto [a, b] = *node.children;
          result.samples = lift_to_parent(*results[a], *results[b], ops);
          results[a].reset();
          results[b].reset();
        }
        NodeBases bases = compress_node_bases(result.samples, r, ops);
        result.d = compute_discrepancy(bases.u, bases.v, result.samples, tol, ops);
        result.u = std::move(bases.u);
        result.v = std::move(bases.v);
        f.u(node.id) = result.u;
        f.v(node.id) = result.v;
        f.d(node.id) = result.d;
        results[node.id] = std::move(result);
      });
    }
  }

  const Node& root = tree.root();
  with_context(root, [&] {
    const auto [a, b] = *root.children;
    f.root_disc() = compute_root(lift_to_parent(*results[a], *results[b], ops), tol, ops);
  });
  return f;
}

/// Full pipeline: tree, samples, level sweep. Consumes exactly s columns
/// through each side of the oracle.
inline HbsFactorization compress(const MatVecOracle& oracle, const CompressionConfig& config,
                                 OpCounter* ops = nullptr) {
  ClusterTree tree;
  try {
    tree = build_tree(static_cast<std::size_t>(oracle.n()), config.leaf_threshold);
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  }
  const Index s = validate_config(config, tree);
  const SampleSet samples = draw_samples(oracle, s, config.seed);
  return compress_samples(samples, tree, config, ops);
}

} // namespace hbs
