#pragma once

#include <hbs/error.hpp>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace hbs {

/// Half-open index interval [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end - begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct Node {
  std::size_t id = 0;
  std::size_t level = 0;
  IndexRange range;
  std::optional<std::size_t> parent;
  std::optional<std::pair<std::size_t, std::size_t>> children;

  bool is_leaf() const noexcept { return !children.has_value(); }
  bool is_root() const noexcept { return !parent.has_value(); }
};

/// Fully populated binary partition of [0, n) into contiguous ranges.
///
/// Nodes are stored in level order: the root has id 0 and the children of
/// node i are 2i+1 (left) and 2i+2 (right). Every leaf sits at depth(); the
/// depth is the smallest L with ceil(n / 2^L) <= leaf_threshold.
class ClusterTree {
public:
  ClusterTree() = default;

  std::size_t n() const noexcept { return n_; }
  std::size_t depth() const noexcept { return depth_; }
  std::size_t leaf_threshold() const noexcept { return leaf_threshold_; }
  std::size_t size() const noexcept { return nodes_.size(); }

  const Node& node(std::size_t id) const { return nodes_.at(id); }
  const Node& root() const { return nodes_.front(); }
  std::span<const Node> nodes() const noexcept { return nodes_; }

  /// Nodes of one level in ascending range order.
  std::span<const Node> level(std::size_t l) const {
    if (l > depth_)
      throw DimensionError("level " + std::to_string(l) + " exceeds tree depth " +
                           std::to_string(depth_));
    const std::size_t first = (std::size_t{1} << l) - 1;
    return std::span<const Node>(nodes_).subspan(first, std::size_t{1} << l);
  }

  std::span<const Node> leaves() const { return level(depth_); }

  std::size_t max_leaf_size() const {
    std::size_t out = 0;
    for (const auto& leaf : leaves()) out = std::max(out, leaf.range.size());
    return out;
  }

  std::size_t min_leaf_size() const {
    std::size_t out = n_;
    for (const auto& leaf : leaves()) out = std::min(out, leaf.range.size());
    return out;
  }

  friend ClusterTree build_tree(std::size_t n, std::size_t leaf_threshold);

private:
  std::size_t n_ = 0;
  std::size_t depth_ = 0;
  std::size_t leaf_threshold_ = 0;
  std::vector<Node> nodes_;
};

/// Smallest depth L >= 0 with ceil(n / 2^L) <= leaf_threshold.
inline std::size_t tree_depth_for(std::size_t n, std::size_t leaf_threshold) {
  std::size_t depth = 0;
  while (((n + (std::size_t{1} << depth) - 1) >> depth) > leaf_threshold) ++depth;
  return depth;
}

/// Splits [0, n) evenly down to a common depth; the left child of every
/// node takes the ceiling half.
inline ClusterTree build_tree(std::size_t n, std::size_t leaf_threshold) {
  if (n < 2) throw DimensionError("build_tree: n must be at least 2");
  if (leaf_threshold < 2) throw DimensionError("build_tree: leaf threshold must be at least 2");
  if (leaf_threshold >= n)
    throw DimensionError("build_tree: tree would have no levels (leaf threshold " +
                         std::to_string(leaf_threshold) + " >= n = " + std::to_string(n) + ")");

  ClusterTree tree;
  tree.n_ = n;
  tree.leaf_threshold_ = leaf_threshold;
  tree.depth_ = tree_depth_for(n, leaf_threshold);

  const std::size_t count = (std::size_t{2} << tree.depth_) - 1;
  tree.nodes_.resize(count);
  tree.nodes_[0] = Node{0, 0, {0, n}, std::nullopt, std::nullopt};
  for (std::size_t id = 0; id < count; ++id) {
    Node& node = tree.nodes_[id];
    if (node.level == tree.depth_) continue;
    const std::size_t left = 2 * id + 1;
    const std::size_t right = left + 1;
    const std::size_t mid = node.range.begin + (node.range.size() + 1) / 2;
    node.children = std::make_pair(left, right);
    tree.nodes_[left] = Node{left, node.level + 1, {node.range.begin, mid}, id, std::nullopt};
    tree.nodes_[right] = Node{right, node.level + 1, {mid, node.range.end}, id, std::nullopt};
  }
  return tree;
}

inline std::span<const Node> nodes_at_level(const ClusterTree& tree, std::size_t level) {
  return tree.level(level);
}

} // namespace hbs
