#pragma once
//
// Binary container for HbsFactorization.
//
//   "HBSF"                      4 bytes
//   version                     u32
//   n, rank, depth, leaf_threshold, node_count      u64 each
//   per node, level order: rows/cols of U, V, D     6 x u64
//   blocks: U, V, D of nodes 1..count-1 in level order, then the root D
//
// All integers and scalars are little endian; scalars are IEEE-754 binary64
// in column-major order.
//

#include <hbs/cluster_tree.hpp>
#include <hbs/error.hpp>
#include <hbs/factorization.hpp>

#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

namespace hbs {

inline constexpr std::array<char, 4> format_magic = {'H', 'B', 'S', 'F'};
inline constexpr std::uint32_t format_version = 1;

namespace detail {

template <typename T>
void put_le(std::ostream& out, T value) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  const U bits = std::bit_cast<U>(value);
  std::array<char, sizeof(U)> bytes{};
  for (std::size_t i = 0; i < sizeof(U); ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(std::istream& in) {
  using U = std::conditional_t<sizeof(T) == 8, std::uint64_t, std::uint32_t>;
  std::array<unsigned char, sizeof(U)> bytes{};
  if (!in.read(reinterpret_cast<char*>(bytes.data()), bytes.size()))
    throw FormatError("truncated factorization file");
  U bits = 0;
  for (std::size_t i = 0; i < sizeof(U); ++i) bits |= static_cast<U>(bytes[i]) << (8 * i);
  return std::bit_cast<T>(bits);
}

inline void put_block(std::ostream& out, const DenseMatrix& m) {
  for (Index i = 0; i < m.size(); ++i) put_le<double>(out, m.data()[i]);
}

inline void get_block(std::istream& in, DenseMatrix& m) {
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = get_le<double>(in);
}

} // namespace detail

inline void write_factorization(std::ostream& out, const HbsFactorization& f) {
  const ClusterTree& tree = f.tree();
  out.write(format_magic.data(), format_magic.size());
  detail::put_le<std::uint32_t>(out, format_version);
  detail::put_le<std::uint64_t>(out, tree.n());
  detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(f.rank()));
  detail::put_le<std::uint64_t>(out, tree.depth());
  detail::put_le<std::uint64_t>(out, tree.leaf_threshold());
  detail::put_le<std::uint64_t>(out, tree.size());
  for (const auto& node : tree.nodes()) {
    for (const DenseMatrix* m : {&f.u(node.id), &f.v(node.id), &f.d(node.id)}) {
      detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m->rows()));
      detail::put_le<std::uint64_t>(out, static_cast<std::uint64_t>(m->cols()));
    }
  }
  for (std::size_t id = 1; id < tree.size(); ++id) {
    detail::put_block(out, f.u(id));
    detail::put_block(out, f.v(id));
    detail::put_block(out, f.d(id));
  }
  detail::put_block(out, f.root_disc());
  if (!out) throw Error("failed writing factorization");
}

inline HbsFactorization read_factorization(std::istream& in) {
  std::array<char, 4> magic{};
  if (!in.read(magic.data(), magic.size())) throw FormatError("truncated factorization file");
  if (magic != format_magic) throw FormatError("bad magic bytes; not an HBSF file");
  const auto version = detail::get_le<std::uint32_t>(in);
  if (version != format_version)
    throw FormatError("unsupported format version " + std::to_string(version));

  const auto n = detail::get_le<std::uint64_t>(in);
  const auto rank = detail::get_le<std::uint64_t>(in);
  const auto depth = detail::get_le<std::uint64_t>(in);
  const auto leaf_threshold = detail::get_le<std::uint64_t>(in);
  const auto count = detail::get_le<std::uint64_t>(in);

  ClusterTree tree;
  try {
    tree = build_tree(n, leaf_threshold);
  } catch (const DimensionError& e) {
    throw FormatError(std::string("invalid tree parameters: ") + e.what());
  }
  if (tree.depth() != depth || tree.size() != count)
    throw FormatError("header tree shape does not match n and leaf threshold");
  if (rank > tree.min_leaf_size()) throw FormatError("rank exceeds smallest leaf size");

  HbsFactorization f(std::move(tree), static_cast<Index>(rank));
  for (const auto& node : f.tree().nodes()) {
    for (const DenseMatrix* m : {&f.u(node.id), &f.v(node.id), &f.d(node.id)}) {
      const auto rows = detail::get_le<std::uint64_t>(in);
      const auto cols = detail::get_le<std::uint64_t>(in);
      if (rows != static_cast<std::uint64_t>(m->rows()) ||
          cols != static_cast<std::uint64_t>(m->cols()))
        throw FormatError("block dimensions of node " + std::to_string(node.id) +
                          " do not match the tree");
    }
  }
  for (std::size_t id = 1; id < f.tree().size(); ++id) {
    detail::get_block(in, f.u(id));
    detail::get_block(in, f.v(id));
    detail::get_block(in, f.d(id));
  }
  detail::get_block(in, f.root_disc());
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after blocks");
  return f;
}

inline void save_factorization(const HbsFactorization& f, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_factorization(out, f);
}

inline HbsFactorization load_factorization(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return read_factorization(in);
}

} // namespace hbs
