#pragma once

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace rkevo {

/// Largest tree order the enumerator accepts. T_12 already holds 4766 trees.
inline constexpr int kMaxTreeOrder = 12;

/**
 * Unlabeled rooted tree in canonical form.
 *
 * A tree is stored as the sorted list of its root's subtrees. The canonical
 * encoding is the nested bracket string "[" + children encodings + "]", with
 * children sorted ascending, so the single node is "[]", the order-3 chain is
 * "[[[]]]" and the order-3 bush is "[[][]]". Equality and ordering are defined
 * on the encoding.
 */
class RootedTree {
 public:
  /// The single-node tree.
  RootedTree();

  /// Graft `children` onto a new root. Children are re-sorted into canonical order.
  explicit RootedTree(std::vector<RootedTree> children);

  /// Parse a canonical or non-canonical bracket encoding such as "[[][[]]]".
  /// Throws FormatError on malformed input.
  static RootedTree from_encoding(std::string_view encoding);

  [[nodiscard]] int order() const noexcept { return order_; }
  [[nodiscard]] const std::vector<RootedTree>& children() const noexcept { return children_; }
  [[nodiscard]] const std::string& encoding() const noexcept { return encoding_; }
  [[nodiscard]] bool is_leaf() const noexcept { return children_.empty(); }

  /// Butcher bracket notation with "o" for a node, e.g. "[[o],o]".
  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const RootedTree& lhs, const RootedTree& rhs) noexcept {
    return lhs.encoding_ == rhs.encoding_;
  }
  friend std::strong_ordering operator<=>(const RootedTree& lhs, const RootedTree& rhs) noexcept {
    return lhs.encoding_ <=> rhs.encoding_;
  }

 private:
  std::vector<RootedTree> children_;
  int order_ = 1;
  std::string encoding_;
};

struct TreeInvariants {
  std::uint64_t gamma = 1;  // density
  std::uint64_t alpha = 1;  // number of monotone labelings
  std::uint64_t sigma = 1;  // order of the symmetry group
  int order = 1;
};

struct TreeEntry {
  RootedTree tree;
  TreeInvariants invariants;
};

/// Density: gamma(t) = |t| * prod gamma(child).
[[nodiscard]] std::uint64_t gamma(const RootedTree& tree);

/// Symmetry: sigma(t) = prod over distinct child shapes of sigma(child)^m * m!.
[[nodiscard]] std::uint64_t sigma(const RootedTree& tree);

/// Monotone labelings, by the multinomial recursion
/// alpha(t) = (|t|-1)! / prod |t_i|! * prod alpha(t_i) / prod m_k!.
[[nodiscard]] std::uint64_t alpha(const RootedTree& tree);

[[nodiscard]] TreeInvariants invariants(const RootedTree& tree);

/// n! for 0 <= n <= 20.
[[nodiscard]] std::uint64_t factorial(int n);

/**
 * All canonical trees of order 1..max_order, grouped by order (index p-1),
 * each group sorted by ascending encoding. Throws BoundsError unless
 * 1 <= max_order <= kMaxTreeOrder.
 */
[[nodiscard]] std::vector<std::vector<TreeEntry>> enumerate_trees(int max_order);

/// |T_p| for p = 1..max_order.
[[nodiscard]] std::vector<std::size_t> tree_counts(int max_order);

/// Cumulative counts N_p = |T_1| + ... + |T_p| for p = 1..max_order.
[[nodiscard]] std::vector<std::size_t> cumulative_tree_counts(int max_order);

}  // namespace rkevo
