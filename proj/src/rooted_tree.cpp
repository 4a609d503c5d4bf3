#include "rkevo/rooted_tree.hpp"

#include <algorithm>
#include <string>

#include "rkevo/errors.hpp"

namespace rkevo {

namespace {

// Parses one "[...]" group starting at pos; advances pos past it.
RootedTree parse_node(std::string_view text, std::size_t& pos) {
  if (pos >= text.size() || text[pos] != '[') {
    throw FormatError("tree encoding: expected '[' at position " + std::to_string(pos));
  }
  ++pos;
  std::vector<RootedTree> children;
  while (pos < text.size() && text[pos] == '[') {
    children.push_back(parse_node(text, pos));
  }
  if (pos >= text.size() || text[pos] != ']') {
    throw FormatError("tree encoding: expected ']' at position " + std::to_string(pos));
  }
  ++pos;
  return children.empty() ? RootedTree{} : RootedTree{std::move(children)};
}

// Calls fn(run_begin, run_end) for each run of structurally equal children.
template <typename Fn>
void for_each_child_run(const std::vector<RootedTree>& children, Fn&& fn) {
  auto it = children.begin();
  while (it != children.end()) {
    auto run_end = std::find_if(it, children.end(), [&](const RootedTree& c) { return !(c == *it); });
    fn(it, run_end);
    it = run_end;
  }
}

void append_forests(const std::vector<const TreeEntry*>& pool, int remaining, std::size_t max_index,
                    std::vector<RootedTree>& current, std::vector<std::vector<RootedTree>>& out) {
  if (remaining == 0) {
    out.push_back(current);
    return;
  }
  for (std::size_t idx = max_index + 1; idx-- > 0;) {
    const RootedTree& candidate = pool[idx]->tree;
    if (candidate.order() > remaining) continue;
    current.push_back(candidate);
    append_forests(pool, remaining - candidate.order(), idx, current, out);
    current.pop_back();
  }
}

}  // namespace

RootedTree::RootedTree() : encoding_("[]") {}

RootedTree::RootedTree(std::vector<RootedTree> children) : children_(std::move(children)) {
  std::sort(children_.begin(), children_.end());
  encoding_ = "[";
  for (const auto& child : children_) {
    order_ += child.order_;
    encoding_ += child.encoding_;
  }
  encoding_ += ']';
}

RootedTree RootedTree::from_encoding(std::string_view encoding) {
  std::size_t pos = 0;
  RootedTree tree = parse_node(encoding, pos);
  if (pos != encoding.size()) {
    throw FormatError("tree encoding: trailing characters after position " + std::to_string(pos));
  }
  return tree;
}

std::string RootedTree::to_string() const {
  if (is_leaf()) return "o";
  std::string out = "[";
  for (std::size_t i = 0; i < children_.size(); ++i) {
    if (i != 0) out += ',';
    out += children_[i].to_string();
  }
  out += ']';
  return out;
}

std::uint64_t factorial(int n) {
  if (n < 0 || n > 20) throw BoundsError("factorial: argument must lie in [0, 20]");
  std::uint64_t result = 1;
  for (int k = 2; k <= n; ++k) result *= static_cast<std::uint64_t>(k);
  return result;
}

std::uint64_t gamma(const RootedTree& tree) {
  std::uint64_t g = static_cast<std::uint64_t>(tree.order());
  for (const auto& child : tree.children()) g *= gamma(child);
  return g;
}

std::uint64_t sigma(const RootedTree& tree) {
  std::uint64_t s = 1;
  for_each_child_run(tree.children(), [&](auto begin, auto end) {
    const auto multiplicity = static_cast<int>(end - begin);
    const std::uint64_t child_sigma = sigma(*begin);
    for (int k = 0; k < multiplicity; ++k) s *= child_sigma;
    s *= factorial(multiplicity);
  });
  return s;
}

std::uint64_t alpha(const RootedTree& tree) {
  if (tree.order() > 20) throw BoundsError("alpha: tree order exceeds exact 64-bit range");
  // Multinomial (n-1)! / prod |t_i|! is built incrementally as a product of
  // binomials so intermediate values stay exact.
  std::uint64_t a = 1;
  int placed = 0;
  for (const auto& child : tree.children()) {
    const int k = child.order();
    // a *= C(placed + k, k)
    std::uint64_t binom = 1;
    for (int i = 1; i <= k; ++i) binom = binom * static_cast<std::uint64_t>(placed + i) / static_cast<std::uint64_t>(i);
    a *= binom;
    a *= alpha(child);
    placed += k;
  }
  for_each_child_run(tree.children(), [&](auto begin, auto end) {
    a /= factorial(static_cast<int>(end - begin));
  });
  return a;
}

TreeInvariants invariants(const RootedTree& tree) {
  return TreeInvariants{gamma(tree), alpha(tree), sigma(tree), tree.order()};
}

std::vector<std::vector<TreeEntry>> enumerate_trees(int max_order) {
  if (max_order < 1 || max_order > kMaxTreeOrder) {
    throw BoundsError("enumerate_trees: max_order must lie in [1, " + std::to_string(kMaxTreeOrder) + "]");
  }
  std::vector<std::vector<TreeEntry>> by_order;
  by_order.reserve(static_cast<std::size_t>(max_order));
  by_order.push_back({TreeEntry{RootedTree{}, invariants(RootedTree{})}});

  // Every tree of order n is a root over a multiset of smaller trees whose
  // orders sum to n-1. Multisets are produced as non-increasing index
  // sequences into the pool, so each shape appears exactly once.
  std::vector<const TreeEntry*> pool;
  for (int n = 2; n <= max_order; ++n) {
    for (const auto& entry : by_order.back()) pool.push_back(&entry);

    std::vector<std::vector<RootedTree>> forests;
    std::vector<RootedTree> current;
    append_forests(pool, n - 1, pool.size() - 1, current, forests);

    std::vector<TreeEntry> level;
    level.reserve(forests.size());
    for (auto& forest : forests) {
      RootedTree tree{std::move(forest)};
      TreeInvariants inv = invariants(tree);
      level.push_back(TreeEntry{std::move(tree), inv});
    }
    std::sort(level.begin(), level.end(),
              [](const TreeEntry& a, const TreeEntry& b) { return a.tree < b.tree; });
    // pool holds pointers into by_order; reserve() above keeps them stable.
    by_order.push_back(std::move(level));
  }
  return by_order;
}

std::vector<std::size_t> tree_counts(int max_order) {
  std::vector<std::size_t> counts;
  for (const auto& level : enumerate_trees(max_order)) counts.push_back(level.size());
  return counts;
}

std::vector<std::size_t> cumulative_tree_counts(int max_order) {
  std::vector<std::size_t> counts = tree_counts(max_order);
  for (std::size_t i = 1; i < counts.size(); ++i) counts[i] += counts[i - 1];
  return counts;
}

}  // namespace rkevo
