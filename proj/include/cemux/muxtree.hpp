#pragma once

// Weight quantization and mux tree construction.
//
// Hardwired trees are built as Knuth-Yao DDG trees: input i gets one leaf at
// depth l for every 1 in the 2^-l place of q_i / 2^h. Every mux at depth d is
// driven by select bit d (the root is depth 0), so a select word of h bits
// walks from the root to a leaf. Driving the selects from the MSBs of one
// counter gives precise sampling.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cemux/rns.hpp"
#include "cemux/sngen.hpp"

namespace cemux {

/// Integer weight numerators over 2^m that sum to exactly 2^m.
struct QuantizedWeights {
  std::vector<std::uint64_t> numerators;
  unsigned m = 0;
  std::vector<int> signs;  ///< +1 or -1; zero weights count as +1
  std::vector<double> original;

  [[nodiscard]] std::size_t size() const noexcept { return numerators.size(); }
  [[nodiscard]] std::uint64_t denominator() const noexcept { return std::uint64_t{1} << m; }
  /// |w~_i| = q_i / 2^m
  [[nodiscard]] double magnitude(std::size_t i) const {
    return std::ldexp(static_cast<double>(numerators[i]), -static_cast<int>(m));
  }
  /// w~_i = s_i q_i / 2^m
  [[nodiscard]] double signed_weight(std::size_t i) const { return signs[i] * magnitude(i); }
};

/// Normalises |w| to numerators over 2^m, then nudges the entries with the
/// largest rounding excess (deficit) down (up) until the total is exact.
/// Rounding is half away from zero; argmax ties go to the lowest index.
inline QuantizedWeights quantize_weights(std::span<const double> w, unsigned m) {
  if (m == 0 || m > 62) throw std::invalid_argument("tree height m must be in [1, 62]");
  if (w.empty()) throw std::invalid_argument("zero weight mass: no weights given");
  const std::size_t count = w.size();
  std::vector<double> a(count);
  double mass = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::isfinite(w[i])) throw std::invalid_argument("weights must be finite");
    a[i] = std::abs(w[i]);
    mass += a[i];
  }
  if (!(mass > 0.0)) throw std::invalid_argument("zero weight mass");

  const double scale = std::ldexp(1.0, static_cast<int>(m));
  std::vector<double> t(count);
  std::vector<std::int64_t> q(count);
  std::int64_t total = 0;
  for (std::size_t i = 0; i < count; ++i) {
    t[i] = scale * a[i] / mass;
    q[i] = static_cast<std::int64_t>(std::round(t[i]));
    total += q[i];
  }
  const auto target = static_cast<std::int64_t>(std::uint64_t{1} << m);
  while (total > target) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < count; ++i) {
      if (static_cast<double>(q[i]) - t[i] > static_cast<double>(q[best]) - t[best]) best = i;
    }
    --q[best];
    --total;
  }
  while (total < target) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < count; ++i) {
      if (t[i] - static_cast<double>(q[i]) > t[best] - static_cast<double>(q[best])) best = i;
    }
    ++q[best];
    ++total;
  }

  QuantizedWeights out;
  out.m = m;
  out.original.assign(w.begin(), w.end());
  out.numerators.resize(count);
  out.signs.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.numerators[i] = static_cast<std::uint64_t>(q[i]);
    out.signs[i] = w[i] < 0.0 ? -1 : 1;
  }
  return out;
}

/// Child pointer of a tree node: a data input or another mux.
struct TreeChild {
  enum class Kind { input, mux } kind = Kind::input;
  std::size_t index = 0;

  friend bool operator==(const TreeChild&, const TreeChild&) = default;
};

struct MuxNode {
  unsigned depth = 0;  ///< root mux has depth 0 (mux level 1)
  TreeChild child0;    ///< passed when the select bit is 0
  TreeChild child1;
};

/// Simplified (redundant-mux-free) hardwired tree of height h.
class HardwiredTree {
 public:
  HardwiredTree() = default;

  [[nodiscard]] unsigned height() const noexcept { return height_; }
  [[nodiscard]] std::size_t input_count() const noexcept { return input_count_; }
  [[nodiscard]] std::size_t mux_count() const noexcept { return nodes_.size(); }
  [[nodiscard]] const std::vector<MuxNode>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] const TreeChild& root() const noexcept { return root_; }

  /// Inputs wired to a mux on level l (leaf depth l), l in [1, h], input order.
  [[nodiscard]] const std::vector<std::size_t>& level(unsigned l) const { return levels_.at(l - 1); }

  /// Select-bit driven walk from the root; bit d (counted from the MSB of an
  /// h-bit word) drives the muxes at depth d.
  [[nodiscard]] std::size_t select_precise(std::uint64_t word) const {
    TreeChild at = root_;
    while (at.kind == TreeChild::Kind::mux) {
      const MuxNode& node = nodes_[at.index];
      const bool bit = ((word >> (height_ - 1 - node.depth)) & 1U) != 0;
      at = bit ? node.child1 : node.child0;
    }
    return at.index;
  }

  /// Walk with one independent select bit per depth.
  [[nodiscard]] std::size_t select_noisy(std::span<const bool> level_bits) const {
    if (level_bits.size() < height_) throw std::invalid_argument("need one select bit per level");
    TreeChild at = root_;
    while (at.kind == TreeChild::Kind::mux) {
      const MuxNode& node = nodes_[at.index];
      at = level_bits[node.depth] ? node.child1 : node.child0;
    }
    return at.index;
  }

  /// Owner of each of the 2^h select words, precomputed by walking the tree.
  [[nodiscard]] std::vector<std::uint32_t> owner_table() const {
    std::vector<std::uint32_t> table(std::size_t{1} << height_);
    for (std::size_t wd = 0; wd < table.size(); ++wd) {
      table[wd] = static_cast<std::uint32_t>(select_precise(wd));
    }
    return table;
  }

  /// Plain-text dump: one "level l: i j k" line per level, then the mux count.
  [[nodiscard]] std::string dump() const {
    std::ostringstream os;
    os << "height " << height_ << "\n";
    for (unsigned l = 1; l <= height_; ++l) {
      os << "level " << l << ":";
      for (auto i : levels_[l - 1]) os << ' ' << i;
      os << "\n";
    }
    os << "muxes " << nodes_.size() << "\n";
    return os.str();
  }

 private:
  friend HardwiredTree build_hardwired_tree(const QuantizedWeights& q, unsigned h);

  unsigned height_ = 0;
  std::size_t input_count_ = 0;
  std::vector<std::vector<std::size_t>> levels_;
  std::vector<MuxNode> nodes_;
  TreeChild root_;
};

/// Builds the DDG tree bottom-up. At each depth the leaves (input order) come
/// first, followed by the muxes promoted from the level below, and the list
/// is paired left to right. Zero-weight inputs get no leaves.
inline HardwiredTree build_hardwired_tree(const QuantizedWeights& q, unsigned h) {
  if (q.m != h) throw std::invalid_argument("quantized weight denominator must be 2^h");
  HardwiredTree tree;
  tree.height_ = h;
  tree.input_count_ = q.size();
  tree.levels_.assign(h, {});

  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q.numerators[i] == q.denominator()) {
      tree.root_ = {TreeChild::Kind::input, i};
      return tree;
    }
  }

  std::vector<TreeChild> promoted;
  for (unsigned depth = h; depth >= 1; --depth) {
    std::vector<TreeChild> row;
    for (std::size_t i = 0; i < q.size(); ++i) {
      if ((q.numerators[i] >> (h - depth)) & 1U) {
        tree.levels_[depth - 1].push_back(i);
        row.push_back({TreeChild::Kind::input, i});
      }
    }
    row.insert(row.end(), promoted.begin(), promoted.end());
    if (row.size() % 2 != 0) throw std::logic_error("DDG parity violated (weights do not sum to 2^h)");
    promoted.clear();
    for (std::size_t k = 0; k < row.size(); k += 2) {
      tree.nodes_.push_back({depth - 1, row[k], row[k + 1]});
      promoted.push_back({TreeChild::Kind::mux, tree.nodes_.size() - 1});
    }
  }
  if (promoted.size() != 1) throw std::logic_error("DDG construction did not end in a single root");
  tree.root_ = promoted.front();
  return tree;
}

/// Total number of 1s in the binary expansions of q_i / 2^m (the 2^0 place
/// included, so a single full-weight input counts one).
inline std::size_t expansion_ones(const QuantizedWeights& q) {
  std::size_t n = 0;
  for (auto v : q.numerators) n += static_cast<std::size_t>(std::popcount(v));
  return n;
}

/// Loose mux-count bound min(M h - 1, 2^h - 1) over the nonzero inputs.
inline std::uint64_t mux_count_bound(std::size_t inputs, unsigned h) {
  const std::uint64_t by_inputs = inputs == 0 ? 0 : inputs * std::uint64_t{h} - 1;
  const std::uint64_t by_height = (std::uint64_t{1} << h) - 1;
  return std::min(by_inputs, by_height);
}

// ---------------------------------------------------------------------------
// Biased-selector tree

struct BiasedNode {
  unsigned depth = 0;
  double probability = 0.0;    ///< exact P(select = 1), i.e. toward child1
  std::uint32_t threshold = 0; ///< select PCC threshold at the select width
  TreeChild child1;            ///< left subtree, taken on select bit 1
  TreeChild child0;            ///< right subtree
};

/// Balanced tree over the nonzero inputs, weights carried by select SNs.
class BiasedSelectorTree {
 public:
  [[nodiscard]] unsigned height() const noexcept { return height_; }
  [[nodiscard]] unsigned select_width() const noexcept { return width_; }
  [[nodiscard]] PccKind select_pcc() const noexcept { return pcc_; }
  [[nodiscard]] RnsKind select_rns() const noexcept { return rns_; }
  [[nodiscard]] std::size_t input_count() const noexcept { return input_count_; }
  [[nodiscard]] std::size_t mux_count() const noexcept { return nodes_.size(); }
  [[nodiscard]] const std::vector<BiasedNode>& nodes() const noexcept { return nodes_; }
  [[nodiscard]] const TreeChild& root() const noexcept { return root_; }

  /// One select word per depth (shared by all nodes at that depth).
  [[nodiscard]] std::size_t select(std::span<const std::uint32_t> level_words) const {
    TreeChild at = root_;
    while (at.kind == TreeChild::Kind::mux) {
      const BiasedNode& node = nodes_[at.index];
      at = pcc_bit(pcc_, level_words[node.depth], node.threshold) ? node.child1 : node.child0;
    }
    return at.index;
  }

  /// Product of exact branch probabilities along the path to each input.
  [[nodiscard]] std::vector<double> ideal_leaf_probabilities() const { return leaf_products(false); }
  /// Same, using the quantized select thresholds (threshold / 2^width).
  [[nodiscard]] std::vector<double> quantized_leaf_probabilities() const { return leaf_products(true); }

 private:
  friend BiasedSelectorTree build_biased_selector_tree(const QuantizedWeights&, PccKind, RnsKind,
                                                       unsigned);

  [[nodiscard]] std::vector<double> leaf_products(bool quantized) const {
    std::vector<double> p(input_count_, 0.0);
    struct Frame {
      TreeChild at;
      double mass;
    };
    std::vector<Frame> stack{{root_, 1.0}};
    while (!stack.empty()) {
      auto [at, mass] = stack.back();
      stack.pop_back();
      if (at.kind == TreeChild::Kind::input) {
        p[at.index] += mass;
        continue;
      }
      const BiasedNode& node = nodes_[at.index];
      const double p1 = quantized ? std::ldexp(static_cast<double>(node.threshold),
                                               -static_cast<int>(width_))
                                  : node.probability;
      stack.push_back({node.child1, mass * p1});
      stack.push_back({node.child0, mass * (1.0 - p1)});
    }
    return p;
  }

  unsigned height_ = 0;
  unsigned width_ = 0;
  PccKind pcc_ = PccKind::wbg;
  RnsKind rns_ = RnsKind::lfsr;
  std::size_t input_count_ = 0;
  std::vector<BiasedNode> nodes_;
  TreeChild root_;
};

/// Splits the nonzero inputs in order: left gets floor(k/2), right the rest.
/// Node probability = left mass / node mass, quantized to the select PCC.
inline BiasedSelectorTree build_biased_selector_tree(const QuantizedWeights& q, PccKind select_pcc,
                                                     RnsKind select_rns, unsigned width) {
  std::vector<std::size_t> live;
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q.numerators[i] > 0) live.push_back(i);
  }
  if (live.empty()) throw std::invalid_argument("biased selector tree needs a nonzero weight");

  BiasedSelectorTree tree;
  tree.width_ = width;
  tree.pcc_ = select_pcc;
  tree.rns_ = select_rns;
  tree.input_count_ = q.size();

  auto mass_of = [&](std::size_t lo, std::size_t hi) {
    std::uint64_t s = 0;
    for (std::size_t k = lo; k < hi; ++k) s += q.numerators[live[k]];
    return s;
  };
  // Recursive build over live[lo, hi).
  auto build = [&](auto&& self, std::size_t lo, std::size_t hi, unsigned depth) -> TreeChild {
    if (hi - lo == 1) return {TreeChild::Kind::input, live[lo]};
    const std::size_t mid = lo + (hi - lo) / 2;
    const std::uint64_t left = mass_of(lo, mid);
    const std::uint64_t total = mass_of(lo, hi);
    BiasedNode node;
    node.depth = depth;
    node.probability = static_cast<double>(left) / static_cast<double>(total);
    const auto b = static_cast<std::uint32_t>(std::round(std::ldexp(node.probability, static_cast<int>(width))));
    node.threshold = pcc_threshold(select_pcc, b, width).value;
    tree.height_ = std::max(tree.height_, depth + 1);
    const std::size_t slot = tree.nodes_.size();
    tree.nodes_.push_back(node);
    const TreeChild l = self(self, lo, mid, depth + 1);
    const TreeChild r = self(self, mid, hi, depth + 1);
    tree.nodes_[slot].child1 = l;
    tree.nodes_[slot].child0 = r;
    return {TreeChild::Kind::mux, slot};
  };
  tree.root_ = build(build, 0, live.size(), 0);
  return tree;
}

/// Number of cycles each input's bit reached the output; sums to N.
using SamplingCounts = std::vector<std::uint64_t>;

/// Structural component counts of an assembled adder.
struct ComponentCounts {
  std::size_t muxes = 0;
  std::size_t comparators = 0;
  std::size_t wbgs = 0;
  std::size_t inverters = 0;     ///< correlation inverters + sign inverters
  std::size_t xnors = 0;
  std::size_t sobol_rns = 0;
  std::size_t counter_rns = 0;   ///< non-reversed counters used as number sources
  std::size_t lfsr_rns = 0;
  std::size_t select_counters = 0;
  std::size_t counter_bits = 0;  ///< select counter bits
  std::size_t output_counter_bits = 0;
  std::size_t parallel_counter_inputs = 0;

  friend bool operator==(const ComponentCounts&, const ComponentCounts&) = default;
};

}  // namespace cemux
