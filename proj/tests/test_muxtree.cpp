#include <catch_amalgamated.hpp>

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "cemux/muxtree.hpp"

using namespace cemux;

namespace {

std::vector<std::uint64_t> q_of(const std::vector<double>& w, unsigned m) {
  return quantize_weights(w, m).numerators;
}

// Line-by-line transcription of the quantization pseudocode, kept
// independent of the library version.
std::vector<long long> reference_quantize(const std::vector<double>& w, unsigned m) {
  std::vector<double> a(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) a[i] = std::fabs(w[i]);
  const double sum_a = std::accumulate(a.begin(), a.end(), 0.0);
  std::vector<double> t(w.size());
  std::vector<long long> q(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    t[i] = std::pow(2.0, m) * a[i] / sum_a;
    q[i] = std::llround(t[i]);
  }
  auto sum_q = [&] { return std::accumulate(q.begin(), q.end(), 0LL); };
  auto argmax = [&](const std::function<double(std::size_t)>& f) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < q.size(); ++i) {
      if (f(i) > f(best)) best = i;
    }
    return best;
  };
  const long long two_m = 1LL << m;
  while (sum_q() > two_m) --q[argmax([&](std::size_t i) { return static_cast<double>(q[i]) - t[i]; })];
  while (sum_q() < two_m) ++q[argmax([&](std::size_t i) { return t[i] - static_cast<double>(q[i]); })];
  return q;
}

// Slot layout of the unsimplified height-h tree: for each level l = 1..h and
// each input with the 2^-l bit set (input order), 2^(h-l) consecutive slots.
std::vector<std::size_t> full_tree_slots(const std::vector<std::uint64_t>& q, unsigned h) {
  std::vector<std::size_t> slots;
  for (unsigned l = 1; l <= h; ++l) {
    for (std::size_t i = 0; i < q.size(); ++i) {
      if ((q[i] >> (h - l)) & 1U) slots.insert(slots.end(), std::size_t{1} << (h - l), i);
    }
  }
  // A single full-weight input covers every slot.
  for (std::size_t i = 0; i < q.size(); ++i) {
    if (q[i] == (std::uint64_t{1} << h)) slots.assign(std::size_t{1} << h, i);
  }
  return slots;
}

// Walk of the complete tree (heap-indexed muxes, select MSB at the root).
std::size_t full_tree_select(const std::vector<std::size_t>& slots, unsigned h, std::uint64_t word) {
  std::size_t node = 1;
  for (unsigned d = 0; d < h; ++d) node = 2 * node + ((word >> (h - 1 - d)) & 1U);
  return slots[node - (std::size_t{1} << h)];
}

void for_each_composition(std::size_t parts, std::uint64_t total, const std::function<void(const std::vector<std::uint64_t>&)>& f) {
  std::vector<std::uint64_t> q(parts, 0);
  std::function<void(std::size_t, std::uint64_t)> rec = [&](std::size_t i, std::uint64_t left) {
    if (i + 1 == parts) {
      q[i] = left;
      f(q);
      return;
    }
    for (std::uint64_t v = 0; v <= left; ++v) {
      q[i] = v;
      rec(i + 1, left - v);
    }
  };
  rec(0, total);
}

QuantizedWeights from_numerators(const std::vector<std::uint64_t>& q, unsigned m) {
  QuantizedWeights out;
  out.m = m;
  out.numerators = q;
  out.signs.assign(q.size(), 1);
  for (auto v : q) out.original.push_back(static_cast<double>(v));
  return out;
}

}  // namespace

TEST_CASE("quantize_weights anchors", "[muxtree][quantize]") {
  CHECK(q_of({0.5, 0.375, 0.125}, 3) == std::vector<std::uint64_t>{4, 3, 1});
  CHECK(q_of({7.0 / 16, 0.25, 0.25, 1.0 / 16}, 4) == std::vector<std::uint64_t>{7, 4, 4, 1});
  const auto neg = quantize_weights(std::vector<double>{-0.5, 0.375, 0.125}, 3);
  CHECK(neg.numerators == std::vector<std::uint64_t>{4, 3, 1});
  CHECK(neg.signs == std::vector<int>{-1, 1, 1});
  CHECK(neg.signed_weight(0) == -0.5);
  // Rounding overshoots to 3; the decrement loop removes the largest excess.
  CHECK(q_of({0.375, 0.375, 0.25}, 1) == std::vector<std::uint64_t>{1, 1, 0});
  CHECK(q_of({3.0}, 5) == std::vector<std::uint64_t>{32});
  CHECK_THROWS(quantize_weights(std::vector<double>{0.0, 0.0}, 3));
  CHECK_THROWS(quantize_weights(std::vector<double>{}, 3));
  CHECK_THROWS(quantize_weights(std::vector<double>{1.0}, 0));
}

TEST_CASE("quantize_weights equals the literal transcription", "[muxtree][quantize][property]") {
  std::mt19937_64 eng(1);
  for (int trial = 0; trial < 3000; ++trial) {
    const std::size_t count = 1 + eng() % 64;
    const unsigned m = 1 + static_cast<unsigned>(eng() % 12);
    std::vector<double> w(count);
    for (auto& v : w) v = std::uniform_real_distribution<double>(-1.0, 1.0)(eng);
    if (trial % 5 == 0 && count > 1) w[0] = 0.0;
    const auto q = q_of(w, m);
    const auto ref = reference_quantize(w, m);
    REQUIRE(q.size() == ref.size());
    for (std::size_t i = 0; i < q.size(); ++i) REQUIRE(static_cast<long long>(q[i]) == ref[i]);
    REQUIRE(std::accumulate(q.begin(), q.end(), std::uint64_t{0}) == (std::uint64_t{1} << m));
  }
}

TEST_CASE("Four-input example tree layout", "[muxtree][tree]") {
  const auto q = quantize_weights(std::vector<double>{7.0 / 16, 0.25, 0.25, 1.0 / 16}, 4);
  const auto tree = build_hardwired_tree(q, 4);
  CHECK(tree.level(1).empty());
  CHECK(tree.level(2) == std::vector<std::size_t>{0, 1, 2});
  CHECK(tree.level(3) == std::vector<std::size_t>{0});
  CHECK(tree.level(4) == std::vector<std::size_t>{0, 3});
  CHECK(tree.mux_count() == 5);
  CHECK(expansion_ones(q) == 6);

  std::vector<int> counts(4, 0);
  for (std::uint64_t word = 0; word < 16; ++word) ++counts[tree.select_precise(word)];
  CHECK(counts == std::vector<int>{7, 4, 4, 1});

  std::ifstream golden(std::string(CEMUX_GOLDEN_DIR) + "/example_tree.txt");
  REQUIRE(golden);
  std::stringstream ss;
  ss << golden.rdbuf();
  CHECK(tree.dump() == ss.str());
}

TEST_CASE("degenerate and equal-weight trees", "[muxtree][tree]") {
  const auto single = build_hardwired_tree(quantize_weights(std::vector<double>{0.7}, 3), 3);
  CHECK(single.mux_count() == 0);
  CHECK(single.root().kind == TreeChild::Kind::input);
  for (std::uint64_t word = 0; word < 8; ++word) CHECK(single.select_precise(word) == 0);
  bool none[3] = {true, false, true};
  CHECK(single.select_noisy(std::span<const bool>(none, 3)) == 0);

  const auto four = build_hardwired_tree(quantize_weights(std::vector<double>{1, 1, 1, 1}, 2), 2);
  std::vector<int> seen(4, 0);
  for (std::uint64_t word = 0; word < 4; ++word) ++seen[four.select_precise(word)];
  CHECK(seen == std::vector<int>{1, 1, 1, 1});
  CHECK(four.mux_count() == 3);
  CHECK_THROWS(build_hardwired_tree(quantize_weights(std::vector<double>{1, 1}, 3), 4));
}

TEST_CASE("simplified tree equals the full-tree walk", "[muxtree][tree][oracle]") {
  std::size_t checked = 0;
  for (unsigned h = 1; h <= 4; ++h) {
    for (std::size_t m = 1; m <= 4; ++m) {
      for_each_composition(m, std::uint64_t{1} << h, [&](const std::vector<std::uint64_t>& q) {
        const auto qw = from_numerators(q, h);
        const auto tree = build_hardwired_tree(qw, h);
        const auto slots = full_tree_slots(q, h);
        REQUIRE(slots.size() == (std::size_t{1} << h));
        for (std::uint64_t word = 0; word < (std::uint64_t{1} << h); ++word) {
          REQUIRE(tree.select_precise(word) == full_tree_select(slots, h, word));
        }
        const std::size_t ones = expansion_ones(qw);
        REQUIRE(tree.mux_count() == ones - 1);
        REQUIRE(tree.mux_count() <= mux_count_bound(m, h));
        ++checked;
      });
    }
  }
  CHECK(checked > 1000);
}

TEST_CASE("DDG parity and counts on random weights", "[muxtree][tree][property]") {
  std::mt19937_64 eng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const std::size_t m = 1 + eng() % 100;
    const unsigned h = 1 + static_cast<unsigned>(eng() % 12);
    std::vector<double> w(m);
    for (auto& v : w) v = std::uniform_real_distribution<double>(-1.0, 1.0)(eng);
    const auto q = quantize_weights(w, h);
    const auto tree = build_hardwired_tree(q, h);
    std::size_t live = 0;
    for (auto v : q.numerators) live += v > 0 ? 1 : 0;
    CHECK(tree.mux_count() == expansion_ones(q) - 1);
    CHECK(tree.mux_count() <= mux_count_bound(live, h));

    // Muxes at depth d-1 = (leaves + muxes at depth d) / 2.
    std::vector<std::size_t> muxes_at(h, 0);
    for (const auto& node : tree.nodes()) ++muxes_at[node.depth];
    for (unsigned d = h; d >= 2; --d) {
      const std::size_t row = tree.level(d).size() + (d < h ? muxes_at[d] : 0);
      CHECK(row % 2 == 0);
      CHECK(muxes_at[d - 1] == row / 2);
    }
    if (tree.mux_count() > 0) CHECK(muxes_at[0] == 1);

    // Every counter phase gives exact counts.
    const auto owner = tree.owner_table();
    const std::size_t n_cycles = std::size_t{1} << std::min(h + 2, 14U);
    const auto phase = static_cast<std::uint32_t>(eng());
    std::vector<std::uint64_t> c(m, 0);
    for (std::size_t t = 0; t < n_cycles; ++t) {
      ++c[owner[((t + phase) % n_cycles) >> (std::bit_width(n_cycles) - 1 - h)]];
    }
    for (std::size_t i = 0; i < m; ++i) CHECK(c[i] == q.numerators[i] * (n_cycles >> h));
  }
}

TEST_CASE("noisy selection", "[muxtree][tree][noisy]") {
  std::mt19937_64 eng(5);
  // Two equal inputs, h = 1: C_1 ~ Binomial(N, 1/2).
  const auto two = build_hardwired_tree(quantize_weights(std::vector<double>{1, 1}, 1), 1);
  const std::size_t n_cycles = 64;
  const int runs = 20000;
  std::vector<int> hist(n_cycles + 1, 0);
  for (int r = 0; r < runs; ++r) {
    std::size_t c0 = 0;
    for (std::size_t t = 0; t < n_cycles; ++t) {
      const bool bit = (eng() >> 63) != 0;
      c0 += two.select_noisy(std::span<const bool>(&bit, 1)) == 0 ? 1 : 0;
    }
    ++hist[c0];
  }
  // Pearson chi-square over the central bins against the binomial pmf.
  double chi2 = 0.0;
  int dof = 0;
  for (std::size_t k = 22; k <= 42; ++k) {
    const double pmf = std::exp(std::lgamma(65.0) - std::lgamma(k + 1.0) - std::lgamma(65.0 - k) - 64.0 * std::log(2.0));
    const double e = pmf * runs;
    chi2 += (hist[k] - e) * (hist[k] - e) / e;
    ++dof;
  }
  CHECK(chi2 < dof + 4.0 * std::sqrt(2.0 * dof));

  // E[C_i] = q_i N / 2^h within three standard errors.
  const auto q = quantize_weights(std::vector<double>{0.45, -0.2, 0.25, 0.1}, 5);
  const auto tree = build_hardwired_tree(q, 5);
  const std::size_t n = 256;
  std::vector<double> sum(4, 0.0);
  std::vector<double> sq(4, 0.0);
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    std::vector<double> c(4, 0.0);
    for (std::size_t t = 0; t < n; ++t) {
      bool bits[5];
      for (auto& b : bits) b = (eng() >> 63) != 0;
      c[tree.select_noisy(std::span<const bool>(bits, 5))] += 1.0;
    }
    for (std::size_t i = 0; i < 4; ++i) {
      sum[i] += c[i];
      sq[i] += c[i] * c[i];
    }
  }
  for (std::size_t i = 0; i < 4; ++i) {
    const double mean = sum[i] / reps;
    const double var = sq[i] / reps - mean * mean;
    const double expect = static_cast<double>(q.numerators[i]) * n / 32.0;
    CHECK(std::abs(mean - expect) <= 3.0 * std::sqrt(var / reps) + 1e-9);
  }

  const auto single = build_hardwired_tree(quantize_weights(std::vector<double>{1.0}, 4), 4);
  bool bits[4] = {true, true, false, true};
  CHECK(single.select_noisy(std::span<const bool>(bits, 4)) == 0);
}

TEST_CASE("biased selector construction", "[muxtree][biased]") {
  const auto q = quantize_weights(std::vector<double>{0.5, 0.375, 0.125}, 3);
  const auto tree = build_biased_selector_tree(q, PccKind::comparator, RnsKind::lfsr, 8);
  REQUIRE(tree.mux_count() == 2);
  CHECK(tree.nodes()[0].probability == 0.5);
  CHECK(tree.nodes()[0].child1 == TreeChild{TreeChild::Kind::input, 0});
  CHECK(tree.nodes()[1].probability == 0.75);
  CHECK(tree.nodes()[1].child1 == TreeChild{TreeChild::Kind::input, 1});
  CHECK(tree.ideal_leaf_probabilities() == std::vector<double>{0.5, 0.375, 0.125});

  for (unsigned k = 1; k <= 5; ++k) {
    const auto eq = quantize_weights(std::vector<double>(std::size_t{1} << k, 1.0), 8);
    const auto t = build_biased_selector_tree(eq, PccKind::wbg, RnsKind::lfsr, 8);
    CHECK(t.height() == k);
    for (const auto& node : t.nodes()) CHECK(node.probability == 0.5);
  }

  std::mt19937_64 eng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t m = 1 + eng() % 40;
    std::vector<double> w(m);
    for (auto& v : w) v = std::uniform_real_distribution<double>(-1.0, 1.0)(eng);
    const auto qq = quantize_weights(w, 10);
    const auto t = build_biased_selector_tree(qq, PccKind::wbg, RnsKind::lfsr, 10);
    const auto ideal = t.ideal_leaf_probabilities();
    const auto quant = t.quantized_leaf_probabilities();
    CHECK(std::accumulate(ideal.begin(), ideal.end(), 0.0) == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(std::accumulate(quant.begin(), quant.end(), 0.0) == Catch::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < m; ++i) CHECK(ideal[i] == Catch::Approx(qq.magnitude(i)).margin(1e-12));
  }
}

TEST_CASE("biased selector sampling is unbiased", "[muxtree][biased][noisy]") {
  const auto q = quantize_weights(std::vector<double>{0.3, -0.1, 0.25, 0.2, 0.15}, 8);
  for (auto pcc : {PccKind::comparator, PccKind::wbg}) {
    const auto tree = build_biased_selector_tree(q, pcc, RnsKind::bernoulli, 8);
    const auto expect = tree.quantized_leaf_probabilities();
    std::mt19937_64 eng(pcc == PccKind::wbg ? 71 : 72);
    const std::size_t total = 400000;
    std::vector<double> c(5, 0.0);
    std::vector<std::uint32_t> words(tree.height());
    for (std::size_t t = 0; t < total; ++t) {
      for (auto& w : words) w = static_cast<std::uint32_t>(eng() >> 56);
      c[tree.select(words)] += 1.0;
    }
    for (std::size_t i = 0; i < 5; ++i) {
      const double p = expect[i];
      CHECK(std::abs(c[i] / total - p) <= 3.0 * std::sqrt(p * (1.0 - p) / total));
    }
  }
}
