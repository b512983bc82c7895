#pragma once

// Random number sources: one n-bit word per clock cycle.

#include <array>
#include <bit>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cemux/detail/random.hpp"

namespace cemux {

enum class RnsKind {
  lfsr,                    ///< maximal-length Fibonacci LFSR, never emits 0
  lfsr_all0,               ///< LFSR with the all-0 state spliced in (period 2^n)
  counter,                 ///< 0, 1, 2, ...
  sobol_reversed_counter,  ///< bit-reversed counter (1-D Sobol / van der Corput)
  permutation,             ///< seeded uniform random permutation of [0, 2^n)
  bernoulli,               ///< i.i.d. uniform words
};

inline constexpr unsigned kMinRnsWidth = 3;
inline constexpr unsigned kMaxRnsWidth = 16;

inline std::string_view to_string(RnsKind k) {
  switch (k) {
    case RnsKind::lfsr: return "lfsr";
    case RnsKind::lfsr_all0: return "lfsr_all0";
    case RnsKind::counter: return "counter";
    case RnsKind::sobol_reversed_counter: return "sobol";
    case RnsKind::permutation: return "permutation";
    case RnsKind::bernoulli: return "bernoulli";
  }
  return "?";
}

inline std::optional<RnsKind> parse_rns_kind(std::string_view s) {
  for (auto k : {RnsKind::lfsr, RnsKind::lfsr_all0, RnsKind::counter,
                 RnsKind::sobol_reversed_counter, RnsKind::permutation, RnsKind::bernoulli}) {
    if (s == to_string(k)) return k;
  }
  if (s == "sobol_reversed_counter") return RnsKind::sobol_reversed_counter;
  return std::nullopt;
}

struct RnsSpec {
  RnsKind kind = RnsKind::sobol_reversed_counter;
  unsigned width = 10;
  std::uint64_t seed = 0;
};

/// Feedback taps (1-based bit positions) of one primitive polynomial per width.
/// Entry n lists the exponents of x^n + ... + 1 other than the constant term.
inline std::uint32_t lfsr_tap_mask(unsigned width) {
  static constexpr std::array<std::array<unsigned, 4>, kMaxRnsWidth + 1> kTaps{{
      {}, {}, {},
      {3, 2, 0, 0},   {4, 3, 0, 0},    {5, 3, 0, 0},   {6, 5, 0, 0},
      {7, 6, 0, 0},   {8, 6, 5, 4},    {9, 5, 0, 0},   {10, 7, 0, 0},
      {11, 9, 0, 0},  {12, 6, 4, 1},   {13, 4, 3, 1},  {14, 5, 3, 1},
      {15, 14, 0, 0}, {16, 15, 13, 4},
  }};
  if (width < kMinRnsWidth || width > kMaxRnsWidth) {
    throw std::invalid_argument("LFSR width must be in [3, 16]");
  }
  std::uint32_t mask = 0;
  for (unsigned t : kTaps[width]) {
    if (t != 0) mask |= std::uint32_t{1} << (t - 1);
  }
  return mask;
}

/// One Fibonacci LFSR step: shift left, feed the tap parity into bit 0.
inline std::uint32_t lfsr_step(std::uint32_t state, unsigned width, std::uint32_t taps) {
  const auto fb = static_cast<std::uint32_t>(std::popcount(state & taps) & 1);
  return ((state << 1) | fb) & ((std::uint32_t{1} << width) - 1);
}

/// Bitwise complement within n bits: 2^n - 1 - word.
constexpr std::uint32_t complement_output(std::uint32_t word, unsigned n) noexcept {
  return ~word & ((std::uint32_t{1} << n) - 1);
}

/// Reverses the low n bits of `word`.
constexpr std::uint32_t reverse_bits(std::uint32_t word, unsigned n) noexcept {
  std::uint32_t r = 0;
  for (unsigned i = 0; i < n; ++i) {
    r = (r << 1) | ((word >> i) & 1U);
  }
  return r;
}

/// Running state of one number source. Owned by a single simulation run.
class RnsState {
 public:
  explicit RnsState(const RnsSpec& spec) : spec_(spec) {
    if (spec.width < kMinRnsWidth || spec.width > kMaxRnsWidth) {
      throw std::invalid_argument("RNS width must be in [3, 16], got " +
                                  std::to_string(spec.width));
    }
    const std::uint32_t size = std::uint32_t{1} << spec.width;
    switch (spec.kind) {
      case RnsKind::lfsr:
      case RnsKind::lfsr_all0:
        taps_ = lfsr_tap_mask(spec.width);
        // Seed 0 (mod 2^n - 1) maps onto state 1.
        start_ = static_cast<std::uint32_t>(spec.seed % (size - 1)) + 1;
        reg_ = start_;
        break;
      case RnsKind::counter:
      case RnsKind::sobol_reversed_counter:
        reg_ = 0;
        break;
      case RnsKind::permutation: {
        perm_.resize(size);
        for (std::uint32_t i = 0; i < size; ++i) perm_[i] = i;
        std::mt19937_64 eng(spec.seed);
        for (std::uint32_t i = size - 1; i > 0; --i) {
          const auto j = static_cast<std::uint32_t>(detail::uniform_below(eng, i + 1));
          std::swap(perm_[i], perm_[j]);
        }
        break;
      }
      case RnsKind::bernoulli:
        eng_.seed(spec.seed);
        break;
    }
  }

  [[nodiscard]] const RnsSpec& spec() const noexcept { return spec_; }
  [[nodiscard]] unsigned width() const noexcept { return spec_.width; }
  [[nodiscard]] std::uint64_t cycle() const noexcept { return cycle_; }

  /// Output period in cycles; 0 for the aperiodic Bernoulli source.
  [[nodiscard]] std::uint64_t period() const noexcept {
    const std::uint64_t size = std::uint64_t{1} << spec_.width;
    switch (spec_.kind) {
      case RnsKind::lfsr: return size - 1;
      case RnsKind::bernoulli: return 0;
      default: return size;
    }
  }

  /// Emits the current word and advances one cycle.
  std::uint32_t next() {
    const std::uint32_t mask = (std::uint32_t{1} << spec_.width) - 1;
    std::uint32_t out = 0;
    switch (spec_.kind) {
      case RnsKind::lfsr:
        out = reg_;
        reg_ = lfsr_step(reg_, spec_.width, taps_);
        break;
      case RnsKind::lfsr_all0:
        out = reg_;
        if (reg_ == 0) {
          reg_ = start_;
        } else {
          const std::uint32_t succ = lfsr_step(reg_, spec_.width, taps_);
          reg_ = succ == start_ ? 0 : succ;
        }
        break;
      case RnsKind::counter:
        out = reg_;
        reg_ = (reg_ + 1) & mask;
        break;
      case RnsKind::sobol_reversed_counter:
        out = reverse_bits(reg_, spec_.width);
        reg_ = (reg_ + 1) & mask;
        break;
      case RnsKind::permutation:
        out = perm_[cycle_ & mask];
        break;
      case RnsKind::bernoulli:
        out = static_cast<std::uint32_t>(eng_() >> (64 - spec_.width));
        break;
    }
    ++cycle_;
    return out;
  }

 private:
  RnsSpec spec_;
  std::uint64_t cycle_ = 0;
  std::uint32_t reg_ = 0;
  std::uint32_t start_ = 0;
  std::uint32_t taps_ = 0;
  std::vector<std::uint32_t> perm_;
  std::mt19937_64 eng_;
};

}  // namespace cemux
