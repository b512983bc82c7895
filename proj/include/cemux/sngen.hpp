#pragma once

// Probability conversion circuits, SNG arrays and full-correlation wiring.

#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "cemux/bitstream.hpp"
#include "cemux/rns.hpp"

namespace cemux {

enum class PccKind { comparator, wbg };

inline std::string_view to_string(PccKind k) {
  return k == PccKind::comparator ? "comparator" : "wbg";
}

/// Comparator PCC: 1 iff r < b. With b in [0, 2^n] a full-period source
/// yields exactly b ones.
constexpr bool comparator_bit(std::uint32_t r, std::uint32_t b) noexcept { return r < b; }

/// Weighted binary generator. The terms u_j = r_j & ~r_1 & ... & ~r_{j-1}
/// (MSB first) are one-hot on the leading 1 of r, so the output is the bit of
/// b at the position of r's leading 1, and 0 when r = 0.
constexpr bool wbg_bit(std::uint32_t r, std::uint32_t b) noexcept {
  if (r == 0) return false;
  const int lead = std::bit_width(r) - 1;
  return ((b >> lead) & 1U) != 0;
}

/// Largest threshold a WBG can realise at width n.
constexpr std::uint32_t wbg_max_threshold(unsigned n) noexcept {
  return (std::uint32_t{1} << n) - 1;
}

inline bool pcc_bit(PccKind kind, std::uint32_t r, std::uint32_t b) noexcept {
  return kind == PccKind::comparator ? comparator_bit(r, b) : wbg_bit(r, b);
}

/// Threshold as seen by a PCC: WBG thresholds saturate at 2^n - 1.
struct PccThreshold {
  std::uint32_t value = 0;
  bool clamped = false;
};

inline PccThreshold pcc_threshold(PccKind kind, std::uint32_t b, unsigned n) noexcept {
  if (kind == PccKind::wbg && b > wbg_max_threshold(n)) return {wbg_max_threshold(n), true};
  return {b, false};
}

/// One data input of a weighted adder.
struct InputChannel {
  SnValue value;
  double weight = 0.0;
  std::uint32_t threshold = 0;  ///< quantize_to_probability(value, width)
  unsigned width = 0;
  bool uses_complemented_rns = false;

  [[nodiscard]] bool negative() const noexcept { return weight < 0.0; }
};

/// Builds bipolar channels. With `full_correlation`, negative-weight channels
/// read the complemented RNS word.
inline std::vector<InputChannel> make_channels(std::span<const double> weights,
                                               std::span<const double> values, unsigned n,
                                               bool full_correlation) {
  if (weights.size() != values.size()) {
    throw std::invalid_argument("weights and values differ in length");
  }
  std::vector<InputChannel> out;
  out.reserve(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const SnValue v{values[i], SnFormat::bipolar};
    out.push_back({v, weights[i], quantize_to_probability(v, n), n,
                   full_correlation && weights[i] < 0.0});
  }
  return out;
}

/// X and Y bits of one channel for RNS word r: X from the PCC, Y after the
/// sign-inverter array.
struct ChannelBits {
  bool x = false;
  bool y = false;
};

inline ChannelBits channel_bits(const InputChannel& ch, std::uint32_t r, PccKind pcc) {
  const std::uint32_t word = ch.uses_complemented_rns ? complement_output(r, ch.width) : r;
  const std::uint32_t b = pcc_threshold(pcc, ch.threshold, ch.width).value;
  const bool x = pcc_bit(pcc, word, b);
  return {x, ch.negative() ? !x : x};
}

struct GeneratedInput {
  Bitstream x;  ///< PCC output
  Bitstream y;  ///< after sign inversion; this is what enters the mux tree
};

/// Runs the SNG array for N cycles on one shared source.
inline std::vector<GeneratedInput> generate_inputs(std::span<const InputChannel> channels,
                                                   RnsState& rns, PccKind pcc, std::size_t n_cycles) {
  for (const auto& ch : channels) {
    if (ch.width != rns.width()) throw std::invalid_argument("channel width does not match RNS width");
  }
  std::vector<GeneratedInput> out(channels.size(),
                                  GeneratedInput{Bitstream(n_cycles), Bitstream(n_cycles)});
  for (std::size_t t = 0; t < n_cycles; ++t) {
    const std::uint32_t r = rns.next();
    for (std::size_t i = 0; i < channels.size(); ++i) {
      const auto bits = channel_bits(channels[i], r, pcc);
      out[i].x.set(t, bits.x);
      out[i].y.set(t, bits.y);
    }
  }
  return out;
}

}  // namespace cemux
