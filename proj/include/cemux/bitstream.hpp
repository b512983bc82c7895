#pragma once

// Stochastic-number bitstreams, value estimators and the SCC metric.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cemux {

enum class SnFormat { unipolar, bipolar };

struct SnValue {
  double value = 0.0;
  SnFormat format = SnFormat::bipolar;

  friend bool operator==(const SnValue&, const SnValue&) = default;
};

/// Fixed-length packed bit sequence; bit k is the bit emitted in clock cycle k.
///
/// Simulation streams are always 2^n long. Other lengths are accepted so that
/// the metrics can be evaluated on arbitrary hand-written patterns.
class Bitstream {
 public:
  Bitstream() = default;

  /// All-zero stream of `length` bits.
  explicit Bitstream(std::size_t length)
      : length_(length), words_((length + 63) / 64, 0) {}

  /// Parses a string of '0'/'1' characters, first character = cycle 0.
  static Bitstream from_string(std::string_view bits) {
    Bitstream s(bits.size());
    for (std::size_t k = 0; k < bits.size(); ++k) {
      if (bits[k] == '1') {
        s.set(k, true);
      } else if (bits[k] != '0') {
        throw std::invalid_argument("bitstream literal may only contain '0' and '1'");
      }
    }
    return s;
  }

  [[nodiscard]] std::size_t size() const noexcept { return length_; }
  [[nodiscard]] bool empty() const noexcept { return length_ == 0; }
  [[nodiscard]] bool has_power_of_two_length() const noexcept {
    return std::has_single_bit(length_);
  }

  [[nodiscard]] bool operator[](std::size_t k) const noexcept {
    return (words_[k >> 6] >> (k & 63)) & 1U;
  }

  void set(std::size_t k, bool bit) noexcept {
    const std::uint64_t mask = std::uint64_t{1} << (k & 63);
    if (bit) {
      words_[k >> 6] |= mask;
    } else {
      words_[k >> 6] &= ~mask;
    }
  }

  /// Number of 1s.
  [[nodiscard]] std::size_t ones() const noexcept {
    std::size_t n = 0;
    for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
    return n;
  }

  /// Number of cycles in which both streams carry a 1.
  [[nodiscard]] std::size_t overlap(const Bitstream& other) const {
    require_same_length(other);
    std::size_t n = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      n += static_cast<std::size_t>(std::popcount(words_[i] & other.words_[i]));
    }
    return n;
  }

  /// Number of cycles in which the two streams agree.
  [[nodiscard]] std::size_t agreements(const Bitstream& other) const {
    require_same_length(other);
    std::size_t n = 0;
    for (std::size_t i = 0; i < words_.size(); ++i) {
      n += static_cast<std::size_t>(std::popcount(~(words_[i] ^ other.words_[i])));
    }
    return n - padding_bits();
  }

  /// Bitwise NOT (inverter).
  [[nodiscard]] Bitstream complement() const {
    Bitstream out = *this;
    for (auto& w : out.words_) w = ~w;
    out.clear_padding();
    return out;
  }

  [[nodiscard]] std::span<const std::uint64_t> words() const noexcept { return words_; }

  [[nodiscard]] std::string to_string() const {
    std::string s(length_, '0');
    for (std::size_t k = 0; k < length_; ++k) {
      if ((*this)[k]) s[k] = '1';
    }
    return s;
  }

  friend bool operator==(const Bitstream&, const Bitstream&) = default;

 private:
  void require_same_length(const Bitstream& other) const {
    if (other.length_ != length_) throw std::invalid_argument("bitstream length mismatch");
  }
  [[nodiscard]] std::size_t padding_bits() const noexcept {
    return words_.size() * 64 - length_;
  }
  void clear_padding() noexcept {
    if (length_ % 64 != 0) words_.back() &= (std::uint64_t{1} << (length_ % 64)) - 1;
  }

  std::size_t length_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Counter-based value estimate: ones/N (unipolar) or 2*ones/N - 1 (bipolar).
/// The count is exact; the division is exact for power-of-two N.
inline SnValue estimate_value(const Bitstream& s, SnFormat format) {
  if (s.empty()) throw std::invalid_argument("cannot estimate an empty bitstream");
  const double p = static_cast<double>(s.ones()) / static_cast<double>(s.size());
  return {format == SnFormat::unipolar ? p : 2.0 * p - 1.0, format};
}

/// Stochastic cross correlation of two equal-length streams.
///
/// delta = p_xy - p_x p_y, normalised by the largest attainable overlap
/// excess (delta > 0) or deficit (delta < 0). Constant streams give 0.
/// The ratio is formed from integer counts so +1 and -1 are hit exactly.
inline double scc(const Bitstream& x, const Bitstream& y) {
  if (x.size() != y.size()) throw std::invalid_argument("scc: bitstream length mismatch");
  const auto n = static_cast<std::int64_t>(x.size());
  const auto a = static_cast<std::int64_t>(x.ones());
  const auto b = static_cast<std::int64_t>(y.ones());
  const auto c = static_cast<std::int64_t>(x.overlap(y));
  // All quantities scaled by N^2.
  const std::int64_t delta = c * n - a * b;
  if (delta > 0) {
    const std::int64_t den = std::min(a, b) * n - a * b;
    return den == 0 ? 0.0 : static_cast<double>(delta) / static_cast<double>(den);
  }
  if (delta < 0) {
    const std::int64_t den = a * b - std::max<std::int64_t>(a + b - n, 0) * n;
    return den == 0 ? 0.0 : static_cast<double>(delta) / static_cast<double>(den);
  }
  return 0.0;
}

/// Probability of a 1 implied by a value in the given format.
inline double unipolar_probability(const SnValue& v) {
  const double p = v.format == SnFormat::unipolar ? v.value : (v.value + 1.0) / 2.0;
  if (!(p >= 0.0 && p <= 1.0)) {
    throw std::domain_error("stochastic number value outside its format range");
  }
  return p;
}

/// Comparator threshold B = round(P * 2^n), ties away from zero.
/// B ranges over [0, 2^n], so probability 1 is representable.
inline std::uint32_t quantize_to_probability(const SnValue& v, unsigned n) {
  if (n == 0 || n > 30) throw std::invalid_argument("bit-width out of range");
  const double p = unipolar_probability(v);
  return static_cast<std::uint32_t>(std::round(std::ldexp(p, static_cast<int>(n))));
}

/// Bipolar value represented by threshold B at width n: 2B/2^n - 1.
inline double bipolar_from_threshold(std::uint32_t b, unsigned n) {
  return std::ldexp(static_cast<double>(b), 1 - static_cast<int>(n)) - 1.0;
}

}  // namespace cemux
