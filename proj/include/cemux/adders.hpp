#pragma once

// Assembled weighted adders: CeMux, its variants, the conventional mux
// baselines and an accumulative parallel counter (APC).

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cemux/bitstream.hpp"
#include "cemux/detail/random.hpp"
#include "cemux/muxtree.hpp"
#include "cemux/rns.hpp"
#include "cemux/sngen.hpp"

namespace cemux {

enum class DesignName { cemux, cemux_wbg, cemux_biased, basic_hardwired, basic_biased, apc };

inline constexpr DesignName kAllDesigns[] = {DesignName::cemux,           DesignName::cemux_wbg,
                                             DesignName::cemux_biased,    DesignName::basic_hardwired,
                                             DesignName::basic_biased,    DesignName::apc};

inline std::string_view to_string(DesignName d) {
  switch (d) {
    case DesignName::cemux: return "cemux";
    case DesignName::cemux_wbg: return "cemux_wbg";
    case DesignName::cemux_biased: return "cemux_biased";
    case DesignName::basic_hardwired: return "basic_hardwired";
    case DesignName::basic_biased: return "basic_biased";
    case DesignName::apc: return "apc";
  }
  return "?";
}

enum class TreeType { hardwired, biased_selector, parallel_counter };
enum class SelectSource { counter, lfsrs, none };

/// Feature row of a design (tree, PCCs, select source, correlation flags).
struct DesignFeatures {
  TreeType tree = TreeType::hardwired;
  PccKind data_pcc = PccKind::comparator;
  RnsKind data_rns = RnsKind::sobol_reversed_counter;
  SelectSource select = SelectSource::counter;
  std::optional<PccKind> select_pcc;
  bool full_correlation = true;
  bool precise_sampling = true;
  bool adaptable_weights = false;
  /// Negative-weight SNGs read the inverted RNS word (the n inverters of the
  /// CeMux datapath). Only yields full correlation with comparator PCCs.
  bool inverted_negative_rns = false;

  friend bool operator==(const DesignFeatures&, const DesignFeatures&) = default;
};

inline DesignFeatures design_features(DesignName d) {
  using enum TreeType;
  const auto sobol = RnsKind::sobol_reversed_counter;
  switch (d) {
    case DesignName::cemux:
      return {hardwired, PccKind::comparator, sobol, SelectSource::counter, std::nullopt, true, true, false, true};
    case DesignName::cemux_wbg:
      // Complemented wiring is kept; the WBG itself breaks the correlation.
      return {hardwired, PccKind::wbg, sobol, SelectSource::counter, std::nullopt, false, true, false, true};
    case DesignName::cemux_biased:
      return {biased_selector, PccKind::comparator, sobol, SelectSource::lfsrs, PccKind::wbg, true, false, true, true};
    case DesignName::basic_hardwired:
      return {hardwired, PccKind::wbg, sobol, SelectSource::lfsrs, std::nullopt, false, false, false};
    case DesignName::basic_biased:
      return {biased_selector, PccKind::wbg, sobol, SelectSource::lfsrs, PccKind::wbg, false, false, true};
    case DesignName::apc:
      return {parallel_counter, PccKind::comparator, sobol, SelectSource::none, std::nullopt, false, false, true};
  }
  throw std::invalid_argument("unknown design");
}

/// Ablations applied on top of a named design.
struct DesignModifiers {
  bool no_full_correlation = false;  ///< negative-weight SNGs read the plain RNS word
  bool no_precise_sampling = false;  ///< select counter replaced by one LFSR per level
  bool lfsr_data = false;            ///< data RNS is an LFSR instead of Sobol

  friend bool operator==(const DesignModifiers&, const DesignModifiers&) = default;
};

struct DesignVariant {
  DesignName name = DesignName::cemux;
  DesignModifiers mods;

  [[nodiscard]] std::string label() const {
    std::string s(to_string(name));
    std::string m;
    auto add = [&](bool on, const char* tag) {
      if (!on) return;
      m += m.empty() ? "" : ",";
      m += tag;
    };
    add(mods.no_full_correlation, "no_fc");
    add(mods.no_precise_sampling, "no_ps");
    add(mods.lfsr_data, "lfsr");
    return m.empty() ? s : s + ":" + m;
  }
  friend bool operator==(const DesignVariant&, const DesignVariant&) = default;
};

/// Parses "name" or "name:mod,mod" with mods no_fc, no_ps, lfsr.
inline std::optional<DesignVariant> parse_design(std::string_view text) {
  const auto colon = text.find(':');
  const std::string_view base = text.substr(0, colon);
  DesignVariant v;
  bool found = false;
  for (auto d : kAllDesigns) {
    if (base == to_string(d)) {
      v.name = d;
      found = true;
    }
  }
  if (!found) return std::nullopt;
  if (colon == std::string_view::npos) return v;
  std::string_view rest = text.substr(colon + 1);
  while (!rest.empty()) {
    const auto comma = rest.find(',');
    const std::string_view tok = rest.substr(0, comma);
    if (tok == "no_fc") {
      v.mods.no_full_correlation = true;
    } else if (tok == "no_ps") {
      v.mods.no_precise_sampling = true;
    } else if (tok == "lfsr") {
      v.mods.lfsr_data = true;
    } else {
      return std::nullopt;
    }
    if (comma == std::string_view::npos) break;
    rest = rest.substr(comma + 1);
  }
  return v;
}

inline DesignFeatures apply_modifiers(DesignFeatures f, const DesignModifiers& mods) {
  if (mods.no_full_correlation) {
    f.full_correlation = false;
    f.inverted_negative_rns = false;
  }
  if (mods.no_precise_sampling && f.tree == TreeType::hardwired) {
    f.precise_sampling = false;
    f.select = SelectSource::lfsrs;
  }
  if (mods.lfsr_data) f.data_rns = RnsKind::lfsr;
  return f;
}

/// Output of one simulation run.
struct SimulationReport {
  Bitstream z;             ///< mux output stream (empty for the APC)
  double estimate = 0.0;   ///< up-down counter estimate (rescaled for the APC)
  double target = 0.0;     ///< weighted sum with quantized weights and inputs
  double error = 0.0;      ///< estimate - target
  SamplingCounts counts;   ///< per-input sampling counts (mux designs only)
  std::size_t clamped_thresholds = 0;  ///< WBG thresholds that saturated at 2^n - 1
};

/// (1 / sum|w|) * sum w_i x_i for the given weights and values.
inline double target_value(std::span<const double> w, std::span<const double> x) {
  if (w.size() != x.size()) throw std::invalid_argument("weights and values differ in length");
  double mass = 0.0;
  double acc = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    mass += std::abs(w[i]);
    acc += w[i] * x[i];
  }
  if (!(mass > 0.0)) throw std::invalid_argument("zero weight mass");
  return acc / mass;
}

/// A weighted adder configured for fixed weights and precision n (N = 2^n).
class AdderDesign {
 public:
  AdderDesign(DesignVariant variant, std::span<const double> weights, unsigned precision)
      : variant_(variant),
        features_(apply_modifiers(design_features(variant.name), variant.mods)),
        precision_(precision),
        weights_(weights.begin(), weights.end()) {
    if (precision < kMinRnsWidth || precision > kMaxRnsWidth) {
      throw std::invalid_argument("precision n must be in [3, 16]");
    }
    if (features_.tree == TreeType::parallel_counter) {
      init_apc();
      return;
    }
    quantized_ = quantize_weights(weights_, precision_);
    if (features_.tree == TreeType::hardwired) {
      hardwired_ = build_hardwired_tree(quantized_, precision_);
      owner_ = hardwired_->owner_table();
    } else {
      biased_ = build_biased_selector_tree(quantized_, features_.select_pcc.value_or(PccKind::wbg),
                                           RnsKind::lfsr, precision_);
    }
  }

  AdderDesign(DesignName name, std::span<const double> weights, unsigned precision)
      : AdderDesign(DesignVariant{name, {}}, weights, precision) {}

  [[nodiscard]] DesignName name() const noexcept { return variant_.name; }
  [[nodiscard]] const DesignVariant& variant() const noexcept { return variant_; }
  [[nodiscard]] const DesignFeatures& features() const noexcept { return features_; }
  [[nodiscard]] unsigned precision() const noexcept { return precision_; }
  [[nodiscard]] std::size_t stream_length() const noexcept { return std::size_t{1} << precision_; }
  [[nodiscard]] std::size_t input_count() const noexcept { return weights_.size(); }
  [[nodiscard]] const std::vector<double>& weights() const noexcept { return weights_; }
  [[nodiscard]] const QuantizedWeights& quantized() const noexcept { return quantized_; }
  [[nodiscard]] const std::optional<HardwiredTree>& hardwired() const noexcept { return hardwired_; }
  [[nodiscard]] const std::optional<BiasedSelectorTree>& biased() const noexcept { return biased_; }

  /// Starting state of the precise-sampling select counter.
  [[nodiscard]] std::uint32_t select_phase() const noexcept { return phase_; }
  void set_select_phase(std::uint32_t phase) noexcept {
    phase_ = phase & static_cast<std::uint32_t>(stream_length() - 1);
  }

  /// APC coefficient thresholds (bipolar SNs of |w_i| / max|w|).
  [[nodiscard]] const std::vector<std::uint32_t>& coefficient_thresholds() const noexcept {
    return coef_thresholds_;
  }

  /// Quantized weight actually realised for input i (signed).
  [[nodiscard]] double effective_weight(std::size_t i) const {
    if (features_.tree == TreeType::parallel_counter) {
      const double c = bipolar_from_threshold(coef_thresholds_[i], precision_);
      return (weights_[i] < 0.0 ? -c : c) / coef_mass_;
    }
    return quantized_.signed_weight(i);
  }

  /// Weighted-sum target with quantized weights and n-bit quantized inputs.
  [[nodiscard]] double target(std::span<const double> x) const {
    check_inputs(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto b = quantize_to_probability({x[i], SnFormat::bipolar}, precision_);
      acc += effective_weight(i) * bipolar_from_threshold(b, precision_);
    }
    return acc;
  }

  void check_inputs(std::span<const double> x) const {
    if (x.size() != weights_.size()) throw std::invalid_argument("input count does not match weight count");
    for (double v : x) {
      if (!(v >= -1.0 && v <= 1.0)) throw std::domain_error("input value outside [-1, 1]");
    }
  }

  [[nodiscard]] const std::vector<std::uint32_t>& owner_table() const noexcept { return owner_; }
  [[nodiscard]] double coefficient_mass() const noexcept { return coef_mass_; }

 private:
  void init_apc() {
    double max_abs = 0.0;
    for (double w : weights_) {
      if (!std::isfinite(w)) throw std::invalid_argument("weights must be finite");
      max_abs = std::max(max_abs, std::abs(w));
    }
    if (!(max_abs > 0.0)) throw std::invalid_argument("zero weight mass");
    coef_thresholds_.reserve(weights_.size());
    coef_mass_ = 0.0;
    for (double w : weights_) {
      const auto b = quantize_to_probability({std::abs(w) / max_abs, SnFormat::bipolar}, precision_);
      coef_thresholds_.push_back(b);
      coef_mass_ += std::abs(bipolar_from_threshold(b, precision_));
    }
  }

  DesignVariant variant_;
  DesignFeatures features_;
  unsigned precision_;
  std::vector<double> weights_;
  QuantizedWeights quantized_;
  std::optional<HardwiredTree> hardwired_;
  std::optional<BiasedSelectorTree> biased_;
  std::vector<std::uint32_t> owner_;
  std::uint32_t phase_ = 0;
  std::vector<std::uint32_t> coef_thresholds_;
  double coef_mass_ = 0.0;
};

namespace detail {

/// Per-RNS seeds of one run.
enum : std::uint64_t { kDataStream = 1, kCoefficientStream = 2, kSelectStream = 100 };

inline void require_stream_length(const AdderDesign& d, std::size_t n_cycles) {
  if (n_cycles != d.stream_length()) {
    throw std::invalid_argument("stream length N must equal 2^n for this design");
  }
}

inline std::size_t count_clamped(const AdderDesign& d, std::span<const InputChannel> channels) {
  if (d.features().data_pcc != PccKind::wbg) return 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < channels.size(); ++i) {
    if (d.quantized().numerators[i] > 0 &&
        pcc_threshold(PccKind::wbg, channels[i].threshold, channels[i].width).clamped) {
      ++n;
    }
  }
  return n;
}

}  // namespace detail

/// APC: XNOR products of data and coefficient SNs, summed by a parallel
/// counter. Data SNs share a Sobol source, coefficient SNs share a counter.
/// The raw 1/M-scaled sum is rescaled by M / sum|c~_i|.
inline SimulationReport run_apc(const AdderDesign& d, std::span<const double> x, std::size_t n_cycles,
                                std::uint64_t seed) {
  if (d.features().tree != TreeType::parallel_counter) throw std::invalid_argument("not an APC design");
  d.check_inputs(x);
  detail::require_stream_length(d, n_cycles);
  const unsigned n = d.precision();
  const std::size_t m = x.size();
  std::vector<std::uint32_t> data_b(m);
  for (std::size_t i = 0; i < m; ++i) data_b[i] = quantize_to_probability({x[i], SnFormat::bipolar}, n);
  const auto& coef_b = d.coefficient_thresholds();

  RnsState data({d.features().data_rns, n, detail::derive_seed(seed, detail::kDataStream)});
  RnsState coef({RnsKind::counter, n, detail::derive_seed(seed, detail::kCoefficientStream)});
  std::uint64_t acc = 0;
  for (std::size_t t = 0; t < n_cycles; ++t) {
    const std::uint32_t r1 = data.next();
    const std::uint32_t r2 = coef.next();
    for (std::size_t i = 0; i < m; ++i) {
      const bool prod = comparator_bit(r1, data_b[i]) == comparator_bit(r2, coef_b[i]);
      acc += (prod != (d.weights()[i] < 0.0)) ? 1U : 0U;
    }
  }
  SimulationReport rep;
  const double raw = 2.0 * static_cast<double>(acc) / (static_cast<double>(n_cycles) * static_cast<double>(m)) - 1.0;
  rep.estimate = std::clamp(raw * static_cast<double>(m) / d.coefficient_mass(), -1.0, 1.0);
  rep.target = d.target(x);
  rep.error = rep.estimate - rep.target;
  return rep;
}

/// Cycle-accurate run of one adder for N = 2^n cycles.
inline SimulationReport run_adder(const AdderDesign& d, std::span<const double> x, std::size_t n_cycles,
                                  std::uint64_t seed) {
  if (d.features().tree == TreeType::parallel_counter) return run_apc(d, x, n_cycles, seed);
  d.check_inputs(x);
  detail::require_stream_length(d, n_cycles);
  const unsigned n = d.precision();
  const auto& f = d.features();
  const auto channels = make_channels(d.weights(), x, n, f.inverted_negative_rns);

  RnsState data({f.data_rns, n, detail::derive_seed(seed, detail::kDataStream)});

  // Select sources: the counter, or one n-bit LFSR per tree level.
  const unsigned levels = f.tree == TreeType::hardwired ? d.hardwired()->height() : d.biased()->height();
  std::vector<RnsState> selects;
  if (f.select == SelectSource::lfsrs) {
    selects.reserve(levels);
    for (unsigned l = 0; l < levels; ++l) {
      selects.emplace_back(RnsSpec{RnsKind::lfsr, n, detail::derive_seed(seed, detail::kSelectStream + l)});
    }
  }
  std::vector<std::uint32_t> level_words(levels);
  const auto mask = static_cast<std::uint32_t>(n_cycles - 1);
  const std::uint32_t msb = std::uint32_t{1} << (n - 1);

  SimulationReport rep;
  rep.z = Bitstream(n_cycles);
  rep.counts.assign(x.size(), 0);
  std::size_t ones = 0;
  for (std::size_t t = 0; t < n_cycles; ++t) {
    const std::uint32_t r = data.next();
    for (unsigned l = 0; l < selects.size(); ++l) level_words[l] = selects[l].next();

    std::size_t sel = 0;
    if (f.tree == TreeType::hardwired) {
      std::uint32_t word = 0;
      if (f.select == SelectSource::counter) {
        word = (static_cast<std::uint32_t>(t) + d.select_phase()) & mask;
      } else {
        // Each level's select bit is the MSB of its LFSR.
        for (unsigned l = 0; l < levels; ++l) word = (word << 1) | ((level_words[l] & msb) ? 1U : 0U);
      }
      sel = d.owner_table()[word];
    } else {
      sel = d.biased()->select(level_words);
    }
    const bool bit = channel_bits(channels[sel], r, f.data_pcc).y;
    rep.z.set(t, bit);
    ones += bit ? 1U : 0U;
    ++rep.counts[sel];
  }
  rep.estimate = 2.0 * static_cast<double>(ones) / static_cast<double>(n_cycles) - 1.0;
  rep.target = d.target(x);
  rep.error = rep.estimate - rep.target;
  rep.clamped_thresholds = detail::count_clamped(d, channels);
  return rep;
}

/// Component counts of a constructed design.
inline ComponentCounts structural_report(const AdderDesign& d) {
  ComponentCounts c;
  const auto& f = d.features();
  const unsigned n = d.precision();
  std::size_t live = 0;
  std::size_t negative = 0;
  for (std::size_t i = 0; i < d.input_count(); ++i) {
    const bool used = f.tree == TreeType::parallel_counter ? true : d.quantized().numerators[i] > 0;
    if (!used) continue;
    ++live;
    if (d.weights()[i] < 0.0) ++negative;
  }
  c.output_counter_bits = n;
  if (f.data_rns == RnsKind::sobol_reversed_counter) {
    c.sobol_rns = 1;
  } else {
    c.lfsr_rns += 1;
  }
  if (f.tree == TreeType::parallel_counter) {
    c.comparators = 2 * live;
    c.xnors = live;
    c.inverters = negative;
    c.counter_rns = 1;
    c.parallel_counter_inputs = live;
    c.output_counter_bits = n + static_cast<std::size_t>(std::bit_width(live));
    return c;
  }
  (f.data_pcc == PccKind::comparator ? c.comparators : c.wbgs) += live;
  c.inverters = negative + ((f.inverted_negative_rns && negative > 0) ? n : 0);
  if (f.tree == TreeType::hardwired) {
    c.muxes = d.hardwired()->mux_count();
    if (f.select == SelectSource::counter) {
      c.select_counters = 1;
      c.counter_bits = n;
    } else {
      c.lfsr_rns += d.hardwired()->height();
    }
  } else {
    const auto& bt = *d.biased();
    c.muxes = bt.mux_count();
    c.lfsr_rns += bt.height();
    (bt.select_pcc() == PccKind::comparator ? c.comparators : c.wbgs) += bt.mux_count();
  }
  return c;
}

}  // namespace cemux
