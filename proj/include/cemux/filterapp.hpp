#pragma once

// FIR filtering through stochastic adders, plus signal and coefficient I/O.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cemux/adders.hpp"
#include "cemux/analysis.hpp"
#include "cemux/detail/random.hpp"

namespace cemux {

struct Signal {
  std::vector<double> samples;
  double sample_rate = 360.0;  // informational only
  double full_scale_lo = -1.0;
  double full_scale_hi = 1.0;

  [[nodiscard]] std::size_t size() const noexcept { return samples.size(); }
};

struct FilterSpec {
  std::vector<double> coefficients;

  [[nodiscard]] std::size_t taps() const noexcept { return coefficients.size(); }
  [[nodiscard]] double mass() const {
    double s = 0.0;
    for (double h : coefficients) s += std::abs(h);
    return s;
  }
};

/// Affine map of [lo, hi] onto [-1, 1]. The range is kept on the signal.
inline Signal normalize_signal(std::vector<double> raw, double lo, double hi) {
  if (!(hi > lo)) throw std::invalid_argument("full-scale range must satisfy lo < hi");
  Signal s;
  s.full_scale_lo = lo;
  s.full_scale_hi = hi;
  s.samples = std::move(raw);
  for (double& v : s.samples) {
    v = 2.0 * (v - lo) / (hi - lo) - 1.0;
    if (v < -1.0 || v > 1.0) throw std::domain_error("sample outside the declared full-scale range");
  }
  return s;
}

/// Direct-form convolution with zero history before sample 0.
inline Signal reference_fir(const FilterSpec& f, const Signal& s) {
  Signal out = s;
  const std::size_t m = f.taps();
  for (std::size_t i = 0; i < s.size(); ++i) {
    detail::CompensatedSum acc;
    for (std::size_t j = 0; j < m && j <= i; ++j) acc += f.coefficients[j] * s.samples[i - j];
    out.samples[i] = acc.value();
  }
  return out;
}

inline bool is_warmup(std::size_t index, std::size_t taps) noexcept { return index + 1 < taps; }

/// Input window of output sample i: x_j = s[i - j], zero before the start.
inline std::vector<double> fir_window(const Signal& s, std::size_t i, std::size_t taps) {
  std::vector<double> x(taps, 0.0);
  for (std::size_t j = 0; j < taps && j <= i; ++j) x[j] = s.samples[i - j];
  return x;
}

struct FilterResult {
  Signal output;                    ///< rescaled estimates of the first repeat
  Signal reference;                 ///< reference_fir output
  std::vector<bool> warmup;         ///< first M - 1 samples
  AccuracyStats vs_reference;       ///< output units, all samples and repeats
  AccuracyStats vs_target;          ///< adder units (quantized target), all samples and repeats
  std::vector<double> per_sample_rmse;  ///< adder units, over repeats of each sample
};

/// Filters `s` sample by sample. Sample i, repeat k runs with seed
/// derive_seed(seed, i, k). Output values are estimate * sum|h|.
inline FilterResult stochastic_fir(const AdderDesign& d, const FilterSpec& f, const Signal& s,
                                   std::size_t n_cycles, std::uint64_t seed, std::size_t repeats = 1) {
  if (d.weights() != f.coefficients) throw std::invalid_argument("design weights differ from the filter");
  if (repeats == 0) throw std::invalid_argument("need at least one repeat");
  for (double v : s.samples) {
    if (v < -1.0 || v > 1.0) {
      throw std::domain_error("sample outside [-1, 1]; normalise the signal to a full-scale range first");
    }
  }
  const double mass = f.mass();
  FilterResult res;
  res.reference = reference_fir(f, s);
  res.output = s;
  res.warmup.resize(s.size());
  res.per_sample_rmse.resize(s.size());
  std::vector<double> err_ref;
  std::vector<double> err_target;
  err_ref.reserve(s.size() * repeats);
  err_target.reserve(s.size() * repeats);
  for (std::size_t i = 0; i < s.size(); ++i) {
    res.warmup[i] = is_warmup(i, f.taps());
    const auto x = fir_window(s, i, f.taps());
    double sq = 0.0;
    for (std::size_t k = 0; k < repeats; ++k) {
      const auto rep = run_adder(d, x, n_cycles, detail::derive_seed(seed, i, k));
      if (k == 0) res.output.samples[i] = rep.estimate * mass;
      err_ref.push_back(rep.estimate * mass - res.reference.samples[i]);
      err_target.push_back(rep.error);
      sq += rep.error * rep.error;
    }
    res.per_sample_rmse[i] = std::sqrt(sq / static_cast<double>(repeats));
  }
  if (!s.samples.empty()) {
    res.vs_reference = summarize_errors(err_ref);
    res.vs_target = summarize_errors(err_target);
  }
  return res;
}

enum class SignalKind { sine_mix, chirp, csv };

inline std::string_view to_string(SignalKind k) {
  switch (k) {
    case SignalKind::sine_mix: return "sine_mix";
    case SignalKind::chirp: return "chirp";
    case SignalKind::csv: return "csv";
  }
  return "?";
}

struct NoisySignal {
  Signal clean;
  Signal noisy;
};

/// Deterministic base waveform plus seeded white Gaussian noise, clamped to
/// [-1, 1]. For `csv` the base is `base` (already normalised), truncated or
/// used whole when `length` is 0.
inline NoisySignal make_noisy_signal(SignalKind kind, double noise_sigma, std::uint64_t seed,
                                     std::size_t length, const Signal* base = nullptr) {
  if (!(noise_sigma >= 0.0)) throw std::invalid_argument("noise sigma must be >= 0");
  constexpr double two_pi = 2.0 * std::numbers::pi;
  NoisySignal out;
  auto& c = out.clean.samples;
  switch (kind) {
    case SignalKind::sine_mix:
      c.resize(length);
      for (std::size_t k = 0; k < length; ++k) {
        const auto t = static_cast<double>(k);
        c[k] = 0.45 * std::sin(two_pi * 0.004 * t) + 0.25 * std::sin(two_pi * 0.011 * t + 0.7) +
               0.1 * std::sin(two_pi * 0.023 * t + 1.3);
      }
      break;
    case SignalKind::chirp: {
      c.resize(length);
      const double f0 = 0.001;
      const double f1 = 0.04;
      const double span = length > 1 ? static_cast<double>(length - 1) : 1.0;
      for (std::size_t k = 0; k < length; ++k) {
        const auto t = static_cast<double>(k);
        c[k] = 0.7 * std::sin(two_pi * (f0 * t + 0.5 * (f1 - f0) * t * t / span));
      }
      break;
    }
    case SignalKind::csv:
      if (base == nullptr) throw std::invalid_argument("csv signal kind needs a loaded signal");
      out.clean = *base;
      if (length != 0 && length < c.size()) c.resize(length);
      break;
  }
  out.noisy = out.clean;
  std::mt19937_64 eng(detail::derive_seed(seed, 0x6e6f697365ULL));
  for (double& v : out.noisy.samples) {
    v = std::clamp(v + noise_sigma * detail::standard_normal(eng), -1.0, 1.0);
  }
  return out;
}

/// Hamming-windowed sinc lowpass, cutoff in rad/sample, DC gain 1.
inline FilterSpec make_lowpass(std::size_t taps, double cutoff) {
  if (taps == 0) throw std::invalid_argument("lowpass needs at least one tap");
  if (!(cutoff > 0.0 && cutoff < std::numbers::pi)) throw std::invalid_argument("cutoff must lie in (0, pi)");
  FilterSpec f;
  f.coefficients.resize(taps);
  if (taps == 1) {
    f.coefficients[0] = 1.0;
    return f;
  }
  const double centre = 0.5 * static_cast<double>(taps - 1);
  double sum = 0.0;
  for (std::size_t j = 0; j < taps; ++j) {
    const double t = static_cast<double>(j) - centre;
    const double sinc = t == 0.0 ? cutoff / std::numbers::pi : std::sin(cutoff * t) / (std::numbers::pi * t);
    const double window =
        0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(taps - 1));
    f.coefficients[j] = sinc * window;
    sum += f.coefficients[j];
  }
  for (double& h : f.coefficients) h /= sum;
  return f;
}

// ---------------------------------------------------------------------------
// Files

inline std::string format_real(double v) {
  std::ostringstream os;
  os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
  return os.str();
}

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_real(const std::string& text, std::size_t line) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != text.size()) {
    throw std::runtime_error("line " + std::to_string(line) + ": not a number: '" + text + "'");
  }
  return v;
}

}  // namespace detail

/// Reads `index,value` rows after one header line. Raw values are returned
/// unnormalised.
inline std::vector<double> read_signal_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty signal file");
  if (detail::trim(line) != "index,value") throw std::runtime_error("signal file must start with 'index,value'");
  std::vector<double> values;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    const auto comma = t.find(',');
    if (comma == std::string::npos) throw std::runtime_error("line " + std::to_string(lineno) + ": expected index,value");
    values.push_back(detail::parse_real(detail::trim(std::string_view(t).substr(comma + 1)), lineno));
  }
  return values;
}

inline void write_signal_csv(std::ostream& out, const Signal& s) {
  out << "index,value\n";
  for (std::size_t i = 0; i < s.size(); ++i) out << i << ',' << format_real(s.samples[i]) << '\n';
}

/// One coefficient per line; blank lines and '#' comments are skipped.
inline std::vector<double> read_coefficients(std::istream& in) {
  std::vector<double> values;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    values.push_back(detail::parse_real(t, lineno));
  }
  return values;
}

inline void write_coefficients(std::ostream& out, const FilterSpec& f) {
  for (double h : f.coefficients) out << format_real(h) << '\n';
}

inline std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  return in;
}

}  // namespace cemux
