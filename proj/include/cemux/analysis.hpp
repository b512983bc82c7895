#pragma once

// Accuracy statistics, the three-component mux variance decomposition and the
// closed-form variances of bipolar mux adders.
//
// Inside this header bipolar bits are read as -1/+1 (logical 0 -> -1), and
// every input bit is folded by the sign of its weight, so a stream's mean bit
// equals s_i * mu_i.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <bit>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cemux/adders.hpp"
#include "cemux/bitstream.hpp"
#include "cemux/detail/random.hpp"
#include "cemux/detail/summation.hpp"
#include "cemux/muxtree.hpp"
#include "cemux/rns.hpp"

namespace cemux {

namespace detail {
__extension__ typedef __int128 int128_t;
}  // namespace detail

// ---------------------------------------------------------------------------
// Accuracy statistics over simulation runs

struct AccuracyStats {
  double rmse = 0.0;
  double bias = 0.0;      ///< mean error
  double variance = 0.0;  ///< sample variance of the error (R - 1 denominator)
  double mse = 0.0;       ///< mean squared error
  std::size_t runs = 0;
};

inline AccuracyStats summarize_errors(std::span<const double> errors) {
  if (errors.empty()) throw std::invalid_argument("no runs to summarise");
  detail::CompensatedSum sum;
  detail::CompensatedSum sq;
  for (double e : errors) {
    sum += e;
    sq += e * e;
  }
  const auto r = static_cast<double>(errors.size());
  AccuracyStats s;
  s.runs = errors.size();
  s.bias = sum.value() / r;
  s.mse = sq.value() / r;
  s.rmse = std::sqrt(s.mse);
  if (errors.size() > 1) {
    detail::CompensatedSum dev;
    for (double e : errors) dev += (e - s.bias) * (e - s.bias);
    s.variance = dev.value() / (r - 1.0);
  }
  return s;
}

enum class WeightSource { fixed, uniform, pm_one_over_m };
enum class ValueSource { fixed, uniform, signal_windows };

/// How weights and input values are drawn for each run.
struct InputDistribution {
  std::size_t inputs = 0;
  WeightSource weights = WeightSource::uniform;
  ValueSource values = ValueSource::uniform;
  std::vector<double> fixed_weights;
  std::vector<double> fixed_values;
  std::vector<double> signal;  ///< for signal_windows: run r reads a window ending at sample M-1+r
};

namespace detail {

inline std::vector<double> draw_weights(const InputDistribution& dist, std::mt19937_64& eng) {
  const std::size_t m = dist.inputs;
  std::vector<double> w(m);
  switch (dist.weights) {
    case WeightSource::fixed:
      return dist.fixed_weights;
    case WeightSource::uniform:
      // Resample the (measure-zero) all-zero draw.
      do {
        for (auto& v : w) v = uniform_real(eng, -1.0, 1.0);
      } while (std::all_of(w.begin(), w.end(), [](double v) { return v == 0.0; }));
      return w;
    case WeightSource::pm_one_over_m:
      for (auto& v : w) v = ((eng() >> 63) != 0 ? -1.0 : 1.0) / static_cast<double>(m);
      return w;
  }
  return w;
}

inline std::vector<double> draw_values(const InputDistribution& dist, std::size_t run,
                                       std::mt19937_64& eng) {
  const std::size_t m = dist.inputs;
  std::vector<double> x(m);
  switch (dist.values) {
    case ValueSource::fixed:
      return dist.fixed_values;
    case ValueSource::uniform:
      for (auto& v : x) v = uniform_real(eng, -1.0, 1.0);
      return x;
    case ValueSource::signal_windows: {
      if (dist.signal.size() < m) throw std::invalid_argument("signal shorter than the filter");
      const std::size_t span = dist.signal.size() - m + 1;
      const std::size_t pos = (m - 1) + run % span;
      for (std::size_t j = 0; j < m; ++j) x[j] = dist.signal[pos - j];
      return x;
    }
  }
  return x;
}

}  // namespace detail

/// Runs R seeded simulations and scores each against its own target.
/// Weights/values are redrawn per run unless fixed.
inline AccuracyStats accuracy_stats(const DesignVariant& variant, const InputDistribution& dist,
                                    unsigned n, std::size_t runs, std::uint64_t seed) {
  if (runs == 0) throw std::invalid_argument("need at least one run");
  if (dist.inputs == 0) throw std::invalid_argument("need at least one input");
  const std::size_t n_cycles = std::size_t{1} << n;
  std::optional<AdderDesign> fixed;
  if (dist.weights == WeightSource::fixed) fixed.emplace(variant, dist.fixed_weights, n);
  std::vector<double> errors;
  errors.reserve(runs);
  for (std::size_t r = 0; r < runs; ++r) {
    std::mt19937_64 eng(detail::derive_seed(seed, r, 7));
    std::optional<AdderDesign> drawn;
    if (!fixed) drawn.emplace(variant, detail::draw_weights(dist, eng), n);
    const AdderDesign& d = fixed ? *fixed : *drawn;
    const auto x = detail::draw_values(dist, r, eng);
    errors.push_back(run_adder(d, x, n_cycles, detail::derive_seed(seed, r, 9)).error);
  }
  return summarize_errors(errors);
}

// ---------------------------------------------------------------------------
// Stochastic models of mux adders

enum class SnModel { bernoulli, hypergeometric };
enum class Sampling { noisy, precise };
enum class InputScc { zero, plus_one, any };

inline std::string to_string(SnModel m) { return m == SnModel::bernoulli ? "bernoulli" : "hypergeometric"; }
inline std::string to_string(Sampling s) { return s == Sampling::noisy ? "noisy" : "precise"; }
inline std::string to_string(InputScc c) {
  switch (c) {
    case InputScc::zero: return "0";
    case InputScc::plus_one: return "+1";
    case InputScc::any: return "any";
  }
  return "?";
}

/// One row configuration of the model study. N must be a power of two; the
/// data width is n = log2 N and the hardwired tree height h defaults to n.
struct ModelConfig {
  SnModel sn_model = SnModel::hypergeometric;
  Sampling sampling = Sampling::precise;
  InputScc input_scc = InputScc::plus_one;
  std::vector<double> weights;
  std::vector<double> values;
  std::size_t stream_length = 256;
  unsigned tree_height = 0;
};

/// Quantized quantities the closed forms and the simulator share.
struct ResolvedModel {
  unsigned n = 0;
  unsigned h = 0;
  std::size_t stream_length = 0;
  QuantizedWeights q;
  std::vector<std::uint32_t> thresholds;  ///< comparator thresholds of the X_i
  std::vector<double> w;                  ///< |w~_i|
  std::vector<double> mu;                 ///< quantized mu_{X_i}
  std::vector<int> s;                     ///< sign(w_i)
  std::vector<std::uint32_t> owner;       ///< select word -> input
};

inline ResolvedModel resolve_model(const ModelConfig& cfg) {
  if (cfg.weights.size() != cfg.values.size() || cfg.weights.empty()) {
    throw std::invalid_argument("model needs matching, non-empty weights and values");
  }
  if (!std::has_single_bit(cfg.stream_length) || cfg.stream_length < 2) {
    throw std::invalid_argument("stream length N must be a power of two >= 2");
  }
  ResolvedModel r;
  r.stream_length = cfg.stream_length;
  r.n = static_cast<unsigned>(std::countr_zero(cfg.stream_length));
  r.h = cfg.tree_height == 0 ? r.n : cfg.tree_height;
  if (r.h > r.n) throw std::invalid_argument("tree height exceeds log2 N");
  r.q = quantize_weights(cfg.weights, r.h);
  const auto tree = build_hardwired_tree(r.q, r.h);
  r.owner = tree.owner_table();
  for (std::size_t i = 0; i < cfg.values.size(); ++i) {
    const auto b = quantize_to_probability({cfg.values[i], SnFormat::bipolar}, r.n);
    r.thresholds.push_back(b);
    r.mu.push_back(bipolar_from_threshold(b, r.n));
    r.w.push_back(r.q.magnitude(i));
    r.s.push_back(r.q.signs[i]);
  }
  return r;
}

/// Closed-form output variance for the configured row.
///
///   Bernoulli, noisy:        (1 - (sum w s mu)^2) / N
///   Bernoulli, precise:      (1 - sum w mu^2) / N
///   hypergeometric, noisy, SCC 0:    (1 - (sum w s mu)^2 - sum w^2 (1 - mu^2)) / N
///   hypergeometric, noisy, SCC +1:   sum_i sum_{j<i} 2 w_(i) w_(j) d_ij / N
///   hypergeometric, precise, SCC 0:  sum w (1 - w)(1 - mu^2) / (N - 1)
///   hypergeometric, precise, SCC +1: sum_i sum_{j<i} w_(i) w_(j) d_ij (2 - d_ij) / (N - 1)
///
/// where w = |w~|, (i) orders the folded values s_i mu_i from largest to
/// smallest and d_ij = s_(j) mu_(j) - s_(i) mu_(i) >= 0.
inline double closed_form_variance(const ResolvedModel& r, SnModel model, Sampling sampling, InputScc scc) {
  const auto m = r.w.size();
  const auto big_n = static_cast<double>(r.stream_length);
  double mean = 0.0;
  for (std::size_t i = 0; i < m; ++i) mean += r.w[i] * r.s[i] * r.mu[i];

  if (model == SnModel::bernoulli) {
    if (sampling == Sampling::noisy) return (1.0 - mean * mean) / big_n;
    double second = 0.0;
    for (std::size_t i = 0; i < m; ++i) second += r.w[i] * r.mu[i] * r.mu[i];
    return (1.0 - second) / big_n;
  }
  if (scc == InputScc::any) {
    throw std::invalid_argument("no closed form for hypergeometric/" + to_string(sampling) +
                                " inputs without a declared input SCC (0 or +1)");
  }
  if (scc == InputScc::zero) {
    if (sampling == Sampling::noisy) {
      double self = 0.0;
      for (std::size_t i = 0; i < m; ++i) self += r.w[i] * r.w[i] * (1.0 - r.mu[i] * r.mu[i]);
      return (1.0 - mean * mean - self) / big_n;
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < m; ++i) acc += r.w[i] * (1.0 - r.w[i]) * (1.0 - r.mu[i] * r.mu[i]);
    return acc / (big_n - 1.0);
  }
  // SCC +1: order statistics of the folded values, largest first.
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return r.s[a] * r.mu[a] > r.s[b] * r.mu[b];
  });
  double acc = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const std::size_t oi = order[i];
      const std::size_t oj = order[j];
      const double d = r.s[oj] * r.mu[oj] - r.s[oi] * r.mu[oi];
      const double ww = r.w[oi] * r.w[oj];
      acc += sampling == Sampling::noisy ? 2.0 * ww * d : ww * d * (2.0 - d);
    }
  }
  return sampling == Sampling::noisy ? acc / big_n : acc / (big_n - 1.0);
}

inline double closed_form_variance(const ModelConfig& cfg) {
  return closed_form_variance(resolve_model(cfg), cfg.sn_model, cfg.sampling, cfg.input_scc);
}

/// Streams and counts of one model run.
struct ModelRun {
  double estimate = 0.0;          ///< bipolar estimate of Z
  SamplingCounts counts;
  std::vector<Bitstream> y;       ///< sign-folded mux data inputs
};

/// Simulates one run of the model circuit:
///   hypergeometric -> comparator SNGs on a fresh random permutation (shared
///                     for SCC +1, one per input for SCC 0),
///   Bernoulli      -> comparator SNGs on i.i.d. words (shared or per input),
///   noisy          -> one independent fair bit per tree level per cycle,
///   precise        -> the MSBs of a counter.
/// SCC +1 uses complemented wiring for negative weights.
inline ModelRun simulate_model_run(const ResolvedModel& r, const ModelConfig& cfg, std::uint64_t seed) {
  if (r.n < kMinRnsWidth) throw std::invalid_argument("simulation needs N >= 8");
  if (cfg.sn_model == SnModel::hypergeometric && cfg.input_scc == InputScc::any) {
    throw std::invalid_argument("hypergeometric simulation needs input SCC 0 or +1");
  }
  const std::size_t m = r.w.size();
  const std::size_t big_n = r.stream_length;
  const bool shared = cfg.input_scc == InputScc::plus_one;
  const RnsKind kind = cfg.sn_model == SnModel::hypergeometric ? RnsKind::permutation : RnsKind::bernoulli;

  std::vector<RnsState> sources;
  const std::size_t n_sources = shared ? 1 : m;
  sources.reserve(n_sources);
  for (std::size_t k = 0; k < n_sources; ++k) {
    sources.emplace_back(RnsSpec{kind, r.n, detail::derive_seed(seed, 1, k)});
  }
  std::mt19937_64 select_eng(detail::derive_seed(seed, 2));

  ModelRun run;
  run.counts.assign(m, 0);
  run.y.assign(m, Bitstream(big_n));
  std::vector<std::uint32_t> words(n_sources);
  std::int64_t acc = 0;
  const unsigned shift = r.n - r.h;
  const std::uint64_t hmask = (std::uint64_t{1} << r.h) - 1;
  for (std::size_t t = 0; t < big_n; ++t) {
    for (std::size_t k = 0; k < n_sources; ++k) words[k] = sources[k].next();
    for (std::size_t i = 0; i < m; ++i) {
      std::uint32_t word = words[shared ? 0 : i];
      const bool negative = r.s[i] < 0;
      if (shared && negative) word = complement_output(word, r.n);
      const bool x = comparator_bit(word, r.thresholds[i]);
      run.y[i].set(t, negative ? !x : x);
    }
    std::uint64_t sel_word = 0;
    if (cfg.sampling == Sampling::precise) {
      sel_word = (t >> shift) & hmask;
    } else {
      sel_word = select_eng() >> (64 - r.h);
    }
    const std::size_t sel = r.owner[sel_word];
    ++run.counts[sel];
    acc += run.y[sel][t] ? 1 : -1;
  }
  run.estimate = static_cast<double>(acc) / static_cast<double>(big_n);
  return run;
}

/// Monte Carlo estimates of the three variance components.
struct VarianceReport {
  double eps_noise = 0.0;
  double eps_samp = 0.0;
  double eps_corr = 0.0;
  double total = 0.0;                  ///< eps_noise + eps_samp + eps_corr
  double sample_variance = 0.0;        ///< direct variance of the estimates
  double sample_variance_stderr = 0.0;
  double difference_stderr = 0.0;      ///< standard error of (total - sample_variance)
  double mean_estimate = 0.0;
  std::size_t runs = 0;
  std::size_t inputs = 0;
  std::vector<double> expected_counts;   ///< E[C_i]
  std::vector<double> count_covariance;  ///< Cov(C_i, C_j), row-major M x M
  std::vector<double> mean_bits;         ///< E[X_{i,k}] (folded, -1/+1)
  std::vector<double> bit_products;      ///< E[X_{i,k} X_{j,l}], distinct cycles
  std::vector<double> bit_covariance;    ///< Cov(X_{i,k}, X_{j,l}), distinct cycles

  [[nodiscard]] double difference() const noexcept { return total - sample_variance; }
};

/// Integer sums over runs from which the components are estimated. The
/// bit moments use every pair of distinct cycles of each recorded stream,
/// which is exact under both exchangeable SN models.
class DecompositionAccumulator {
 public:
  DecompositionAccumulator(std::size_t inputs, std::size_t stream_length)
      : m_(inputs),
        n_(stream_length),
        sum_c_(inputs, 0),
        sum_s_(inputs, 0),
        sum_cc_(inputs * inputs, 0),
        sum_ss_(inputs * inputs, 0),
        sum_d_(inputs * inputs, 0) {}

  void add(const ModelRun& run) {
    if (run.y.size() != m_ || run.counts.size() != m_) throw std::invalid_argument("run size mismatch");
    ++runs_;
    estimates_.push_back(run.estimate);
    std::vector<std::int64_t> s(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      s[i] = 2 * static_cast<std::int64_t>(run.y[i].ones()) - static_cast<std::int64_t>(n_);
      sum_s_[i] += s[i];
      sum_c_[i] += static_cast<std::int64_t>(run.counts[i]);
    }
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = i; j < m_; ++j) {
        const auto ci = static_cast<std::int64_t>(run.counts[i]);
        const auto cj = static_cast<std::int64_t>(run.counts[j]);
        sum_cc_[i * m_ + j] += ci * cj;
        sum_ss_[i * m_ + j] += s[i] * s[j];
        const std::int64_t d =
            i == j ? static_cast<std::int64_t>(n_)
                   : 2 * static_cast<std::int64_t>(run.y[i].agreements(run.y[j])) - static_cast<std::int64_t>(n_);
        sum_d_[i * m_ + j] += d;
      }
    }
  }

  void merge(const DecompositionAccumulator& o) {
    runs_ += o.runs_;
    estimates_.insert(estimates_.end(), o.estimates_.begin(), o.estimates_.end());
    for (std::size_t i = 0; i < m_; ++i) {
      sum_c_[i] += o.sum_c_[i];
      sum_s_[i] += o.sum_s_[i];
    }
    for (std::size_t k = 0; k < m_ * m_; ++k) {
      sum_cc_[k] += o.sum_cc_[k];
      sum_ss_[k] += o.sum_ss_[k];
      sum_d_[k] += o.sum_d_[k];
    }
  }

  [[nodiscard]] std::size_t runs() const noexcept { return runs_; }

  [[nodiscard]] VarianceReport finalize() const {
    if (runs_ < 2) throw std::invalid_argument("decomposition needs at least two runs");
    VarianceReport rep;
    rep.runs = runs_;
    rep.inputs = m_;
    const auto r = static_cast<double>(runs_);
    const auto big_n = static_cast<double>(n_);
    const auto ri = static_cast<detail::int128_t>(runs_);

    rep.expected_counts.resize(m_);
    rep.mean_bits.resize(m_);
    for (std::size_t i = 0; i < m_; ++i) {
      rep.expected_counts[i] = static_cast<double>(sum_c_[i]) / r;
      rep.mean_bits[i] = static_cast<double>(sum_s_[i]) / (r * big_n);
    }
    rep.count_covariance.assign(m_ * m_, 0.0);
    rep.bit_products.assign(m_ * m_, 0.0);
    rep.bit_covariance.assign(m_ * m_, 0.0);
    for (std::size_t i = 0; i < m_; ++i) {
      for (std::size_t j = i; j < m_; ++j) {
        const std::size_t k = i * m_ + j;
        const detail::int128_t num = ri * sum_cc_[k] - static_cast<detail::int128_t>(sum_c_[i]) * sum_c_[j];
        const double cov = static_cast<double>(num) / (r * (r - 1.0));
        const double prod = static_cast<double>(sum_ss_[k] - sum_d_[k]) / (r * big_n * (big_n - 1.0));
        for (std::size_t kk : {i * m_ + j, j * m_ + i}) {
          rep.count_covariance[kk] = cov;
          rep.bit_products[kk] = prod;
          rep.bit_covariance[kk] = prod - rep.mean_bits[i] * rep.mean_bits[j];
        }
      }
    }

    detail::CompensatedSum noise;
    detail::CompensatedSum samp;
    detail::CompensatedSum corr;
    for (std::size_t i = 0; i < m_; ++i) {
      const double c = rep.expected_counts[i];
      const double rho = rep.bit_products[i * m_ + i];
      const double mu = rep.mean_bits[i];
      noise += c + c * (c - 1.0) * rho - c * c * mu * mu;
      for (std::size_t j = 0; j < m_; ++j) {
        const std::size_t k = i * m_ + j;
        if (rep.count_covariance[k] != 0.0) samp += rep.count_covariance[k] * rep.bit_products[k];
        if (i != j) corr += c * rep.expected_counts[j] * rep.bit_covariance[k];
      }
    }
    const double n2 = big_n * big_n;
    rep.eps_noise = noise.value() / n2;
    rep.eps_samp = samp.value() / n2;
    rep.eps_corr = corr.value() / n2;
    rep.total = rep.eps_noise + rep.eps_samp + rep.eps_corr;

    detail::CompensatedSum es;
    for (double e : estimates_) es += e;
    rep.mean_estimate = es.value() / r;
    detail::CompensatedSum m2;
    detail::CompensatedSum m4;
    for (double e : estimates_) {
      const double dev = e - rep.mean_estimate;
      m2 += dev * dev;
      m4 += dev * dev * dev * dev;
    }
    rep.sample_variance = m2.value() / (r - 1.0);
    const double pop2 = m2.value() / r;
    const double pop4 = m4.value() / r;
    rep.sample_variance_stderr = std::sqrt(std::max(0.0, pop4 - pop2 * pop2) / r);
    return rep;
  }

 private:
  std::size_t m_;
  std::size_t n_;
  std::size_t runs_ = 0;
  std::vector<std::int64_t> sum_c_, sum_s_, sum_cc_, sum_ss_, sum_d_;
  std::vector<double> estimates_;
};

/// Runs R simulations of `cfg` and decomposes the output variance.
/// The standard error of (total - sample variance) comes from `batches`
/// contiguous batches of runs.
inline VarianceReport decompose_variance(const ModelConfig& cfg, std::size_t runs, std::uint64_t seed,
                                         std::size_t batches = 20) {
  if (runs < 2) throw std::invalid_argument("decomposition needs at least two runs");
  const ResolvedModel r = resolve_model(cfg);
  const std::size_t m = r.w.size();
  batches = std::clamp<std::size_t>(batches, 1, runs / 2);
  DecompositionAccumulator all(m, r.stream_length);
  std::vector<double> diffs;
  std::size_t next = 0;
  for (std::size_t b = 0; b < batches; ++b) {
    const std::size_t end = runs * (b + 1) / batches;
    DecompositionAccumulator batch(m, r.stream_length);
    for (; next < end; ++next) batch.add(simulate_model_run(r, cfg, detail::derive_seed(seed, next)));
    if (batches > 1) {
      const VarianceReport br = batch.finalize();
      diffs.push_back(br.difference());
    }
    all.merge(batch);
  }
  VarianceReport rep = all.finalize();
  if (diffs.size() > 1) {
    const double mean = std::accumulate(diffs.begin(), diffs.end(), 0.0) / static_cast<double>(diffs.size());
    double ss = 0.0;
    for (double d : diffs) ss += (d - mean) * (d - mean);
    rep.difference_stderr =
        std::sqrt(ss / static_cast<double>(diffs.size() - 1) / static_cast<double>(diffs.size()));
  }
  return rep;
}

}  // namespace cemux
