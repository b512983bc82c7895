#pragma once

// Subcommand bodies of the command-line tool. Each takes a parsed config and
// writes one CSV document; argument parsing lives in tools/cemux_cli.cpp.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "cemux/adders.hpp"
#include "cemux/analysis.hpp"
#include "cemux/filterapp.hpp"
#include "cemux/muxtree.hpp"

namespace cemux::cli {

/// Bad flag values detected after parsing (exit code 1).
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline void write_stamp(std::ostream& out, const std::string& invocation, std::uint64_t seed) {
  out << "# " << invocation << '\n';
  out << "# seed " << seed << '\n';
}

inline DesignVariant design_or_throw(const std::string& text) {
  const auto v = parse_design(text);
  if (!v) {
    throw UsageError("unknown design '" + text +
                     "' (expected cemux, cemux_wbg, cemux_biased, basic_hardwired, basic_biased or apc, "
                     "optionally followed by :no_fc,no_ps,lfsr)");
  }
  return *v;
}

inline std::vector<double> load_weights(const std::string& file, const std::vector<double>& inline_values) {
  if (!file.empty()) {
    auto in = open_input(file);
    auto w = read_coefficients(in);
    if (w.empty()) throw std::runtime_error("no weights in '" + file + "'");
    return w;
  }
  if (inline_values.empty()) throw UsageError("give weights with --weights FILE or --values LIST");
  return inline_values;
}

// ---------------------------------------------------------------------------
// quantize

struct QuantizeConfig {
  std::vector<double> weights;
  unsigned m = 8;
};

inline void cmd_quantize(const QuantizeConfig& cfg, std::ostream& out) {
  const auto q = quantize_weights(cfg.weights, cfg.m);
  out << "index,weight,numerator,denominator,quantized\n";
  for (std::size_t i = 0; i < q.size(); ++i) {
    out << i << ',' << format_real(cfg.weights[i]) << ',' << q.numerators[i] << ',' << q.denominator() << ','
        << format_real(q.signed_weight(i)) << '\n';
  }
}

// ---------------------------------------------------------------------------
// sweep-m / sweep-n

enum class WeightMode { uniform, pm_one_over_m, lowpass, file };
enum class ValueMode { uniform, signal };

struct SweepConfig {
  std::vector<std::string> designs;
  std::vector<std::size_t> inputs;   // M values (sweep-m) or a single M (sweep-n)
  std::vector<unsigned> precisions;  // n values (sweep-n) or a single n (sweep-m)
  WeightMode weights = WeightMode::uniform;
  std::vector<double> file_weights;
  ValueMode values = ValueMode::uniform;
  double cutoff = 0.1 * std::numbers::pi;
  double noise_sigma = 0.1;
  std::size_t signal_length = 1000;
  std::size_t runs = 1000;
  std::uint64_t seed = 1;
  bool normalize = false;
};

struct SweepRow {
  std::string design;
  std::size_t inputs = 0;
  std::size_t length = 0;
  AccuracyStats stats;
};

inline InputDistribution sweep_distribution(const SweepConfig& cfg, std::size_t m) {
  InputDistribution dist;
  dist.inputs = m;
  switch (cfg.weights) {
    case WeightMode::uniform: dist.weights = WeightSource::uniform; break;
    case WeightMode::pm_one_over_m: dist.weights = WeightSource::pm_one_over_m; break;
    case WeightMode::lowpass:
      dist.weights = WeightSource::fixed;
      dist.fixed_weights = make_lowpass(m, cfg.cutoff).coefficients;
      break;
    case WeightMode::file:
      if (cfg.file_weights.size() != m) {
        throw UsageError("weight file has " + std::to_string(cfg.file_weights.size()) + " entries but M = " +
                         std::to_string(m));
      }
      dist.weights = WeightSource::fixed;
      dist.fixed_weights = cfg.file_weights;
      break;
  }
  if (cfg.values == ValueMode::signal) {
    dist.values = ValueSource::signal_windows;
    dist.signal = make_noisy_signal(SignalKind::sine_mix, cfg.noise_sigma, cfg.seed,
                                    std::max(cfg.signal_length, m))
                      .noisy.samples;
  } else {
    dist.values = ValueSource::uniform;
  }
  return dist;
}

/// All designs see the same inputs for a given (M, n).
inline std::vector<SweepRow> run_sweep(const SweepConfig& cfg) {
  if (cfg.designs.empty()) throw UsageError("no designs given");
  if (cfg.runs == 0) throw UsageError("--runs must be positive");
  std::vector<DesignVariant> variants;
  for (const auto& d : cfg.designs) variants.push_back(design_or_throw(d));
  std::vector<SweepRow> rows;
  for (std::size_t m : cfg.inputs) {
    if (m == 0) throw UsageError("M must be positive");
    const auto dist = sweep_distribution(cfg, m);
    for (unsigned n : cfg.precisions) {
      const std::uint64_t cell_seed = detail::derive_seed(cfg.seed, m, n);
      for (const auto& v : variants) {
        rows.push_back({v.label(), m, std::size_t{1} << n, accuracy_stats(v, dist, n, cfg.runs, cell_seed)});
      }
    }
  }
  return rows;
}

inline void write_sweep(const std::vector<SweepRow>& rows, bool normalize, std::size_t runs, std::ostream& out) {
  out << "design,M,N,R," << (normalize ? "rmse_normalized" : "rmse") << ",bias,variance\n";
  for (const auto& r : rows) {
    const double scale = normalize ? std::sqrt(static_cast<double>(r.length)) : 1.0;
    out << r.design << ',' << r.inputs << ',' << r.length << ',' << runs << ',' << format_real(r.stats.rmse * scale)
        << ',' << format_real(r.stats.bias) << ',' << format_real(r.stats.variance) << '\n';
  }
}

inline void cmd_sweep_m(const SweepConfig& cfg, std::ostream& out) {
  if (cfg.precisions.size() != 1) throw UsageError("sweep-m takes a single precision n");
  write_sweep(run_sweep(cfg), cfg.normalize, cfg.runs, out);
}

inline void cmd_sweep_n(const SweepConfig& cfg, std::ostream& out) {
  if (cfg.inputs.size() != 1) throw UsageError("sweep-n takes a single M");
  auto rows = run_sweep(cfg);
  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    return a.design != b.design ? a.design < b.design : a.length < b.length;
  });
  write_sweep(rows, cfg.normalize, cfg.runs, out);
}

// ---------------------------------------------------------------------------
// decompose

struct DecomposeConfig {
  SnModel model = SnModel::hypergeometric;
  Sampling sampling = Sampling::precise;
  InputScc scc = InputScc::plus_one;
  std::vector<std::size_t> inputs{2, 4, 8, 16, 32, 64, 128, 256};
  WeightMode weights = WeightMode::pm_one_over_m;
  std::vector<double> file_weights;
  std::size_t stream_length = 256;
  unsigned tree_height = 0;
  std::size_t runs = 2000;
  std::size_t batches = 20;
  std::uint64_t seed = 1;
};

inline void cmd_decompose(const DecomposeConfig& cfg, std::ostream& out) {
  if (cfg.weights == WeightMode::lowpass) throw UsageError("decompose takes uniform, pm or file weights");
  if (cfg.runs < 2) throw UsageError("--runs must be at least 2");
  out << "M,N,R,eps_noise,eps_samp,eps_corr,total,sample_variance,difference_stderr,closed_form\n";
  for (std::size_t m : cfg.inputs) {
    if (m == 0) throw UsageError("M must be positive");
    std::mt19937_64 eng(detail::derive_seed(cfg.seed, m, 0x64));
    ModelConfig mc;
    mc.sn_model = cfg.model;
    mc.sampling = cfg.sampling;
    mc.input_scc = cfg.scc;
    mc.stream_length = cfg.stream_length;
    mc.tree_height = cfg.tree_height;
    InputDistribution dist;
    dist.inputs = m;
    dist.weights = cfg.weights == WeightMode::uniform ? WeightSource::uniform
                   : cfg.weights == WeightMode::file  ? WeightSource::fixed
                                                      : WeightSource::pm_one_over_m;
    if (cfg.weights == WeightMode::file) {
      if (cfg.file_weights.size() != m) throw UsageError("weight file length does not match M");
      dist.fixed_weights = cfg.file_weights;
    }
    mc.weights = detail::draw_weights(dist, eng);
    mc.values = detail::draw_values(dist, 0, eng);
    const auto rep = decompose_variance(mc, cfg.runs, detail::derive_seed(cfg.seed, m), cfg.batches);
    std::string closed;
    if (!(cfg.model == SnModel::hypergeometric && cfg.scc == InputScc::any)) {
      closed = format_real(closed_form_variance(mc));
    }
    out << m << ',' << cfg.stream_length << ',' << cfg.runs << ',' << format_real(rep.eps_noise) << ','
        << format_real(rep.eps_samp) << ',' << format_real(rep.eps_corr) << ',' << format_real(rep.total) << ','
        << format_real(rep.sample_variance) << ',' << format_real(rep.difference_stderr) << ',' << closed << '\n';
  }
}

// ---------------------------------------------------------------------------
// filter

struct FilterConfig {
  std::string signal_file;  // empty: synthetic
  SignalKind synthetic = SignalKind::sine_mix;
  std::size_t length = 1000;
  double noise_sigma = 0.1;
  double full_scale_lo = -1.0;
  double full_scale_hi = 1.0;
  std::string coeff_file;  // empty: windowed-sinc lowpass
  std::size_t taps = 100;
  double cutoff = 0.1 * std::numbers::pi;
  std::vector<std::string> designs{"cemux"};
  unsigned n = 10;
  std::size_t repeats = 1;
  std::uint64_t seed = 1;
};

inline void cmd_filter(const FilterConfig& cfg, std::ostream& out) {
  if (cfg.designs.empty()) throw UsageError("no designs given");
  NoisySignal sig;
  if (!cfg.signal_file.empty()) {
    auto in = open_input(cfg.signal_file);
    const Signal base = normalize_signal(read_signal_csv(in), cfg.full_scale_lo, cfg.full_scale_hi);
    sig = make_noisy_signal(SignalKind::csv, cfg.noise_sigma, cfg.seed, cfg.length, &base);
  } else {
    sig = make_noisy_signal(cfg.synthetic, cfg.noise_sigma, cfg.seed, cfg.length);
  }
  FilterSpec f;
  if (!cfg.coeff_file.empty()) {
    auto in = open_input(cfg.coeff_file);
    f.coefficients = read_coefficients(in);
    if (f.coefficients.empty()) throw std::runtime_error("no coefficients in '" + cfg.coeff_file + "'");
  } else {
    f = make_lowpass(cfg.taps, cfg.cutoff);
  }

  std::vector<std::string> labels;
  std::vector<FilterResult> results;
  for (const auto& name : cfg.designs) {
    const auto v = design_or_throw(name);
    const AdderDesign d(v, f.coefficients, cfg.n);
    labels.push_back(v.label());
    results.push_back(stochastic_fir(d, f, sig.noisy, d.stream_length(), cfg.seed, cfg.repeats));
  }
  const Signal reference = reference_fir(f, sig.noisy);

  out << "# full_scale " << format_real(cfg.full_scale_lo) << ',' << format_real(cfg.full_scale_hi) << '\n';
  out << "index,warmup,noisy,reference";
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < sig.noisy.size(); ++i) {
    out << i << ',' << (is_warmup(i, f.taps()) ? 1 : 0) << ',' << format_real(sig.noisy.samples[i]) << ','
        << format_real(reference.samples[i]);
    for (const auto& r : results) out << ',' << format_real(r.output.samples[i]);
    out << '\n';
  }
  out << "# stats,design,rmse_reference,rmse_target,bias_target,mean_per_sample_rmse\n";
  for (std::size_t k = 0; k < results.size(); ++k) {
    const auto& r = results[k];
    double ps = 0.0;
    for (double v : r.per_sample_rmse) ps += v;
    if (!r.per_sample_rmse.empty()) ps /= static_cast<double>(r.per_sample_rmse.size());
    out << "# stats," << labels[k] << ',' << format_real(r.vs_reference.rmse) << ','
        << format_real(r.vs_target.rmse) << ',' << format_real(r.vs_target.bias) << ',' << format_real(ps) << '\n';
  }
}

// ---------------------------------------------------------------------------
// report

struct ReportConfig {
  std::vector<std::string> designs;
  std::vector<double> weights;
  unsigned n = 10;
};

inline void cmd_report(const ReportConfig& cfg, std::ostream& out) {
  if (cfg.designs.empty()) throw UsageError("no designs given");
  out << "design,M,n,muxes,comparators,wbgs,inverters,xnors,sobol_rns,counter_rns,lfsr_rns,select_counters,"
         "counter_bits,output_counter_bits,parallel_counter_inputs\n";
  for (const auto& name : cfg.designs) {
    const auto v = design_or_throw(name);
    const AdderDesign d(v, cfg.weights, cfg.n);
    const auto c = structural_report(d);
    out << v.label() << ',' << cfg.weights.size() << ',' << cfg.n << ',' << c.muxes << ',' << c.comparators << ','
        << c.wbgs << ',' << c.inverters << ',' << c.xnors << ',' << c.sobol_rns << ',' << c.counter_rns << ','
        << c.lfsr_rns << ',' << c.select_counters << ',' << c.counter_bits << ',' << c.output_counter_bits << ','
        << c.parallel_counter_inputs << '\n';
  }
}

}  // namespace cemux::cli
