// cemux: command-line front end for the stochastic mux adder simulator.
//
// Exit codes: 0 success, 1 usage error, 2 runtime or precondition error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "cemux/cli.hpp"

namespace {

using namespace cemux;
using namespace cemux::cli;

std::string join_argv(int argc, char** argv) {
  std::string s = "cemux";
  for (int i = 1; i < argc; ++i) {
    s += ' ';
    s += argv[i];
  }
  return s;
}

const std::map<std::string, WeightMode> kWeightModes{
    {"uniform", WeightMode::uniform}, {"pm", WeightMode::pm_one_over_m}, {"lowpass", WeightMode::lowpass}};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bit-exact simulator for stochastic-computing mux adders"};
  app.require_subcommand(1);
  app.fallthrough();
  std::uint64_t seed = 1;
  std::string out_path;
  app.add_option("--seed", seed, "Master seed")->capture_default_str();
  app.add_option("-o,--out", out_path, "Output CSV path (default stdout)");

  // quantize
  auto* quant = app.add_subcommand("quantize", "Quantize weights to m-bit fractions.\n"
                                               "CSV: index,weight,numerator,denominator,quantized");
  std::string q_file;
  std::vector<double> q_values;
  unsigned q_bits = 8;
  quant->add_option("--weights", q_file, "Weight file, one value per line")->check(CLI::ExistingFile);
  quant->add_option("--values", q_values, "Inline weights")->delimiter(',');
  quant->add_option("-m,--bits", q_bits, "Fraction bits m")->capture_default_str()->check(CLI::Range(1U, 30U));

  // sweeps
  SweepConfig sweep;
  std::string sw_weights = "uniform";
  std::string sw_values = "uniform";
  std::string sw_file;
  std::vector<unsigned> sw_n;
  auto add_sweep_options = [&](CLI::App* sub) {
    sub->add_option("-d,--design", sweep.designs, "Designs, e.g. cemux cemux:no_fc,no_ps basic_hardwired")
        ->required();
    sub->add_option("-n,--precision", sw_n, "Precision n values (N = 2^n)")->delimiter(',');
    sub->add_option("-M,--inputs", sweep.inputs, "Input counts M")->delimiter(',');
    sub->add_option("--weights", sw_weights, "uniform | pm (random +-1/M) | lowpass")
        ->check(CLI::IsMember({"uniform", "pm", "lowpass"}))
        ->capture_default_str();
    sub->add_option("--weight-file", sw_file, "Fixed weights, one per line")->check(CLI::ExistingFile);
    sub->add_option("--inputs-from", sw_values, "uniform | signal (windows of a noisy sine mix)")
        ->check(CLI::IsMember({"uniform", "signal"}))
        ->capture_default_str();
    sub->add_option("--cutoff", sweep.cutoff, "Lowpass cutoff, rad/sample")->capture_default_str();
    sub->add_option("--noise-sigma", sweep.noise_sigma, "Noise level of the signal inputs")->capture_default_str();
    sub->add_option("-R,--runs", sweep.runs, "Simulation runs per cell")->capture_default_str();
    sub->add_flag("--normalize", sweep.normalize, "Report RMSE * sqrt(N)");
  };
  auto* sweep_m = app.add_subcommand("sweep-m", "RMSE versus input count M.\nCSV: design,M,N,R,rmse,bias,variance");
  add_sweep_options(sweep_m);
  auto* sweep_n = app.add_subcommand("sweep-n", "RMSE versus stream length N = 2^n (rows sorted by design, N).\n"
                                                "CSV: design,M,N,R,rmse,bias,variance");
  add_sweep_options(sweep_n);

  // decompose
  DecomposeConfig dec;
  std::string d_model = "hypergeometric";
  std::string d_sampling = "precise";
  std::string d_scc = "+1";
  std::string d_weights = "pm";
  std::string d_file;
  auto* decompose = app.add_subcommand(
      "decompose", "Monte Carlo variance decomposition.\n"
                   "CSV: M,N,R,eps_noise,eps_samp,eps_corr,total,sample_variance,difference_stderr,closed_form");
  decompose->add_option("--model", d_model, "bernoulli | hypergeometric")
      ->check(CLI::IsMember({"bernoulli", "hypergeometric"}))
      ->capture_default_str();
  decompose->add_option("--sampling", d_sampling, "noisy | precise")
      ->check(CLI::IsMember({"noisy", "precise"}))
      ->capture_default_str();
  decompose->add_option("--scc", d_scc, "Input SCC: 0 | +1 | any")
      ->check(CLI::IsMember({"0", "+1", "1", "any"}))
      ->capture_default_str();
  decompose->add_option("-M,--inputs", dec.inputs, "Input counts M")->delimiter(',');
  decompose->add_option("--weights", d_weights, "uniform | pm")
      ->check(CLI::IsMember({"uniform", "pm"}))
      ->capture_default_str();
  decompose->add_option("--weight-file", d_file, "Fixed weights, one per line")->check(CLI::ExistingFile);
  decompose->add_option("-N,--length", dec.stream_length, "Stream length N (power of two)")->capture_default_str();
  decompose->add_option("--tree-height", dec.tree_height, "Tree height h (default log2 N)");
  decompose->add_option("-R,--runs", dec.runs, "Simulation runs")->capture_default_str();
  decompose->add_option("--batches", dec.batches, "Batches for standard errors")->capture_default_str();

  // filter
  FilterConfig fil;
  std::string f_kind = "sine_mix";
  std::vector<double> f_scale;
  auto* filter = app.add_subcommand(
      "filter", "FIR filtering through stochastic adders.\n"
                "CSV: index,warmup,noisy,reference,<design>... then '# stats' footer rows");
  filter->add_option("--signal", fil.signal_file, "Signal CSV (index,value)")->check(CLI::ExistingFile);
  filter->add_option("--synthetic", f_kind, "sine_mix | chirp")
      ->check(CLI::IsMember({"sine_mix", "chirp"}))
      ->capture_default_str();
  filter->add_option("--length", fil.length, "Samples (synthetic) or truncation (file, 0 = all)")
      ->capture_default_str();
  filter->add_option("--noise-sigma", fil.noise_sigma, "Gaussian noise sigma")->capture_default_str();
  filter->add_option("--full-scale", f_scale, "lo,hi range mapped onto [-1, 1]")->delimiter(',')->expected(2);
  filter->add_option("--coeffs", fil.coeff_file, "Coefficient file, one per line")->check(CLI::ExistingFile);
  filter->add_option("--taps", fil.taps, "Lowpass taps M")->capture_default_str();
  filter->add_option("--cutoff", fil.cutoff, "Lowpass cutoff, rad/sample")->capture_default_str();
  filter->add_option("-d,--design", fil.designs, "Designs to run")->capture_default_str();
  filter->add_option("-n,--precision", fil.n, "Precision n")->capture_default_str();
  filter->add_option("--repeats", fil.repeats, "Runs per output sample")->capture_default_str();

  // report
  ReportConfig rep;
  std::string r_file;
  std::vector<double> r_values;
  auto* report = app.add_subcommand(
      "report", "Structural component counts.\n"
                "CSV: design,M,n,muxes,comparators,wbgs,inverters,xnors,sobol_rns,counter_rns,lfsr_rns,"
                "select_counters,counter_bits,output_counter_bits,parallel_counter_inputs");
  report->add_option("-d,--design", rep.designs, "Designs")->required();
  report->add_option("--weights", r_file, "Weight file, one value per line")->check(CLI::ExistingFile);
  report->add_option("--values", r_values, "Inline weights")->delimiter(',');
  report->add_option("-n,--precision", rep.n, "Precision n")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  std::ostringstream body;
  try {
    write_stamp(body, join_argv(argc, argv), seed);
    if (quant->parsed()) {
      cmd_quantize({load_weights(q_file, q_values), q_bits}, body);
    } else if (sweep_m->parsed() || sweep_n->parsed()) {
      const bool by_m = sweep_m->parsed();
      sweep.seed = seed;
      sweep.weights = kWeightModes.at(sw_weights);
      sweep.values = sw_values == "signal" ? ValueMode::signal : ValueMode::uniform;
      if (!sw_file.empty()) {
        sweep.weights = WeightMode::file;
        sweep.file_weights = load_weights(sw_file, {});
      }
      if (sw_n.empty()) sw_n = by_m ? std::vector<unsigned>{10} : std::vector<unsigned>{5, 6, 7, 8, 9, 10};
      sweep.precisions = sw_n;
      if (sweep.inputs.empty()) {
        sweep.inputs = by_m ? std::vector<std::size_t>{8, 16, 32, 64, 128, 256} : std::vector<std::size_t>{150};
      }
      if (by_m) {
        cmd_sweep_m(sweep, body);
      } else {
        cmd_sweep_n(sweep, body);
      }
    } else if (decompose->parsed()) {
      dec.seed = seed;
      dec.model = d_model == "bernoulli" ? SnModel::bernoulli : SnModel::hypergeometric;
      dec.sampling = d_sampling == "noisy" ? Sampling::noisy : Sampling::precise;
      dec.scc = d_scc == "0" ? InputScc::zero : d_scc == "any" ? InputScc::any : InputScc::plus_one;
      dec.weights = kWeightModes.at(d_weights);
      if (!d_file.empty()) {
        dec.weights = WeightMode::file;
        dec.file_weights = load_weights(d_file, {});
        dec.inputs = {dec.file_weights.size()};
      }
      cmd_decompose(dec, body);
    } else if (filter->parsed()) {
      fil.seed = seed;
      fil.synthetic = f_kind == "chirp" ? SignalKind::chirp : SignalKind::sine_mix;
      if (!f_scale.empty()) {
        fil.full_scale_lo = f_scale[0];
        fil.full_scale_hi = f_scale[1];
      }
      if (!fil.signal_file.empty() && filter->count("--length") == 0) fil.length = 0;
      cmd_filter(fil, body);
    } else if (report->parsed()) {
      rep.weights = load_weights(r_file, r_values);
      cmd_report(rep, body);
    }
  } catch (const UsageError& e) {
    std::cerr << "cemux: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "cemux: error: " << e.what() << '\n';
    return 2;
  }

  if (out_path.empty()) {
    std::cout << body.str();
  } else {
    std::ofstream out(out_path);
    if (!out) {
      std::cerr << "cemux: error: cannot write '" << out_path << "'\n";
      return 2;
    }
    out << body.str();
  }
  return 0;
}
