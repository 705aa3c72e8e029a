#pragma once

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "shadowup/curve.hpp"
#include "shadowup/decomposition.hpp"
#include "shadowup/error.hpp"
#include "shadowup/eval.hpp"
#include "shadowup/image_io.hpp"
#include "shadowup/parallel.hpp"
#include "shadowup/pipeline.hpp"

namespace shadowup::cli {

enum ExitCode : int { kOk = 0, kFailure = 1, kNotConverged = 2 };

struct Options {
  EnhanceConfig config;
  std::string contrast_on = "value";
  std::vector<std::string> inputs;
  std::string output;
  bool report = false;
  bool dump_layers = false;
  bool baseline = false;
  std::string dump_histogram;

  // eval
  std::string pattern = "two_band";
  double noise_std = 0.05;
  std::size_t seeds = 20;
  std::uint64_t seed_start = 0;
  std::size_t size = 128;
};

namespace detail {

inline void report_error(std::ostream& err, const std::string& code, const std::string& message) {
  err << "shadowup: error[" << code << "]: " << message << "\n";
}

inline std::string derived_output(const std::string& input, const std::string& output_dir, const char* suffix) {
  namespace fs = std::filesystem;
  const fs::path in(input);
  const fs::path dir = output_dir.empty() ? in.parent_path() : fs::path(output_dir);
  return (dir / (in.stem().string() + suffix + in.extension().string())).string();
}

inline std::string sibling(const std::string& path, const std::string& suffix_with_ext) {
  namespace fs = std::filesystem;
  const fs::path p(path);
  return (p.parent_path() / (p.stem().string() + suffix_with_ext)).string();
}

inline std::string histogram_csv(const NoiseAwareHistogram& h) {
  std::string out;
  char line[64];
  for (int i = 0; i < kBins; ++i) {
    std::snprintf(line, sizeof line, "%d,%.12g\n", i, h.p[static_cast<std::size_t>(i)]);
    out += line;
  }
  return out;
}

inline Pattern parse_pattern(const std::string& s) {
  if (s == "ramp") return Pattern::Ramp;
  if (s == "two_band") return Pattern::TwoBand;
  if (s == "checker_in_dark") return Pattern::CheckerInDark;
  throw InvalidParameter("unknown pattern '" + s + "'");
}

// Enhances one file; returns an exit code and reports errors on err.
inline int enhance_one(const Options& opt, const std::string& input, const std::string& output, Method method,
                       unsigned threads, std::ostream& err, std::mutex& err_mutex) {
  EnhanceConfig cfg = opt.config;
  cfg.method = method;
  cfg.threads = threads;
  try {
    const auto img = load_image(input);
    try {
      const auto res = enhance(img, cfg);
      save_image(res.image, output);
      if (opt.report) shadowup::detail::write_file(sibling(output, ".json"), report_to_json(res.report).dump(2) + "\n");
      if (opt.dump_layers) {
        save_image(res.illumination, sibling(output, "_illumination.pgm"));
        save_image(res.reflectance, sibling(output, "_reflectance.pgm"));
      }
      if (!opt.dump_histogram.empty()) shadowup::detail::write_file(opt.dump_histogram, histogram_csv(res.histogram));
    } catch (const EnhanceAborted& e) {
      if (opt.report) shadowup::detail::write_file(sibling(output, ".json"), report_to_json(e.report()).dump(2) + "\n");
      throw;
    }
    return kOk;
  } catch (const ConvergenceError& e) {
    std::lock_guard lock(err_mutex);
    report_error(err, e.code(), input + ": " + e.what());
    return kNotConverged;
  } catch (const Error& e) {
    std::lock_guard lock(err_mutex);
    report_error(err, e.code(), e.what());
    return kFailure;
  }
}

inline int run_enhance(const Options& opt, Method method, std::ostream& err) {
  const char* suffix = method == Method::Proposed ? "_enhanced" : "_baseline";
  std::vector<std::string> outputs;
  if (opt.inputs.size() == 1 && !opt.output.empty()) {
    outputs.push_back(opt.output);
  } else {
    if (!opt.output.empty()) std::filesystem::create_directories(opt.output);
    for (const auto& in : opt.inputs) outputs.push_back(derived_output(in, opt.output, suffix));
  }
  if (opt.inputs.size() > 1 && !opt.dump_histogram.empty())
    throw InvalidParameter("--dump-histogram needs a single input");

  // Images are spread over the workers; each image then runs single-threaded.
  const unsigned workers = resolve_threads(opt.config.threads);
  const bool batch = opt.inputs.size() > 1;
  std::vector<int> codes(opt.inputs.size(), kOk);
  std::mutex err_mutex;
  parallel_for(opt.inputs.size(), batch ? workers : 1, [&](std::size_t i) {
    codes[i] = enhance_one(opt, opt.inputs[i], outputs[i], method, batch ? 1 : opt.config.threads, err, err_mutex);
  });
  int worst = kOk;
  for (int c : codes)
    if (c == kNotConverged || (c == kFailure && worst == kOk)) worst = c;
  return worst;
}

inline int run_curve(const Options& opt) {
  if (opt.inputs.size() != 1) throw InvalidParameter("curve takes exactly one input");
  if (opt.output.empty()) throw InvalidParameter("curve needs -o <file.csv>");
  EnhanceConfig cfg = opt.config;
  cfg.method = opt.baseline ? Method::AgcwdPlain : Method::Proposed;
  const auto res = enhance(load_image(opt.inputs.front()), cfg);
  export_curve(res.curve, opt.output);
  return kOk;
}

inline int run_decompose(const Options& opt) {
  if (opt.inputs.size() != 1) throw InvalidParameter("decompose takes exactly one input");
  const std::string& input = opt.inputs.front();
  const std::string prefix =
      opt.output.empty() ? (std::filesystem::path(input).parent_path() / std::filesystem::path(input).stem()).string()
                         : opt.output;
  const auto hsv = rgb_to_hsv(load_image(input));
  SolverConfig solver = opt.config.solver;
  solver.threads = opt.config.threads;
  const auto d = decompose(hsv.channel(2), solver);
  save_image(d.illumination, prefix + "_illumination.pgm");
  save_image(d.reflectance, prefix + "_reflectance.pgm");
  return kOk;
}

inline int run_eval(const Options& opt, std::ostream& out) {
  std::string csv = metrics_csv_header();
  double gain = 0.0, proposed_std = 0.0, agcwd_std = 0.0;
  std::size_t wins = 0;
  for (std::size_t k = 0; k < opt.seeds; ++k) {
    SyntheticSpec spec{parse_pattern(opt.pattern), opt.noise_std, opt.seed_start + k, opt.size};
    const auto rows = evaluate(spec, opt.config);
    for (const auto& r : rows) csv += metrics_csv_row(r);
    gain += rows[1].psnr - rows[2].psnr;
    proposed_std += rows[1].dark_std;
    agcwd_std += rows[2].dark_std;
    wins += rows[1].dark_std < rows[2].dark_std ? 1 : 0;
  }
  if (opt.output.empty()) {
    out << csv;
  } else {
    shadowup::detail::write_file(opt.output, csv);
    const double n = static_cast<double>(std::max<std::size_t>(opt.seeds, 1));
    out << "seeds: " << opt.seeds << "\n"
        << "mean psnr gain (proposed - agcwd): " << gain / n << " dB\n"
        << "mean dark std: proposed " << proposed_std / n << ", agcwd " << agcwd_std / n << "\n"
        << "proposed darker-noise wins: " << wins << "/" << opt.seeds << "\n";
  }
  return kOk;
}

}  // namespace detail

// Entry point of the command-line front end. Exit codes: 0 success,
// 1 usage/I/O/parameter error, 2 solver did not converge.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Noise-aware shadow-up contrast enhancement", "shadowup"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "Flat key=value configuration file (flags override it)");

  Options opt;
  auto& cfg = opt.config;
  app.add_option("--percentile", cfg.percentile, "Percentile defining the bright tail for the threshold")
      ->capture_default_str();
  app.add_option("--alpha", cfg.alpha, "AGCWD weighting exponent")->capture_default_str();
  app.add_option("--lambda", cfg.solver.lambda, "Illumination smoothness weight")->capture_default_str();
  app.add_option("--epsilon", cfg.solver.epsilon, "Gradient floor in the smoothness weights")->capture_default_str();
  app.add_option("--sigma", cfg.sigma, "Gaussian sigma of the local-contrast estimate")->capture_default_str();
  app.add_option("--noise-a", cfg.noise.a, "Signal-dependent noise coefficient a in sqrt(a*I + b)")
      ->capture_default_str();
  app.add_option("--noise-b", cfg.noise.b, "Signal-independent noise coefficient b in sqrt(a*I + b)")
      ->capture_default_str();
  app.add_option("--tolerance", cfg.solver.tolerance, "Relative residual target of the illumination solve")
      ->capture_default_str();
  app.add_option("--max-iters", cfg.solver.max_iters, "Iteration cap of the illumination solve")
      ->capture_default_str();
  app.add_option("--threads", cfg.threads, "Worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--contrast-on", opt.contrast_on, "Layer the noise gate measures contrast on")
      ->check(CLI::IsMember({"value", "illumination"}))
      ->capture_default_str();
  app.add_option("-o,--output", opt.output, "Output file (single input) or directory (batch)");
  app.add_flag("--report", opt.report, "Write a JSON report next to each output image")->capture_default_str();
  app.add_flag("--dump-layers", opt.dump_layers, "Write illumination and reflectance PGMs next to the output")
      ->capture_default_str();
  app.add_flag("--baseline", opt.baseline, "Use plain full-range AGCWD instead of the proposed pipeline")
      ->capture_default_str();
  app.add_option("--dump-histogram", opt.dump_histogram, "Write the noise-aware histogram as CSV (bin,probability)");

  auto* enhance_cmd = app.add_subcommand("enhance", "Enhance one or more images");
  enhance_cmd->add_option("inputs", opt.inputs, "Input PNG/PPM files")->required();
  auto* baseline_cmd = app.add_subcommand("baseline", "Enhance with plain AGCWD (comparison baseline)");
  baseline_cmd->add_option("inputs", opt.inputs, "Input PNG/PPM files")->required();
  auto* curve_cmd = app.add_subcommand("curve", "Export the mapping curve designed for an image as CSV");
  curve_cmd->add_option("input", opt.inputs, "Input PNG/PPM file")->required();
  auto* decompose_cmd = app.add_subcommand("decompose", "Write illumination/reflectance layers as PGM");
  decompose_cmd->add_option("input", opt.inputs, "Input PNG/PPM file")->required();
  auto* eval_cmd = app.add_subcommand("eval", "Run the synthetic noise-robustness evaluation");
  eval_cmd->add_option("--pattern", opt.pattern, "Synthetic scene")
      ->check(CLI::IsMember({"ramp", "two_band", "checker_in_dark"}))
      ->capture_default_str();
  eval_cmd->add_option("--noise-std", opt.noise_std, "Std of the added Gaussian noise")->capture_default_str();
  eval_cmd->add_option("--seeds", opt.seeds, "Number of seeds")->capture_default_str();
  eval_cmd->add_option("--seed-start", opt.seed_start, "First seed")->capture_default_str();
  eval_cmd->add_option("--size", opt.size, "Synthetic image side length")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    detail::report_error(err, "usage", e.what());
    // help() would delegate to the selected subcommand and hide the shared flags
    err << app.get_formatter()->make_help(&app, app.get_name(), CLI::AppFormatMode::Normal);
    return kFailure;
  }

  try {
    cfg.contrast_source = opt.contrast_on == "illumination" ? ContrastSource::Illumination : ContrastSource::Value;
    cfg.validate();
    if (enhance_cmd->parsed()) return detail::run_enhance(opt, opt.baseline ? Method::AgcwdPlain : Method::Proposed, err);
    if (baseline_cmd->parsed()) return detail::run_enhance(opt, Method::AgcwdPlain, err);
    if (curve_cmd->parsed()) return detail::run_curve(opt);
    if (decompose_cmd->parsed()) return detail::run_decompose(opt);
    if (eval_cmd->parsed()) return detail::run_eval(opt, out);
  } catch (const ConvergenceError& e) {
    detail::report_error(err, e.code(), e.what());
    return kNotConverged;
  } catch (const Error& e) {
    detail::report_error(err, e.code(), e.what());
    return kFailure;
  } catch (const std::filesystem::filesystem_error& e) {
    detail::report_error(err, "io", e.what());
    return kFailure;
  }
  return kFailure;
}

}  // namespace shadowup::cli
