// countfree: command-line front end for the count-free histogramming toolkit.
//
// Every subcommand is deterministic given --seed. Exit codes: 0 success,
// 2 bad arguments, 3 I/O error, 4 numerical failure.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "countfree/errors.hpp"
#include "countfree/experiments.hpp"
#include "countfree/io.hpp"
#include "countfree/markov.hpp"
#include "countfree/scene.hpp"

namespace fs = std::filesystem;
using namespace countfree;

namespace {

constexpr int kExitBadArgs = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumerical = 4;

// Output stream that is either a file or stdout.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (!path.empty() && path != "-") file_ = open_output(path);
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

 private:
  std::optional<std::ofstream> file_;
};

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  std::ostringstream s;
  s << std::setprecision(10) << v;
  return s.str();
}

// ---- Config file splicing -----------------------------------------------
//
// "--config FILE" may appear anywhere after the subcommand. Each non-blank,
// non-comment line "key = value" becomes "--key=value" inserted before the
// user's own arguments; keys also given on the command line are skipped so
// flags win.

std::vector<std::string> splice_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  std::set<std::string> given;
  std::vector<std::string> rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file path");
      path = args[++i];
      continue;
    }
    if (a.rfind("--config=", 0) == 0) {
      path = a.substr(9);
      continue;
    }
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') - 2));
    rest.push_back(a);
  }
  if (!path) return args;
  std::ifstream in(*path);
  if (!in) throw IoError("cannot open config file " + *path);
  std::vector<std::string> injected;
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw CLI::ConversionError(*path + ":" + std::to_string(line_no) + ": expected key = value");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) continue;
    if (!given.count(key)) injected.push_back("--" + key + "=" + value);
  }
  // Keep the subcommand name first.
  std::vector<std::string> out;
  std::size_t i = 0;
  if (!rest.empty() && rest[0].rfind("-", 0) != 0) out.push_back(rest[i++]);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin() + static_cast<std::ptrdiff_t>(i), rest.end());
  return out;
}

// ---- Shared option groups -----------------------------------------------

struct SceneMethodOptions {
  std::string method = "both";
  std::size_t stages = 4;
  std::size_t ewh_bins = 16;
  std::size_t readouts = 1;
  std::size_t readout_spacing = 50;
  std::string estimator;
  std::size_t cycles = 5000;
  unsigned threads = 1;

  void add(CLI::App* app, const std::string& default_estimator) {
    estimator = default_estimator;
    app->add_option("--method", method, "edh, ewh or both")
        ->check(CLI::IsMember({"edh", "ewh", "both"}))
        ->capture_default_str();
    app->add_option("--stages", stages, "EDH stages K (2^K bins)")
        ->check(CLI::Range(1, 16))
        ->capture_default_str();
    app->add_option("--ewh-bins", ewh_bins, "coarse EWH bin count")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--readouts", readouts, "EDH readouts combined by median")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--readout-spacing", readout_spacing, "cycles between readouts")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app->add_option("--estimator", estimator, "EDH estimator: argmax, curvefit or multipeak")
        ->check(CLI::IsMember({"argmax", "curvefit", "multipeak"}))
        ->capture_default_str();
    app->add_option("--cycles", cycles, "laser cycles per pixel")->capture_default_str();
    app->add_option("--threads", threads, "worker threads (0 = all cores)")->capture_default_str();
  }

  [[nodiscard]] EstimateMethod edh_estimator() const {
    if (estimator == "curvefit") return EstimateMethod::EdhCurvefit;
    if (estimator == "multipeak") return EstimateMethod::EdhMultipeak;
    return EstimateMethod::EdhArgmax;
  }

  [[nodiscard]] std::vector<std::pair<std::string, SceneMethod>> methods() const {
    std::vector<std::pair<std::string, SceneMethod>> out;
    if (method != "ewh") {
      EdhConfig e = EdhConfig::uniform(stages, cycles);
      e.readouts = readouts;
      e.readout_spacing = readout_spacing;
      out.emplace_back("edh", e);
    }
    if (method != "edh") out.emplace_back("ewh", EwhConfig{ewh_bins, false});
    return out;
  }
};

struct SyntheticSceneOptions {
  std::size_t height = 64;
  std::size_t width = 64;
  std::size_t bins = 2000;
  double bin_width_ps = 33.33;
  double fwhm_ns = 1.0;
  double signal = 2.0;
  double background = 1e-4;
  bool couple_background = false;

  void add(CLI::App* app) {
    app->add_option("--height", height)->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--width", width)->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--bins", bins, "full-resolution bins B")
        ->check(CLI::Range(2, 1 << 24))
        ->capture_default_str();
    app->add_option("--bin-width-ps", bin_width_ps)->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--fwhm-ns", fwhm_ns)->check(CLI::PositiveNumber)->capture_default_str();
    app->add_option("--signal", signal, "mean signal photons per cycle at albedo 1")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app->add_option("--background", background, "ambient photons per bin per cycle")
        ->check(CLI::NonNegativeNumber)
        ->capture_default_str();
    app->add_flag("--couple-background", couple_background, "scale background by albedo too");
  }

  [[nodiscard]] double bin_width_s() const { return bin_width_ps * 1e-12; }

  struct Built {
    TransientCube cube;
    DistanceMap truth;
  };
  [[nodiscard]] Built build() const {
    const double d_max = delay_to_distance(static_cast<double>(bins), bin_width_s());
    const auto scene = staircase_scene(height, width, d_max);
    PulseSpec pulse;
    pulse.fwhm_s = fwhm_ns * 1e-9;
    pulse.signal_photons = signal;
    pulse.background_per_bin = background;
    return {synthesize_scene(scene.depth_m, scene.albedo, pulse, bins, bin_width_s(),
                             couple_background),
            truth_map(scene.depth_m, d_max)};
  }
};

void write_map(const DistanceMap& map, const fs::path& dir, const std::string& stem) {
  write_pgm(map, dir / (stem + ".pgm"));
  write_csv(map, dir / (stem + ".csv"));
}

nlohmann::json metrics_json(const std::string& method, const SceneMetrics& m,
                            const SceneMethod& cfg, std::size_t valid, std::size_t pixels) {
  auto j = to_json(m);
  j["method"] = method;
  j["method_bins"] = method_bins(cfg);
  j["valid_pixels"] = valid;
  j["pixels"] = pixels;
  return j;
}

// Runs every method, writes maps and metrics, returns the summary JSON.
template <class RunFn>
nlohmann::json run_methods(const SceneMethodOptions& opts, const std::optional<DistanceMap>& truth,
                           std::size_t full_bins, const fs::path& out_dir, RunFn&& run_one) {
  nlohmann::json summary = nlohmann::json::object();
  summary["methods"] = nlohmann::json::array();
  for (const auto& [name, cfg] : opts.methods()) {
    const SceneResult res = run_one(cfg);
    write_map(res.map, out_dir, name + "_distance");
    nlohmann::json j;
    if (truth) {
      const auto m = evaluate(res.map, *truth, res.readout_bits_per_pixel, method_bins(cfg), full_bins);
      j = metrics_json(name, m, cfg, res.map.valid_count(), res.map.meters.size());
    } else {
      SceneMetrics m;
      m.mae_m = std::nan("");
      m.readout_bits_per_pixel = res.readout_bits_per_pixel;
      m.compression_ratio = static_cast<double>(full_bins * 8) /
                            static_cast<double>(res.readout_bits_per_pixel);
      m.bin_count_ratio = static_cast<double>(full_bins) / static_cast<double>(method_bins(cfg));
      j = metrics_json(name, m, cfg, res.map.valid_count(), res.map.meters.size());
    }
    write_json(j, out_dir / (name + "_metrics.json"));
    summary["methods"].push_back(j);
    std::cout << name << ": ";
    if (j["mae_m"].is_null())
      std::cout << "no ground truth";
    else
      std::cout << "MAE " << fmt(j["mae_m"].get<double>()) << " m, 5% inliers "
                << fmt(j["inlier_5pct"].get<double>());
    std::cout << ", " << j["readout_bits_per_pixel"] << " bits/pixel, "
              << j["valid_pixels"] << "/" << j["pixels"] << " valid\n";
  }
  return summary;
}

std::optional<DistanceMap> load_truth(const std::string& path, double d_max) {
  if (path.empty()) return std::nullopt;
  return load_csv_map(path, d_max);
}

void check_truth_shape(const std::optional<DistanceMap>& truth, std::size_t h, std::size_t w,
                       const std::string& path) {
  if (truth && (truth->height() != h || truth->width() != w))
    throw std::invalid_argument("ground truth " + path + " is " + std::to_string(truth->height()) +
                                "x" + std::to_string(truth->width()) + ", expected " +
                                std::to_string(h) + "x" + std::to_string(w));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Count-free single-photon histogramming: simulation and analysis."};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  std::uint64_t seed = 1;

  // pixel-sweep
  auto* sweep = app.add_subcommand("pixel-sweep", "Single-pixel Monte Carlo over a signal x background grid");
  SweepConfig sweep_cfg;
  double sweep_bin_ps = 128.0;
  double sweep_fwhm_ns = 5.0;
  std::string sweep_csv = "-";
  std::string sweep_json;
  sweep->add_option("--signals", sweep_cfg.signals, "signal photons per cycle")->delimiter(',')->capture_default_str();
  sweep->add_option("--backgrounds", sweep_cfg.backgrounds, "ambient photons per bin per cycle")->delimiter(',')->capture_default_str();
  sweep->add_option("--runs", sweep_cfg.runs, "runs per cell")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--cycles", sweep_cfg.cycles)->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--bins", sweep_cfg.bins)->check(CLI::Range(2, 1 << 24))->capture_default_str();
  sweep->add_option("--bin-width-ps", sweep_bin_ps)->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--fwhm-ns", sweep_fwhm_ns)->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--stages", sweep_cfg.stages)->check(CLI::Range(1, 16))->capture_default_str();
  sweep->add_option("--readouts", sweep_cfg.readouts, "readouts in median mode")->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--readout-spacing", sweep_cfg.readout_spacing)->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--ewh-bins", sweep_cfg.ewh_bins)->check(CLI::PositiveNumber)->capture_default_str();
  sweep->add_option("--threads", sweep_cfg.threads, "worker threads (0 = all cores)")->capture_default_str();
  sweep->add_option("--seed", seed)->capture_default_str();
  sweep->add_option("--csv", sweep_csv, "summary CSV path, - for stdout")->capture_default_str();
  sweep->add_option("--json", sweep_json, "summary JSON path");

  // markov
  auto* markov = app.add_subcommand("markov", "Stationary distribution statistics of one binner");
  std::vector<double> mk_peaks{100, 250, 400};
  std::vector<double> mk_signals{0.1, 1.0};
  std::vector<double> mk_sbrs{0.01, 0.2, 0.5, 1.0};
  MarkovSetup mk_setup;
  double mk_fwhm_ns = 2.0;
  double mk_bin_ps = 128.0;
  bool mk_uniform = false;
  std::string mk_csv = "-";
  unsigned mk_threads = 1;
  markov->add_option("--peaks", mk_peaks)->delimiter(',')->capture_default_str();
  markov->add_option("--signals", mk_signals)->delimiter(',')->capture_default_str();
  markov->add_option("--sbrs", mk_sbrs)->delimiter(',')->check(CLI::PositiveNumber)->capture_default_str();
  markov->add_option("--locations", mk_setup.locations, "window locations L")->check(CLI::Range(1, 1 << 24))->capture_default_str();
  markov->add_option("--radii", mk_setup.radii)->delimiter(',')->capture_default_str();
  markov->add_option("--fwhm-ns", mk_fwhm_ns)->check(CLI::PositiveNumber)->capture_default_str();
  markov->add_option("--bin-width-ps", mk_bin_ps)->check(CLI::PositiveNumber)->capture_default_str();
  markov->add_flag("--uniform", mk_uniform, "single row for uniform rates instead of the grid");
  markov->add_option("--threads", mk_threads)->capture_default_str();
  markov->add_option("--csv", mk_csv, "CSV path, - for stdout")->capture_default_str();

  // convergence
  auto* conv = app.add_subcommand("convergence", "Step-schedule convergence study of one binner");
  ConvergenceConfig conv_cfg;
  std::vector<std::string> conv_regimes;
  std::string conv_traces;
  std::string conv_summary = "-";
  std::size_t conv_trace_seeds = 1;
  double conv_fwhm_ns = 2.0;
  double conv_bin_ps = 128.0;
  conv->add_option("--regime", conv_regimes, "name:signal:background, repeatable (replaces the defaults)");
  conv->add_option("--bins", conv_cfg.bins)->check(CLI::Range(2, 1 << 24))->capture_default_str();
  conv->add_option("--peak", conv_cfg.peak_bin)->capture_default_str();
  conv->add_option("--start", conv_cfg.start_cv, "initial control value")->capture_default_str();
  conv->add_option("--cycles", conv_cfg.cycles)->check(CLI::PositiveNumber)->capture_default_str();
  conv->add_option("--seeds", conv_cfg.seeds)->check(CLI::PositiveNumber)->capture_default_str();
  conv->add_option("--tolerance", conv_cfg.tolerance, "distance from the median counted as converged")->capture_default_str();
  conv->add_option("--fwhm-ns", conv_fwhm_ns)->check(CLI::PositiveNumber)->capture_default_str();
  conv->add_option("--bin-width-ps", conv_bin_ps)->check(CLI::PositiveNumber)->capture_default_str();
  conv->add_option("--threads", conv_cfg.threads)->capture_default_str();
  conv->add_option("--seed", seed)->capture_default_str();
  conv->add_option("--traces", conv_traces, "per-cycle trace CSV path");
  conv->add_option("--trace-seeds", conv_trace_seeds, "seeds per (regime, schedule) written to --traces")->capture_default_str();
  conv->add_option("--summary", conv_summary, "summary CSV path, - for stdout")->capture_default_str();

  // scene
  auto* scene = app.add_subcommand("scene", "Simulate EDH/EWH distance maps for a scene");
  SceneMethodOptions scene_methods;
  SyntheticSceneOptions scene_synth;
  std::string scene_cube;
  std::string scene_truth;
  std::string scene_out = ".";
  scene_methods.add(scene, "argmax");
  scene_synth.add(scene);
  scene->add_option("--cube", scene_cube, "TCUB input (default: built-in synthetic staircase scene)");
  scene->add_option("--truth", scene_truth, "ground-truth depth CSV for --cube");
  scene->add_option("--seed", seed)->capture_default_str();
  scene->add_option("--out-dir", scene_out)->capture_default_str();

  // replay
  auto* replay = app.add_subcommand("replay", "Replay a TSTR timestamp stream through EDH/EWH");
  SceneMethodOptions replay_methods;
  std::string replay_stream;
  std::string replay_truth;
  std::string replay_out = ".";
  std::size_t replay_bins = 2000;
  double replay_bin_ps = 33.33;
  bool replay_filter = false;
  replay_methods.add(replay, "multipeak");
  replay->add_option("--stream", replay_stream, "TSTR input")->required();
  replay->add_option("--bins", replay_bins, "bins B of the recorded window")->check(CLI::Range(2, 1 << 24))->capture_default_str();
  replay->add_option("--bin-width-ps", replay_bin_ps)->check(CLI::PositiveNumber)->capture_default_str();
  replay->add_flag("--median-filter", replay_filter, "apply a 3x3 median filter to the maps");
  replay->add_option("--truth", replay_truth, "ground-truth depth CSV");
  replay->add_option("--out-dir", replay_out)->capture_default_str();

  // cube-make
  auto* cube_make = app.add_subcommand("cube-make", "Write the synthetic staircase scene as a TCUB file");
  SyntheticSceneOptions cube_synth;
  std::string cube_out;
  std::string cube_truth_out;
  cube_synth.add(cube_make);
  cube_make->add_option("--out", cube_out, "TCUB output")->required();
  cube_make->add_option("--truth-out", cube_truth_out, "ground-truth depth CSV output");

  // stream-make
  auto* stream_make = app.add_subcommand("stream-make", "Sample a TSTR timestamp stream from a TCUB file");
  std::string stream_cube;
  std::string stream_out;
  std::uint32_t stream_cycles = 5000;
  unsigned stream_threads = 1;
  stream_make->add_option("--cube", stream_cube, "TCUB input")->required();
  stream_make->add_option("--out", stream_out, "TSTR output")->required();
  stream_make->add_option("--cycles", stream_cycles)->capture_default_str();
  stream_make->add_option("--threads", stream_threads)->capture_default_str();
  stream_make->add_option("--seed", seed)->capture_default_str();

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = splice_config(std::move(args));
    std::reverse(args.begin(), args.end());  // CLI11 consumes the vector from the back
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitBadArgs;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }

  try {
    if (*sweep) {
      sweep_cfg.bin_width_s = sweep_bin_ps * 1e-12;
      sweep_cfg.fwhm_s = sweep_fwhm_ns * 1e-9;
      sweep_cfg.seed = seed;
      const auto rows = pixel_sweep(sweep_cfg);
      Sink out(sweep_csv);
      out.os() << "signal,background,estimator,mode,delta_05,delta_01,mae_m,runs\n";
      for (const auto& r : rows)
        out.os() << fmt(r.signal) << ',' << fmt(r.background) << ',' << r.estimator << ','
                 << to_string(r.mode) << ',' << fmt(r.delta_05) << ',' << fmt(r.delta_01) << ','
                 << fmt(r.mae_m) << ',' << r.runs << '\n';
      if (!sweep_json.empty()) {
        nlohmann::json j;
        j["config"] = {{"signals", sweep_cfg.signals},
                       {"backgrounds", sweep_cfg.backgrounds},
                       {"runs", sweep_cfg.runs},
                       {"cycles", sweep_cfg.cycles},
                       {"bins", sweep_cfg.bins},
                       {"bin_width_s", sweep_cfg.bin_width_s},
                       {"fwhm_s", sweep_cfg.fwhm_s},
                       {"stages", sweep_cfg.stages},
                       {"readouts", sweep_cfg.readouts},
                       {"readout_spacing", sweep_cfg.readout_spacing},
                       {"ewh_bins", sweep_cfg.ewh_bins},
                       {"seed", sweep_cfg.seed}};
        j["rows"] = nlohmann::json::array();
        for (const auto& r : rows)
          j["rows"].push_back({{"signal", r.signal},
                               {"background", r.background},
                               {"estimator", r.estimator},
                               {"mode", to_string(r.mode)},
                               {"delta_05", r.delta_05},
                               {"delta_01", r.delta_01},
                               {"mae_m", r.mae_m},
                               {"runs", r.runs}});
        write_json(j, sweep_json);
      }
    } else if (*markov) {
      mk_setup.fwhm_s = mk_fwhm_ns * 1e-9;
      mk_setup.bin_width_s = mk_bin_ps * 1e-12;
      Sink out(mk_csv);
      out.os() << "peak,signal,sbr,median,mode";
      for (double r : mk_setup.radii) out.os() << ",p" << fmt(r);
      out.os() << '\n';
      auto emit = [&](double peak, double signal, double sbr_v, double median, std::size_t mode,
                      const std::vector<double>& conc) {
        out.os() << fmt(peak) << ',' << fmt(signal) << ',' << fmt(sbr_v) << ',' << fmt(median)
                 << ',' << mode;
        for (double c : conc) out.os() << ',' << fmt(c);
        out.os() << '\n';
      };
      if (mk_uniform) {
        const std::vector<double> rates(mk_setup.locations, 1.0 / static_cast<double>(mk_setup.locations));
        const TransientDistribution t(rates, mk_setup.bin_width_s);
        const auto pi = stationary(build_model(t.rates()));
        const double median = true_median(t);
        emit(std::nan(""), 0.0, 0.0, median, pi.mode(), concentration(pi.pi, median, mk_setup.radii));
      } else {
        for (const auto& c : markov_grid(mk_peaks, mk_signals, mk_sbrs, mk_setup, mk_threads))
          emit(c.peak, c.signal, c.sbr, c.median, c.mode, c.concentration);
      }
    } else if (*conv) {
      conv_cfg.fwhm_s = conv_fwhm_ns * 1e-9;
      conv_cfg.bin_width_s = conv_bin_ps * 1e-12;
      conv_cfg.seed = seed;
      if (!conv_regimes.empty()) {
        conv_cfg.regimes.clear();
        for (const auto& spec : conv_regimes) {
          std::stringstream ss(spec);
          std::string name, sig, bkg;
          if (!std::getline(ss, name, ':') || !std::getline(ss, sig, ':') || !std::getline(ss, bkg))
            throw std::invalid_argument("--regime expects name:signal:background, got " + spec);
          conv_cfg.regimes.push_back({name, std::stod(sig), std::stod(bkg)});
        }
      }
      const auto traces = convergence_study(conv_cfg);
      Sink out(conv_summary);
      out.os() << "regime,schedule,median,median_first_hit\n";
      const auto summary = summarize(traces);
      for (std::size_t i = 0; i < summary.size(); ++i)
        out.os() << summary[i].regime << ',' << summary[i].schedule << ','
                 << fmt(traces[i * conv_cfg.seeds].median) << ','
                 << fmt(summary[i].median_first_hit) << '\n';
      if (!conv_traces.empty()) {
        auto f = open_output(conv_traces);
        f << "regime,schedule,seed,cycle,cv\n";
        for (const auto& t : traces) {
          if (t.seed_index >= conv_trace_seeds) continue;
          for (std::size_t c = 0; c < t.cv.size(); ++c)
            f << t.regime << ',' << t.schedule << ',' << t.seed_index << ',' << c + 1 << ','
              << fmt(t.cv[c]) << '\n';
        }
        if (!f) throw IoError("failed writing " + conv_traces);
      }
    } else if (*scene) {
      fs::create_directories(scene_out);
      TransientCube cube;
      std::optional<DistanceMap> truth;
      if (scene_cube.empty()) {
        auto built = scene_synth.build();
        cube = std::move(built.cube);
        truth = std::move(built.truth);
      } else {
        cube = load_cube(scene_cube);
        truth = load_truth(scene_truth, cube.range_m());
        check_truth_shape(truth, cube.height, cube.width, scene_truth);
      }
      if (truth) write_map(*truth, scene_out, "truth_distance");
      SceneOptions so;
      so.edh_estimator = scene_methods.edh_estimator();
      so.threads = scene_methods.threads;
      auto summary = run_methods(scene_methods, truth, cube.bins, scene_out, [&](const SceneMethod& m) {
        return simulate_scene(cube, m, scene_methods.cycles, seed, so);
      });
      summary["seed"] = seed;
      summary["cycles"] = scene_methods.cycles;
      summary["bins"] = cube.bins;
      summary["bin_width_s"] = cube.bin_width_s;
      write_json(summary, fs::path(scene_out) / "summary.json");
    } else if (*replay) {
      fs::create_directories(replay_out);
      const auto stream = load_stream(replay_stream);
      const double bin_width_s = replay_bin_ps * 1e-12;
      const auto truth = load_truth(replay_truth, delay_to_distance(static_cast<double>(replay_bins), bin_width_s));
      check_truth_shape(truth, stream.height, stream.width, replay_truth);
      ReplayOptions ro;
      ro.edh_estimator = replay_methods.edh_estimator();
      ro.median_filter = replay_filter;
      ro.threads = replay_methods.threads;
      auto summary = run_methods(replay_methods, truth, replay_bins, replay_out, [&](const SceneMethod& m) {
        return replay_timestamps(stream, m, replay_methods.cycles, replay_bins, bin_width_s, ro);
      });
      summary["cycles"] = replay_methods.cycles;
      summary["bins"] = replay_bins;
      summary["bin_width_s"] = bin_width_s;
      summary["median_filter"] = replay_filter;
      write_json(summary, fs::path(replay_out) / "summary.json");
    } else if (*cube_make) {
      const auto built = cube_synth.build();
      save_cube(built.cube, cube_out);
      if (!cube_truth_out.empty()) write_csv(built.truth, cube_truth_out);
    } else if (*stream_make) {
      const auto cube = load_cube(stream_cube);
      save_stream(sample_stream(cube, stream_cycles, seed, stream_threads), stream_out);
    }
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::domain_error& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitBadArgs;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumerical;
  }
  return 0;
}
