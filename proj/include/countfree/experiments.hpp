#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "countfree/binner.hpp"
#include "countfree/scene.hpp"

namespace countfree {

// ---- Stationary concentration table -------------------------------------

struct MarkovSetup {
  std::size_t locations = 1000;
  double fwhm_s = 2e-9;
  double bin_width_s = 128e-12;
  std::vector<double> radii{5, 10, 20};
};

struct MarkovCell {
  double peak = 0.0;
  double signal = 0.0;
  double sbr = 0.0;
  double median = 0.0;
  std::size_t mode = 0;
  std::vector<double> concentration;  ///< one entry per radius
};

/// Background per bin is signal / sbr / locations.
MarkovCell markov_cell(double peak, double signal, double sbr, const MarkovSetup& setup);

std::vector<MarkovCell> markov_grid(const std::vector<double>& peaks,
                                    const std::vector<double>& signals,
                                    const std::vector<double>& sbrs, const MarkovSetup& setup,
                                    unsigned threads = 1);

// ---- Single-pixel Monte Carlo sweep -------------------------------------

struct SweepConfig {
  std::vector<double> signals{0.1, 0.2, 0.5, 1.0, 2.0};
  std::vector<double> backgrounds{1e-4, 5e-4, 1e-3, 5e-3};  ///< per bin per cycle
  std::size_t runs = 100;
  std::size_t cycles = 5000;
  std::size_t bins = 1024;
  double bin_width_s = 128e-12;
  double fwhm_s = 5e-9;
  std::size_t stages = 4;
  std::size_t readouts = 5;
  std::size_t readout_spacing = 50;
  std::size_t ewh_bins = 1024;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

enum class ReadoutMode { Single, Median };
std::string_view to_string(ReadoutMode mode) noexcept;

/// Estimates from one run, per estimator and readout mode.
struct SweepRun {
  double truth_m = 0.0;
  // [estimator][mode]: estimators edh-argmax, edh-curvefit, ewh
  std::array<std::array<double, 2>, 3> estimate_m{};
};

inline constexpr std::array<const char*, 3> kSweepEstimators{"edh-argmax", "edh-curvefit",
                                                             "ewh"};

struct SweepRow {
  double signal = 0.0;
  double background = 0.0;
  std::string estimator;
  ReadoutMode mode = ReadoutMode::Single;
  double delta_05 = 0.0;
  double delta_01 = 0.0;
  double mae_m = 0.0;
  std::size_t runs = 0;
};

/// One Monte Carlo run: peak drawn uniformly over [0, bins), EDH and EWH fed
/// the same cycles. The single readout is taken after `cycles` cycles; the
/// median mode uses `readouts` readouts spaced `readout_spacing` apart,
/// applied alike to the EWH's running histogram.
SweepRun sweep_run(double signal, double background, const SweepConfig& cfg,
                   std::uint64_t run_seed);

/// Rows ordered by (signal, background, estimator, mode). Run r of cell c
/// uses seed derive_seed(cfg.seed, {c, r}).
std::vector<SweepRow> pixel_sweep(const SweepConfig& cfg);

// ---- Step-schedule convergence ------------------------------------------

struct ConvergenceRegime {
  std::string name;
  double signal = 0.0;
  double background = 0.0;  ///< per bin per cycle
};

struct ConvergenceConfig {
  std::vector<ConvergenceRegime> regimes{{"high-signal-low-bkg", 2.0, 1e-4},
                                         {"high-signal-high-bkg", 2.0, 2e-3},
                                         {"low-signal-low-bkg", 0.2, 1e-4},
                                         {"low-signal-high-bkg", 0.2, 2e-3}};
  std::size_t bins = 1000;
  double bin_width_s = 128e-12;
  double fwhm_s = 2e-9;
  double peak_bin = 100.0;
  double start_cv = 500.0;
  std::size_t cycles = 5000;
  std::size_t seeds = 50;
  double tolerance = 20.0;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

inline constexpr std::array<const char*, 3> kScheduleNames{"constant", "weighted",
                                                           "coarse-to-fine"};

StepSchedule named_schedule(std::string_view name, std::size_t cycles);

struct ConvergenceTrace {
  std::string regime;
  std::string schedule;
  std::size_t seed_index = 0;
  double median = 0.0;
  std::vector<double> cv;
  /// First cycle (1-based) whose cv is within tolerance of the median, or
  /// cycles + 1 if never.
  std::size_t first_hit = 0;
};

/// Every (regime, schedule, seed) trace. Seed s of regime g uses
/// derive_seed(cfg.seed, {g, s}) for all schedules, so schedules see the
/// same photon stream.
std::vector<ConvergenceTrace> convergence_study(const ConvergenceConfig& cfg);

/// Median first_hit per (regime, schedule).
struct ConvergenceSummary {
  std::string regime;
  std::string schedule;
  double median_first_hit = 0.0;
};
std::vector<ConvergenceSummary> summarize(const std::vector<ConvergenceTrace>& traces);

// ---- Synthetic scene ----------------------------------------------------

struct SyntheticScene {
  Grid<double> depth_m;
  Grid<double> albedo;
};

/// Depth ramp across columns with two raised blocks (step discontinuities)
/// and a smooth albedo texture in [0.5, 1]. Depths span roughly
/// [0.1, 0.9] * max_depth_m.
SyntheticScene staircase_scene(std::size_t height, std::size_t width, double max_depth_m);

// ---- Small statistics helpers -------------------------------------------

double median_of(std::vector<double> values);

}  // namespace countfree
