#include "countfree/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "countfree/edh.hpp"
#include "countfree/estimate.hpp"
#include "countfree/markov.hpp"
#include "countfree/parallel.hpp"
#include "countfree/random.hpp"

namespace countfree {

double median_of(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median of an empty set");
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

MarkovCell markov_cell(double peak, double signal, double sbr, const MarkovSetup& setup) {
  if (!(sbr > 0.0)) throw std::invalid_argument("SBR must be positive");
  PulseSpec p;
  p.fwhm_s = setup.fwhm_s;
  p.peak_bin = peak;
  p.signal_photons = signal;
  p.background_per_bin = signal / sbr / static_cast<double>(setup.locations);
  const auto t = build_transient(p, setup.locations, setup.bin_width_s);
  const auto model = build_model(t.rates());
  const auto pi = stationary(model);
  MarkovCell cell;
  cell.peak = peak;
  cell.signal = signal;
  cell.sbr = sbr;
  cell.median = true_median(t);
  cell.mode = pi.mode();
  cell.concentration = concentration(pi.pi, cell.median, setup.radii);
  return cell;
}

std::vector<MarkovCell> markov_grid(const std::vector<double>& peaks,
                                    const std::vector<double>& signals,
                                    const std::vector<double>& sbrs, const MarkovSetup& setup,
                                    unsigned threads) {
  std::vector<MarkovCell> cells(peaks.size() * signals.size() * sbrs.size());
  parallel_for(cells.size(), threads, [&](std::size_t i) {
    const std::size_t k = i % sbrs.size();
    const std::size_t j = (i / sbrs.size()) % signals.size();
    const std::size_t p = i / (sbrs.size() * signals.size());
    cells[i] = markov_cell(peaks[p], signals[j], sbrs[k], setup);
  });
  return cells;
}

std::string_view to_string(ReadoutMode mode) noexcept {
  return mode == ReadoutMode::Single ? "single" : "median";
}

SweepRun sweep_run(double signal, double background, const SweepConfig& cfg,
                   std::uint64_t run_seed) {
  Rng rng(run_seed);
  const double window = static_cast<double>(cfg.bins);
  const double peak = std::uniform_real_distribution<double>(0.0, window)(rng);
  PulseSpec p;
  p.fwhm_s = cfg.fwhm_s;
  p.peak_bin = peak;
  p.signal_photons = signal;
  p.background_per_bin = background;
  const CycleSampler sampler(build_transient(p, cfg.bins, cfg.bin_width_s));

  EdhConfig edh = EdhConfig::uniform(cfg.stages, cfg.cycles);
  edh.readouts = std::max<std::size_t>(1, cfg.readouts);
  edh.readout_spacing = cfg.readout_spacing;
  EwHistogram hist(cfg.ewh_bins, window);
  std::vector<double> ewh;
  std::size_t seen = 0;
  const auto readouts = run_edh_readouts(edh, window, [&](PhotonCycle& c) {
    sampler.sample_into(rng, c);
    hist.add(c);
    ++seen;
    if (seen >= cfg.cycles && ewh.size() < edh.readouts &&
        (seen == cfg.cycles || (seen - cfg.cycles) % edh.readout_spacing == 0))
      ewh.push_back(ewh_argmax(hist, cfg.bin_width_s).distance_m);
  });

  SweepRun run;
  run.truth_m = delay_to_distance(peak, cfg.bin_width_s);
  const auto merged = median_readout(readouts);
  run.estimate_m[0] = {argmax_distance(readouts.front(), cfg.bin_width_s).distance_m,
                       argmax_distance(merged, cfg.bin_width_s).distance_m};
  run.estimate_m[1] = {curvefit_distance(readouts.front(), cfg.bin_width_s).distance_m,
                       curvefit_distance(merged, cfg.bin_width_s).distance_m};
  run.estimate_m[2] = {ewh.front(), median_of(ewh)};
  return run;
}

std::vector<SweepRow> pixel_sweep(const SweepConfig& cfg) {
  if (cfg.runs == 0) throw std::invalid_argument("run count must be >= 1");
  for (double s : cfg.signals)
    if (!(s >= 0.0)) throw std::invalid_argument("signal strengths must be >= 0");
  for (double b : cfg.backgrounds)
    if (!(b >= 0.0)) throw std::invalid_argument("background levels must be >= 0");
  const std::size_t cells = cfg.signals.size() * cfg.backgrounds.size();
  std::vector<SweepRun> runs(cells * cfg.runs);
  parallel_for(runs.size(), cfg.threads, [&](std::size_t i) {
    const std::size_t cell = i / cfg.runs;
    const std::size_t r = i % cfg.runs;
    runs[i] = sweep_run(cfg.signals[cell / cfg.backgrounds.size()],
                        cfg.backgrounds[cell % cfg.backgrounds.size()], cfg,
                        derive_seed(cfg.seed, {cell, r}));
  });

  std::vector<SweepRow> rows;
  std::vector<double> est(cfg.runs);
  std::vector<double> truth(cfg.runs);
  for (std::size_t cell = 0; cell < cells; ++cell) {
    for (std::size_t r = 0; r < cfg.runs; ++r) truth[r] = runs[cell * cfg.runs + r].truth_m;
    for (std::size_t e = 0; e < kSweepEstimators.size(); ++e) {
      for (auto mode : {ReadoutMode::Single, ReadoutMode::Median}) {
        const auto m = static_cast<std::size_t>(mode);
        for (std::size_t r = 0; r < cfg.runs; ++r)
          est[r] = runs[cell * cfg.runs + r].estimate_m[e][m];
        SweepRow row;
        row.signal = cfg.signals[cell / cfg.backgrounds.size()];
        row.background = cfg.backgrounds[cell % cfg.backgrounds.size()];
        row.estimator = kSweepEstimators[e];
        row.mode = mode;
        row.delta_05 = delta_fraction(est, truth, 0.05);
        row.delta_01 = delta_fraction(est, truth, 0.01);
        row.mae_m = mean_absolute_error(est, truth);
        row.runs = cfg.runs;
        rows.push_back(std::move(row));
      }
    }
  }
  return rows;
}

StepSchedule named_schedule(std::string_view name, std::size_t cycles) {
  if (name == "constant") return StepSchedule::constant(1.0);
  if (name == "weighted") return StepSchedule::weighted(1.0);
  if (name == "coarse-to-fine") return StepSchedule::coarse_to_fine_default(cycles);
  throw std::invalid_argument("unknown schedule '" + std::string(name) + "'");
}

std::vector<ConvergenceTrace> convergence_study(const ConvergenceConfig& cfg) {
  const std::size_t per_regime = kScheduleNames.size() * cfg.seeds;
  std::vector<ConvergenceTrace> traces(cfg.regimes.size() * per_regime);
  const double window = static_cast<double>(cfg.bins);
  parallel_for(cfg.regimes.size() * cfg.seeds, cfg.threads, [&](std::size_t i) {
    const std::size_t g = i / cfg.seeds;
    const std::size_t s = i % cfg.seeds;
    const auto& regime = cfg.regimes[g];
    PulseSpec p;
    p.fwhm_s = cfg.fwhm_s;
    p.peak_bin = cfg.peak_bin;
    p.signal_photons = regime.signal;
    p.background_per_bin = regime.background;
    const auto t = build_transient(p, cfg.bins, cfg.bin_width_s);
    const double median = t.total_rate() > 0.0 ? true_median(t) : window / 2.0;
    for (std::size_t k = 0; k < kScheduleNames.size(); ++k) {
      Rng rng(derive_seed(cfg.seed, {g, s}));
      BinnerState b(cfg.start_cv, Window{0.0, window}, named_schedule(kScheduleNames[k], cfg.cycles));
      auto& tr = traces[g * per_regime + k * cfg.seeds + s];
      tr.regime = regime.name;
      tr.schedule = kScheduleNames[k];
      tr.seed_index = s;
      tr.median = median;
      tr.cv = run(b, t, cfg.cycles, rng);
      const auto hit = std::find_if(tr.cv.begin(), tr.cv.end(), [&](double cv) {
        return std::abs(cv - median) <= cfg.tolerance;
      });
      tr.first_hit = static_cast<std::size_t>(hit - tr.cv.begin()) + 1;
    }
  });
  return traces;
}

std::vector<ConvergenceSummary> summarize(const std::vector<ConvergenceTrace>& traces) {
  std::vector<ConvergenceSummary> out;
  for (std::size_t i = 0; i < traces.size();) {
    std::size_t j = i;
    std::vector<double> hits;
    while (j < traces.size() && traces[j].regime == traces[i].regime &&
           traces[j].schedule == traces[i].schedule)
      hits.push_back(static_cast<double>(traces[j++].first_hit));
    out.push_back({traces[i].regime, traces[i].schedule, median_of(hits)});
    i = j;
  }
  return out;
}

SyntheticScene staircase_scene(std::size_t height, std::size_t width, double max_depth_m) {
  SyntheticScene s{Grid<double>(height, width), Grid<double>(height, width)};
  const double lo = 0.1 * max_depth_m;
  const double hi = 0.9 * max_depth_m;
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double u = width > 1 ? static_cast<double>(c) / static_cast<double>(width - 1) : 0.0;
      const double v = height > 1 ? static_cast<double>(r) / static_cast<double>(height - 1) : 0.0;
      double d = lo + (hi - lo) * u;
      // Near block in the upper left, far step in the lower right.
      if (u > 0.15 && u < 0.45 && v > 0.15 && v < 0.45) d = lo + 0.15 * (hi - lo);
      if (u > 0.55 && v > 0.6) d = std::min(hi, d + 0.3 * (hi - lo));
      s.depth_m(r, c) = d;
      s.albedo(r, c) = 0.75 + 0.25 * std::sin(two_pi * static_cast<double>(r) / 9.0) *
                                  std::cos(two_pi * static_cast<double>(c) / 7.0);
    }
  }
  return s;
}

}  // namespace countfree
