#include "countfree/scene.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "countfree/errors.hpp"
#include "countfree/parallel.hpp"

namespace countfree {

std::span<const float> TransientCube::pixel(std::size_t row, std::size_t col) const {
  if (row >= height || col >= width) throw std::out_of_range("cube pixel out of range");
  return std::span<const float>(data).subspan((row * width + col) * bins, bins);
}

TransientDistribution TransientCube::transient(std::size_t row, std::size_t col) const {
  const auto p = pixel(row, col);
  return TransientDistribution(std::vector<double>(p.begin(), p.end()), bin_width_s);
}

void TransientCube::validate() const {
  if (bins < 2) throw FormatError("cube needs at least 2 bins, got " + std::to_string(bins));
  if (!(bin_width_s > 0.0) || !std::isfinite(bin_width_s))
    throw FormatError("cube bin width must be positive");
  if (data.size() != height * width * bins)
    throw FormatError("cube holds " + std::to_string(data.size()) + " values, header implies " +
                      std::to_string(height * width * bins));
  for (std::size_t i = 0; i < data.size(); ++i)
    if (!(data[i] >= 0.0f) || !std::isfinite(data[i]))
      throw FormatError("cube value " + std::to_string(i) + " is negative or not finite");
}

std::size_t DistanceMap::valid_count() const noexcept {
  return static_cast<std::size_t>(std::count(valid.data.begin(), valid.data.end(), 1));
}

std::size_t readout_bits(const SceneMethod& method, unsigned bits_per_boundary) {
  if (const auto* e = std::get_if<EdhConfig>(&method))
    return edh_readout_bits(e->stages, bits_per_boundary);
  return std::get<EwhConfig>(method).bins * 8;
}

std::size_t method_bins(const SceneMethod& method) {
  if (const auto* e = std::get_if<EdhConfig>(&method)) return std::size_t{1} << e->stages;
  return std::get<EwhConfig>(method).bins;
}

TransientCube synthesize_scene(const Grid<double>& depth_m, const Grid<double>& albedo,
                               const PulseSpec& pulse, std::size_t bins, double bin_width_s,
                               bool couple_background) {
  if (depth_m.height != albedo.height || depth_m.width != albedo.width)
    throw std::invalid_argument("depth and albedo grids differ in shape");
  TransientCube cube;
  cube.height = depth_m.height;
  cube.width = depth_m.width;
  cube.bins = bins;
  cube.bin_width_s = bin_width_s;
  cube.data.resize(cube.pixels() * bins);
  const double d_max = cube.range_m();
  for (std::size_t r = 0; r < cube.height; ++r) {
    for (std::size_t c = 0; c < cube.width; ++c) {
      const double d = depth_m(r, c);
      const double a = albedo(r, c);
      if (!(d >= 0.0 && d < d_max))
        throw std::invalid_argument("depth " + std::to_string(d) + " m at (" +
                                    std::to_string(r) + ", " + std::to_string(c) +
                                    ") is outside [0, " + std::to_string(d_max) + ") m");
      if (!(a >= 0.0 && a <= 1.0)) throw std::invalid_argument("albedo must lie in [0, 1]");
      PulseSpec p = pulse;
      p.peak_bin = distance_to_delay(d, bin_width_s);
      p.signal_photons = pulse.signal_photons * a;
      if (couple_background) p.background_per_bin = pulse.background_per_bin * a;
      const auto t = build_transient(p, bins, bin_width_s);
      auto out = cube.data.begin() + static_cast<std::ptrdiff_t>((r * cube.width + c) * bins);
      std::transform(t.rates().begin(), t.rates().end(), out,
                     [](double x) { return static_cast<float>(x); });
    }
  }
  return cube;
}

namespace {

EdhConfig edh_for_cycles(const EdhConfig& cfg, std::size_t cycles) {
  if (cfg.total_cycles == cycles) return cfg;
  EdhConfig out = EdhConfig::uniform(cfg.stages, cycles, cfg.schedule);
  out.weights = cfg.weights;
  out.readouts = cfg.readouts;
  out.readout_spacing = cfg.readout_spacing;
  return out;
}

std::size_t cycles_needed(const SceneMethod& method, std::size_t cycles) {
  if (const auto* e = std::get_if<EdhConfig>(&method))
    return cycles + (e->readouts - 1) * e->readout_spacing;
  return cycles;
}

DistanceEstimate edh_estimate(const EdhReadout& r, double bin_width_s, EstimateMethod m) {
  switch (m) {
    case EstimateMethod::EdhCurvefit: return curvefit_distance(r, bin_width_s);
    case EstimateMethod::EdhMultipeak: return first_narrow_distance(r, bin_width_s);
    case EstimateMethod::EdhArgmax: return argmax_distance(r, bin_width_s);
    case EstimateMethod::EwhArgmax: break;
  }
  throw std::invalid_argument("not an EDH estimator");
}

// Runs one pixel's estimator over an arbitrary cycle source.
PixelEstimate run_pixel(const SceneMethod& method, std::size_t cycles, std::size_t bins,
                       double bin_width_s, EstimateMethod edh_estimator,
                       const CycleSource& source) {
  PixelEstimate out;
  CycleSource counted = [&](PhotonCycle& c) {
    source(c);
    out.photons += c.delays.size();
  };
  const double window = static_cast<double>(bins);
  if (const auto* e = std::get_if<EdhConfig>(&method)) {
    const auto readouts = run_edh_readouts(edh_for_cycles(*e, cycles), window, counted);
    out.distance_m = edh_estimate(median_readout(readouts), bin_width_s, edh_estimator).distance_m;
  } else {
    const auto& w = std::get<EwhConfig>(method);
    EwHistogram h(w.bins, window, w.saturate_8bit);
    PhotonCycle c;
    for (std::size_t i = 0; i < cycles; ++i) {
      counted(c);
      h.add(c);
    }
    out.distance_m = ewh_argmax(h, bin_width_s).distance_m;
  }
  return out;
}

SceneResult collect(std::size_t height, std::size_t width, double d_max,
                    const std::vector<PixelEstimate>& px, std::uint64_t min_photons,
                    std::size_t bits) {
  SceneResult res;
  res.map = DistanceMap(height, width, d_max);
  res.photons = Grid<std::uint64_t>(height, width, 0);
  res.readout_bits_per_pixel = bits;
  for (std::size_t i = 0; i < px.size(); ++i) {
    res.photons.data[i] = px[i].photons;
    if (px[i].photons >= min_photons) {
      res.map.meters.data[i] = std::clamp(px[i].distance_m, 0.0, d_max);
      res.map.valid.data[i] = 1;
    }
  }
  return res;
}

}  // namespace

PixelEstimate simulate_pixel(const TransientCube& cube, std::size_t row, std::size_t col,
                             const SceneMethod& method, std::size_t cycles, std::uint64_t seed,
                             EstimateMethod edh_estimator) {
  Rng rng = make_rng(seed, {row, col});
  const CycleSampler sampler(cube.transient(row, col));
  return run_pixel(method, cycles, cube.bins, cube.bin_width_s, edh_estimator,
                   [&](PhotonCycle& out) { sampler.sample_into(rng, out); });
}

SceneResult simulate_scene(const TransientCube& cube, const SceneMethod& method,
                           std::size_t cycles, std::uint64_t seed, const SceneOptions& options) {
  cube.validate();
  std::vector<PixelEstimate> px(cube.pixels());
  parallel_for(px.size(), options.threads, [&](std::size_t i) {
    px[i] = simulate_pixel(cube, i / cube.width, i % cube.width, method, cycles, seed,
                           options.edh_estimator);
  });
  return collect(cube.height, cube.width, cube.range_m(), px, options.min_photons,
                 readout_bits(method));
}

TimestampStream sample_stream(const TransientCube& cube, std::uint32_t cycles,
                              std::uint64_t seed, unsigned threads) {
  cube.validate();
  TimestampStream s;
  s.height = cube.height;
  s.width = cube.width;
  s.total_cycles = cycles;
  s.pixels.resize(cube.pixels());
  parallel_for(s.pixels.size(), threads, [&](std::size_t i) {
    const std::size_t r = i / cube.width;
    const std::size_t c = i % cube.width;
    Rng rng = make_rng(seed, {r, c});
    const CycleSampler sampler(cube.transient(r, c));
    PhotonCycle cyc;
    auto& events = s.pixels[i];
    for (std::uint32_t k = 0; k < cycles; ++k) {
      sampler.sample_into(rng, cyc);
      for (double d : cyc.delays) events.push_back({k, static_cast<float>(d)});
    }
  });
  return s;
}

SceneResult replay_timestamps(const TimestampStream& stream, const SceneMethod& method,
                              std::size_t cycles, std::size_t bins, double bin_width_s,
                              const ReplayOptions& options) {
  const std::size_t needed = cycles_needed(method, cycles);
  if (stream.total_cycles < needed)
    throw std::invalid_argument("stream has " + std::to_string(stream.total_cycles) +
                                " cycles, method needs " + std::to_string(needed));
  if (stream.pixels.size() != stream.height * stream.width)
    throw std::invalid_argument("stream pixel count does not match its dimensions");
  std::vector<PixelEstimate> px(stream.pixels.size());
  const double window = static_cast<double>(bins);
  parallel_for(px.size(), options.threads, [&](std::size_t i) {
    const auto& events = stream.pixels[i];
    std::size_t pos = 0;
    std::uint32_t next_cycle = 0;
    px[i] = run_pixel(method, cycles, bins, bin_width_s, options.edh_estimator,
                      [&](PhotonCycle& out) {
                        out.delays.clear();
                        while (pos < events.size() && events[pos].cycle < next_cycle) ++pos;
                        for (; pos < events.size() && events[pos].cycle == next_cycle; ++pos) {
                          const double d = events[pos].delay_bins;
                          if (d >= 0.0 && d < window) out.delays.push_back(d);
                        }
                        std::sort(out.delays.begin(), out.delays.end());
                        ++next_cycle;
                      });
  });
  auto res = collect(stream.height, stream.width, delay_to_distance(window, bin_width_s), px,
                     options.min_photons, readout_bits(method));
  if (options.median_filter) res.map = median_filter_3x3(res.map);
  return res;
}

SceneMetrics evaluate(const DistanceMap& estimate, const DistanceMap& truth,
                      std::size_t readout_bits_per_pixel, std::size_t method_bin_count,
                      std::size_t full_bins) {
  if (estimate.height() != truth.height() || estimate.width() != truth.width())
    throw std::invalid_argument("estimate and ground-truth maps differ in shape");
  std::vector<double> est;
  std::vector<double> gt;
  for (std::size_t i = 0; i < truth.meters.size(); ++i) {
    if (estimate.valid.data[i] && truth.valid.data[i]) {
      est.push_back(estimate.meters.data[i]);
      gt.push_back(truth.meters.data[i]);
    }
  }
  SceneMetrics m;
  m.evaluated_pixels = est.size();
  if (!est.empty()) {
    m.mae_m = mean_absolute_error(est, gt);
    m.inlier_5pct = delta_fraction(est, gt, 0.05);
    m.inlier_1pct = delta_fraction(est, gt, 0.01);
  } else {
    m.mae_m = std::numeric_limits<double>::quiet_NaN();
  }
  m.readout_bits_per_pixel = readout_bits_per_pixel;
  m.compression_ratio =
      static_cast<double>(full_bins * 8) / static_cast<double>(readout_bits_per_pixel);
  m.bin_count_ratio = static_cast<double>(full_bins) / static_cast<double>(method_bin_count);
  return m;
}

DistanceMap median_filter_3x3(const DistanceMap& map) {
  DistanceMap out = map;
  const auto h = static_cast<long>(map.height());
  const auto w = static_cast<long>(map.width());
  std::vector<double> window;
  for (long r = 0; r < h; ++r) {
    for (long c = 0; c < w; ++c) {
      if (!map.valid(r, c)) continue;
      window.clear();
      for (long dr = -1; dr <= 1; ++dr)
        for (long dc = -1; dc <= 1; ++dc) {
          const long rr = r + dr;
          const long cc = c + dc;
          if (rr >= 0 && rr < h && cc >= 0 && cc < w && map.valid(rr, cc))
            window.push_back(map.meters(rr, cc));
        }
      std::sort(window.begin(), window.end());
      const std::size_t m = window.size() / 2;
      out.meters(r, c) = window.size() % 2 ? window[m] : 0.5 * (window[m - 1] + window[m]);
    }
  }
  return out;
}

DistanceMap truth_map(const Grid<double>& depth_m, double d_max) {
  DistanceMap m(depth_m.height, depth_m.width, d_max);
  m.meters = depth_m;
  std::fill(m.valid.data.begin(), m.valid.data.end(), std::uint8_t{1});
  return m;
}

}  // namespace countfree
