#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <variant>
#include <vector>

#include "countfree/edh.hpp"
#include "countfree/estimate.hpp"
#include "countfree/transient.hpp"

namespace countfree {

/// Row-major H x W array.
template <class T>
struct Grid {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<T> data;

  Grid() = default;
  Grid(std::size_t h, std::size_t w, T fill = T{}) : height(h), width(w), data(h * w, fill) {}

  [[nodiscard]] std::size_t size() const noexcept { return data.size(); }
  [[nodiscard]] T& operator()(std::size_t r, std::size_t c) { return data[r * width + c]; }
  [[nodiscard]] const T& operator()(std::size_t r, std::size_t c) const {
    return data[r * width + c];
  }
  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Per-pixel rate vectors for a whole scene, (row, col, bin) order.
struct TransientCube {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t bins = 0;
  double bin_width_s = 0.0;
  std::vector<float> data;

  [[nodiscard]] std::size_t pixels() const noexcept { return height * width; }
  [[nodiscard]] std::span<const float> pixel(std::size_t row, std::size_t col) const;
  [[nodiscard]] TransientDistribution transient(std::size_t row, std::size_t col) const;
  /// One-way distance covered by the cycle window, c B Delta / 2.
  [[nodiscard]] double range_m() const noexcept {
    return delay_to_distance(static_cast<double>(bins), bin_width_s);
  }
  /// Throws FormatError on inconsistent dimensions or negative/NaN rates.
  void validate() const;
  friend bool operator==(const TransientCube&, const TransientCube&) = default;
};

/// Recorded photon events per pixel.
struct TimestampStream {
  struct Event {
    std::uint32_t cycle = 0;
    float delay_bins = 0.0f;
    friend bool operator==(const Event&, const Event&) = default;
  };
  std::size_t height = 0;
  std::size_t width = 0;
  std::uint32_t total_cycles = 0;
  std::vector<std::vector<Event>> pixels;  ///< row-major, each sorted by cycle

  friend bool operator==(const TimestampStream&, const TimestampStream&) = default;
};

struct DistanceMap {
  Grid<double> meters;
  Grid<std::uint8_t> valid;
  double d_max = 0.0;

  DistanceMap() = default;
  DistanceMap(std::size_t h, std::size_t w, double d_max_m)
      : meters(h, w, 0.0), valid(h, w, 0), d_max(d_max_m) {}

  [[nodiscard]] std::size_t height() const noexcept { return meters.height; }
  [[nodiscard]] std::size_t width() const noexcept { return meters.width; }
  [[nodiscard]] std::size_t valid_count() const noexcept;
  friend bool operator==(const DistanceMap&, const DistanceMap&) = default;
};

struct SceneMetrics {
  double mae_m = 0.0;
  double inlier_5pct = 0.0;
  double inlier_1pct = 0.0;
  std::size_t readout_bits_per_pixel = 0;
  /// Full-resolution 8-bit histogram bits over readout bits.
  double compression_ratio = 0.0;
  /// Full-resolution bin count over the method's bin count.
  double bin_count_ratio = 0.0;
  std::size_t evaluated_pixels = 0;
};

struct EwhConfig {
  std::size_t bins = 16;
  bool saturate_8bit = false;
};

using SceneMethod = std::variant<EdhConfig, EwhConfig>;

/// Bits one pixel sends off-sensor for the method.
std::size_t readout_bits(const SceneMethod& method, unsigned bits_per_boundary = 10);
/// Bins in the method's histogram (2^K for an EDH).
std::size_t method_bins(const SceneMethod& method);

struct SceneOptions {
  EstimateMethod edh_estimator = EstimateMethod::EdhArgmax;
  unsigned threads = 1;
  /// Pixels with fewer photons than this over the whole run are invalid.
  std::uint64_t min_photons = 5;
};

struct SceneResult {
  DistanceMap map;
  Grid<std::uint64_t> photons;
  std::size_t readout_bits_per_pixel = 0;
};

/// Gaussian pulse per pixel at the delay of its depth, signal scaled by
/// albedo. Background is albedo-independent unless `couple_background`.
/// Throws std::invalid_argument for shape mismatches, albedo outside [0, 1],
/// or depths outside [0, d_max).
TransientCube synthesize_scene(const Grid<double>& depth_m, const Grid<double>& albedo,
                               const PulseSpec& pulse, std::size_t bins, double bin_width_s,
                               bool couple_background = false);

/// Simulates every pixel independently with seed derive_seed(seed, {row, col}).
/// An EDH runs `cycles` cycles split evenly over its stages, then any extra
/// readouts its config asks for; an EWH accumulates `cycles` cycles.
SceneResult simulate_scene(const TransientCube& cube, const SceneMethod& method,
                           std::size_t cycles, std::uint64_t seed,
                           const SceneOptions& options = {});

struct PixelEstimate {
  double distance_m = 0.0;
  std::uint64_t photons = 0;
};

/// The computation simulate_scene performs for one pixel; depends only on
/// (cube pixel, method, cycles, seed, row, col).
PixelEstimate simulate_pixel(const TransientCube& cube, std::size_t row, std::size_t col,
                             const SceneMethod& method, std::size_t cycles, std::uint64_t seed,
                             EstimateMethod edh_estimator = EstimateMethod::EdhArgmax);

/// Samples a stream from a cube with the same per-pixel seeds and cycle order
/// as simulate_scene.
TimestampStream sample_stream(const TransientCube& cube, std::uint32_t cycles,
                              std::uint64_t seed, unsigned threads = 1);

struct ReplayOptions {
  EstimateMethod edh_estimator = EstimateMethod::EdhMultipeak;
  bool median_filter = false;
  unsigned threads = 1;
  std::uint64_t min_photons = 5;
};

/// Feeds recorded cycles through the same EDH/EWH code as simulate_scene.
/// The stream header carries no bin count or bin width, so they are passed in.
/// Throws std::invalid_argument if the stream is shorter than the method needs.
SceneResult replay_timestamps(const TimestampStream& stream, const SceneMethod& method,
                              std::size_t cycles, std::size_t bins, double bin_width_s,
                              const ReplayOptions& options = {});

/// MAE and inlier fractions over pixels valid in both maps; bandwidth fields
/// from the method and the full-resolution bin count.
SceneMetrics evaluate(const DistanceMap& estimate, const DistanceMap& truth,
                      std::size_t readout_bits_per_pixel, std::size_t method_bin_count,
                      std::size_t full_bins);

/// Median of each valid pixel's valid 3x3 neighborhood (mean of the middle
/// pair for an even count). Invalid pixels stay invalid.
DistanceMap median_filter_3x3(const DistanceMap& map);

/// Ground-truth map from a depth grid (every pixel valid).
DistanceMap truth_map(const Grid<double>& depth_m, double d_max);

}  // namespace countfree
