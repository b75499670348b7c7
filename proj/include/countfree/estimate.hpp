#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "countfree/edh.hpp"

namespace countfree {

enum class EstimateMethod { EdhArgmax, EdhCurvefit, EdhMultipeak, EwhArgmax };

std::string_view to_string(EstimateMethod method) noexcept;

struct DistanceEstimate {
  double delay_bins = 0.0;
  double distance_m = 0.0;
  EstimateMethod method = EstimateMethod::EdhArgmax;
  /// Set when the requested estimator could not run and a simpler one (or a
  /// default location) was used instead.
  bool fallback = false;
};

DistanceEstimate make_estimate(double delay_bins, double bin_width_s, EstimateMethod method,
                               bool fallback = false);

/// Index of the narrowest bin, earliest on ties.
std::size_t narrowest_bin(const EdhReadout& readout);

/// Midpoint of the narrowest bin.
DistanceEstimate argmax_distance(const EdhReadout& readout, double bin_width_s);

/// Vertex of a least-squares parabola through (bin midpoint, 1 / width) over
/// the narrowest bin and up to two contiguous neighbors on each side whose
/// widths lie within one population standard deviation of the mean width.
/// The vertex is clamped to the span of the neighborhood's bins. Falls back
/// to argmax_distance (flagged) with fewer than three points or a fit that
/// does not open downward.
struct CurveFitOptions {
  /// Most neighbors taken on each side of the narrowest bin.
  std::size_t max_side = 2;
};

DistanceEstimate curvefit_distance(const EdhReadout& readout, double bin_width_s,
                                   CurveFitOptions options = {});

/// Bins strictly narrower than each existing neighbor, in order.
std::vector<std::size_t> locally_narrow_bins(const EdhReadout& readout);

/// Midpoint of the first locally narrow bin; falls back to argmax (flagged)
/// when there is none.
DistanceEstimate first_narrow_distance(const EdhReadout& readout, double bin_width_s);

/// Equi-width histogram of photon counts over the cycle window.
struct EwHistogram {
  std::vector<std::uint32_t> counts;
  double window_bins = 0.0;
  /// Counters stop at 255 instead of growing without bound.
  bool saturate_8bit = false;

  EwHistogram(std::size_t bins, double window_bins, bool saturate_8bit = false);

  [[nodiscard]] std::size_t bins() const noexcept { return counts.size(); }
  [[nodiscard]] double bin_width() const noexcept {
    return window_bins / static_cast<double>(counts.size());
  }
  [[nodiscard]] std::uint64_t total() const noexcept;

  void add(std::span<const double> delays);
  void add(const PhotonCycle& cycle) { add(cycle.delays); }
};

/// Accumulates every cycle into a fresh histogram.
EwHistogram ewh_accumulate(std::span<const PhotonCycle> cycles, std::size_t bins,
                           double window_bins);

/// Center of the fullest bin, earliest on ties. An empty histogram gives the
/// center of bin 0, flagged.
DistanceEstimate ewh_argmax(const EwHistogram& histogram, double bin_width_s);

/// Fraction of estimates with |estimate - truth| <= delta * truth.
double delta_fraction(std::span<const double> estimates, std::span<const double> truth,
                      double delta);
/// Mean absolute error.
double mean_absolute_error(std::span<const double> estimates, std::span<const double> truth);

}  // namespace countfree
