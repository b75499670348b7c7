#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "countfree/random.hpp"

namespace countfree {

/// Speed of light used for every delay <-> distance conversion (m/s).
inline constexpr double kSpeedOfLight = 2.998e8;

/// Gaussian laser pulse plus a constant ambient floor, in bin units.
struct PulseSpec {
  double fwhm_s = 2e-9;            ///< pulse FWHM in seconds (IRF already folded in)
  double peak_bin = 0.0;           ///< pulse center in bins, may be fractional
  double signal_photons = 1.0;     ///< expected signal photons per cycle
  double background_per_bin = 0.0; ///< expected ambient photons per bin per cycle

  /// Throws std::invalid_argument if a field is out of range for `bins`.
  void validate(std::size_t bins) const;
};

/// Per-bin Poisson rates of one pixel over one laser cycle.
///
/// Rates are expected photons per bin per cycle. Immutable after
/// construction, so a single instance can be shared by many samplers.
class TransientDistribution {
 public:
  /// Throws std::invalid_argument for fewer than two bins, negative or
  /// non-finite rates, or a non-positive bin width.
  TransientDistribution(std::vector<double> rates, double bin_width_s);

  [[nodiscard]] std::span<const double> rates() const noexcept { return rates_; }
  [[nodiscard]] std::size_t bins() const noexcept { return rates_.size(); }
  [[nodiscard]] double bin_width_s() const noexcept { return bin_width_s_; }
  [[nodiscard]] double cycle_period_s() const noexcept {
    return bin_width_s_ * static_cast<double>(rates_.size());
  }
  /// Sum of all rates (signal + background photons per cycle).
  [[nodiscard]] double total_rate() const noexcept { return total_; }

 private:
  std::vector<double> rates_;
  double bin_width_s_;
  double total_;
};

/// Photon delays detected in one laser cycle, sorted, in [0, B) bin units.
struct PhotonCycle {
  std::vector<double> delays;
};

/// r_i = signal * g_i + background_per_bin, with g a Gaussian sampled at the
/// bin indices, wrapped modulo B and normalized to unit sum.
TransientDistribution build_transient(const PulseSpec& spec, std::size_t bins,
                                      double bin_width_s);

/// Samples laser cycles from a transient.
///
/// Drawing the cycle total from Poisson(sum r) and scattering each photon
/// independently with probability r_i / sum r gives exactly independent
/// Poisson(r_i) per-bin counts, at a cost proportional to the photon count
/// rather than the bin count.
class CycleSampler {
 public:
  explicit CycleSampler(const TransientDistribution& transient);

  /// Overwrites `out` with a fresh cycle.
  void sample_into(Rng& rng, PhotonCycle& out) const;
  [[nodiscard]] PhotonCycle operator()(Rng& rng) const;

  [[nodiscard]] std::size_t bins() const noexcept { return rates_.size(); }

 private:
  std::vector<double> rates_;
  std::vector<double> cumulative_;  // cumulative_[i] = sum of rates_[0..i]
  double total_;
};

PhotonCycle sample_cycle(const TransientDistribution& transient, Rng& rng);

/// Smallest x (bin units) where the piecewise-linear cumulative rate reaches
/// half the total. Throws std::invalid_argument for an all-zero transient.
double true_median(const TransientDistribution& transient);

/// Same crossing rule for an arbitrary quantile q in (0, 1).
double true_quantile(const TransientDistribution& transient, double q);

/// Signal-to-background ratio Phi_sig / Phi_bkg. Returns +infinity when the
/// background is zero.
double sbr(const TransientDistribution& transient, const PulseSpec& spec);

/// Delay (bins) <-> one-way distance (meters).
constexpr double delay_to_distance(double delay_bins, double bin_width_s) noexcept {
  return kSpeedOfLight * delay_bins * bin_width_s / 2.0;
}
constexpr double distance_to_delay(double distance_m, double bin_width_s) noexcept {
  return 2.0 * distance_m / (kSpeedOfLight * bin_width_s);
}

}  // namespace countfree
