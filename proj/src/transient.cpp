#include "countfree/transient.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace countfree {

void PulseSpec::validate(std::size_t bins) const {
  if (bins < 2) throw std::invalid_argument("transient needs at least 2 bins");
  if (!(fwhm_s > 0.0) || !std::isfinite(fwhm_s))
    throw std::invalid_argument("pulse FWHM must be positive");
  if (!(peak_bin >= 0.0) || !(peak_bin < static_cast<double>(bins)))
    throw std::invalid_argument("peak_bin " + std::to_string(peak_bin) + " outside [0, " +
                                std::to_string(bins) + ")");
  if (!(signal_photons >= 0.0) || !std::isfinite(signal_photons))
    throw std::invalid_argument("signal_photons must be >= 0");
  if (!(background_per_bin >= 0.0) || !std::isfinite(background_per_bin))
    throw std::invalid_argument("background_per_bin must be >= 0");
}

TransientDistribution::TransientDistribution(std::vector<double> rates, double bin_width_s)
    : rates_(std::move(rates)), bin_width_s_(bin_width_s), total_(0.0) {
  if (rates_.size() < 2) throw std::invalid_argument("transient needs at least 2 bins");
  if (!(bin_width_s_ > 0.0) || !std::isfinite(bin_width_s_))
    throw std::invalid_argument("bin width must be positive");
  for (double r : rates_) {
    if (!(r >= 0.0) || !std::isfinite(r))
      throw std::invalid_argument("transient rates must be finite and non-negative");
    total_ += r;
  }
}

TransientDistribution build_transient(const PulseSpec& spec, std::size_t bins,
                                      double bin_width_s) {
  spec.validate(bins);
  if (!(bin_width_s > 0.0)) throw std::invalid_argument("bin width must be positive");

  const double n = static_cast<double>(bins);
  const double sigma = spec.fwhm_s / 2.355 / bin_width_s;
  std::vector<double> shape(bins);
  for (std::size_t i = 0; i < bins; ++i) {
    // signed circular distance to the peak
    double d = std::fmod(static_cast<double>(i) - spec.peak_bin + n / 2.0, n);
    if (d < 0.0) d += n;
    d -= n / 2.0;
    shape[i] = std::exp(-0.5 * (d / sigma) * (d / sigma));
  }
  const double norm = std::accumulate(shape.begin(), shape.end(), 0.0);

  std::vector<double> rates(bins);
  for (std::size_t i = 0; i < bins; ++i)
    rates[i] = spec.signal_photons * shape[i] / norm + spec.background_per_bin;
  return TransientDistribution(std::move(rates), bin_width_s);
}

CycleSampler::CycleSampler(const TransientDistribution& transient)
    : rates_(transient.rates().begin(), transient.rates().end()),
      cumulative_(rates_.size()),
      total_(0.0) {
  std::partial_sum(rates_.begin(), rates_.end(), cumulative_.begin());
  total_ = cumulative_.back();
}

void CycleSampler::sample_into(Rng& rng, PhotonCycle& out) const {
  out.delays.clear();
  if (total_ <= 0.0) return;
  std::poisson_distribution<int> count_dist(total_);
  const int count = count_dist(rng);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double top = std::nextafter(static_cast<double>(rates_.size()), 0.0);
  for (int k = 0; k < count; ++k) {
    const double x = unit(rng) * total_;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), x);
    if (it == cumulative_.end()) --it;
    const auto bin = static_cast<std::size_t>(it - cumulative_.begin());
    // The position of x inside its cumulative slot is itself uniform.
    const double below = bin == 0 ? 0.0 : cumulative_[bin - 1];
    double frac = (x - below) / rates_[bin];
    frac = std::clamp(frac, 0.0, std::nextafter(1.0, 0.0));
    out.delays.push_back(std::min(static_cast<double>(bin) + frac, top));
  }
  std::sort(out.delays.begin(), out.delays.end());
}

PhotonCycle CycleSampler::operator()(Rng& rng) const {
  PhotonCycle cycle;
  sample_into(rng, cycle);
  return cycle;
}

PhotonCycle sample_cycle(const TransientDistribution& transient, Rng& rng) {
  return CycleSampler(transient)(rng);
}

double true_quantile(const TransientDistribution& transient, double q) {
  if (!(q > 0.0 && q < 1.0)) throw std::invalid_argument("quantile must lie in (0, 1)");
  const auto rates = transient.rates();
  double total = 0.0;
  for (double r : rates) total += r;
  if (!(total > 0.0)) throw std::invalid_argument("quantile of an all-zero transient");

  const double target = total * q;
  double below = 0.0;
  for (std::size_t k = 0; k < rates.size(); ++k) {
    const double above = below + rates[k];
    if (above >= target) return static_cast<double>(k) + (target - below) / rates[k];
    below = above;
  }
  return static_cast<double>(rates.size());
}

double true_median(const TransientDistribution& transient) {
  return true_quantile(transient, 0.5);
}

double sbr(const TransientDistribution& transient, const PulseSpec& spec) {
  const double background = spec.background_per_bin * static_cast<double>(transient.bins());
  if (background <= 0.0) return std::numeric_limits<double>::infinity();
  return spec.signal_photons / background;
}

}  // namespace countfree
