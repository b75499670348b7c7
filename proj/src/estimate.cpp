#include "countfree/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace countfree {

std::string_view to_string(EstimateMethod method) noexcept {
  switch (method) {
    case EstimateMethod::EdhArgmax: return "edh-argmax";
    case EstimateMethod::EdhCurvefit: return "edh-curvefit";
    case EstimateMethod::EdhMultipeak: return "edh-multipeak";
    case EstimateMethod::EwhArgmax: return "ewh-argmax";
  }
  return "unknown";
}

DistanceEstimate make_estimate(double delay_bins, double bin_width_s, EstimateMethod method,
                               bool fallback) {
  return {delay_bins, delay_to_distance(delay_bins, bin_width_s), method, fallback};
}

namespace {

void check_readout(const EdhReadout& r) {
  if (r.boundaries.empty()) throw std::invalid_argument("readout has no boundaries");
}

double midpoint(const EdhReadout& r, std::size_t bin) {
  return 0.5 * (r.edge(bin) + r.edge(bin + 1));
}

}  // namespace

std::size_t narrowest_bin(const EdhReadout& readout) {
  check_readout(readout);
  const auto w = readout.widths();
  return static_cast<std::size_t>(std::min_element(w.begin(), w.end()) - w.begin());
}

DistanceEstimate argmax_distance(const EdhReadout& readout, double bin_width_s) {
  return make_estimate(midpoint(readout, narrowest_bin(readout)), bin_width_s,
                       EstimateMethod::EdhArgmax);
}

DistanceEstimate curvefit_distance(const EdhReadout& readout, double bin_width_s,
                                   CurveFitOptions options) {
  const auto w = readout.widths();
  const std::size_t best = narrowest_bin(readout);
  auto fallback = [&] {
    auto e = argmax_distance(readout, bin_width_s);
    e.method = EstimateMethod::EdhCurvefit;
    e.fallback = true;
    return e;
  };

  const double n = static_cast<double>(w.size());
  const double mean = std::accumulate(w.begin(), w.end(), 0.0) / n;
  double var = 0.0;
  for (double x : w) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / n);
  auto usable = [&](std::size_t i) { return w[i] > 0.0 && w[i] - w[best] <= sd; };

  std::size_t lo = best;
  std::size_t hi = best;
  while (lo > 0 && best - (lo - 1) <= options.max_side && usable(lo - 1)) --lo;
  while (hi + 1 < w.size() && (hi + 1) - best <= options.max_side && usable(hi + 1)) ++hi;
  if (hi - lo + 1 < 3 || !(w[best] > 0.0)) return fallback();

  // Least squares on x centered at the narrowest bin's midpoint.
  const double x0 = midpoint(readout, best);
  double s[5] = {};  // sums of x^0..x^4
  double t[3] = {};  // sums of y x^0..x^2
  for (std::size_t i = lo; i <= hi; ++i) {
    const double x = midpoint(readout, i) - x0;
    const double y = 1.0 / w[i];
    double p = 1.0;
    for (int k = 0; k < 5; ++k) {
      s[k] += p;
      if (k < 3) t[k] += y * p;
      p *= x;
    }
  }
  // Normal equations for (alpha, beta, gamma), solved by Cramer's rule.
  const double a[3][3] = {{s[4], s[3], s[2]}, {s[3], s[2], s[1]}, {s[2], s[1], s[0]}};
  const double rhs[3] = {t[2], t[1], t[0]};
  auto det3 = [](const double m[3][3]) {
    return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
           m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
           m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  };
  const double det = det3(a);
  if (!(std::abs(det) > 0.0) || !std::isfinite(det)) return fallback();
  double coef[2];
  for (int c = 0; c < 2; ++c) {
    double m[3][3];
    for (int r = 0; r < 3; ++r)
      for (int k = 0; k < 3; ++k) m[r][k] = (k == c) ? rhs[r] : a[r][k];
    coef[c] = det3(m) / det;
  }
  const double alpha = coef[0];
  const double beta = coef[1];
  // Relative threshold so round-off on collinear data does not count as curvature.
  double y_scale = 0.0;
  for (std::size_t i = lo; i <= hi; ++i) y_scale = std::max(y_scale, 1.0 / w[i]);
  const double x_span = readout.edge(hi + 1) - readout.edge(lo);
  if (!(alpha < -1e-12 * y_scale / (x_span * x_span))) return fallback();

  const double vertex =
      std::clamp(x0 - beta / (2.0 * alpha), readout.edge(lo), readout.edge(hi + 1));
  return make_estimate(vertex, bin_width_s, EstimateMethod::EdhCurvefit);
}

std::vector<std::size_t> locally_narrow_bins(const EdhReadout& readout) {
  check_readout(readout);
  const auto w = readout.widths();
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const bool left = i == 0 || w[i] < w[i - 1];
    const bool right = i + 1 == w.size() || w[i] < w[i + 1];
    if (left && right) out.push_back(i);
  }
  return out;
}

DistanceEstimate first_narrow_distance(const EdhReadout& readout, double bin_width_s) {
  const auto bins = locally_narrow_bins(readout);
  if (bins.empty()) {
    auto e = argmax_distance(readout, bin_width_s);
    e.method = EstimateMethod::EdhMultipeak;
    e.fallback = true;
    return e;
  }
  return make_estimate(midpoint(readout, bins.front()), bin_width_s,
                       EstimateMethod::EdhMultipeak);
}

EwHistogram::EwHistogram(std::size_t bins, double window_bins_, bool saturate)
    : counts(bins, 0), window_bins(window_bins_), saturate_8bit(saturate) {
  if (bins == 0) throw std::invalid_argument("histogram needs at least one bin");
  if (!(window_bins_ > 0.0)) throw std::invalid_argument("histogram window must be positive");
}

std::uint64_t EwHistogram::total() const noexcept {
  return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

void EwHistogram::add(std::span<const double> delays) {
  const double scale = static_cast<double>(counts.size()) / window_bins;
  const std::size_t last = counts.size() - 1;
  for (double d : delays) {
    if (!(d >= 0.0) || !(d < window_bins)) continue;
    const auto bin = std::min(static_cast<std::size_t>(d * scale), last);
    auto& c = counts[bin];
    if (!saturate_8bit || c < 255) ++c;
  }
}

EwHistogram ewh_accumulate(std::span<const PhotonCycle> cycles, std::size_t bins,
                           double window_bins) {
  EwHistogram h(bins, window_bins);
  for (const auto& c : cycles) h.add(c);
  return h;
}

DistanceEstimate ewh_argmax(const EwHistogram& histogram, double bin_width_s) {
  const auto it = std::max_element(histogram.counts.begin(), histogram.counts.end());
  const auto bin = static_cast<double>(it - histogram.counts.begin());
  const double delay = (bin + 0.5) * histogram.bin_width();
  return make_estimate(delay, bin_width_s, EstimateMethod::EwhArgmax, *it == 0);
}

namespace {
void check_pair(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("estimate and truth lengths differ");
  if (a.empty()) throw std::invalid_argument("metric over an empty set");
}
}  // namespace

double delta_fraction(std::span<const double> estimates, std::span<const double> truth,
                      double delta) {
  check_pair(estimates, truth);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < estimates.size(); ++i)
    if (std::abs(estimates[i] - truth[i]) <= delta * truth[i]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(estimates.size());
}

double mean_absolute_error(std::span<const double> estimates, std::span<const double> truth) {
  check_pair(estimates, truth);
  double sum = 0.0;
  for (std::size_t i = 0; i < estimates.size(); ++i) sum += std::abs(estimates[i] - truth[i]);
  return sum / static_cast<double>(estimates.size());
}

}  // namespace countfree
