#include <algorithm>
#include <cmath>
#include <random>

#include "doctest.h"

#include "countfree/edh.hpp"
#include "countfree/estimate.hpp"
#include "countfree/experiments.hpp"
#include "countfree/random.hpp"
#include "countfree/transient.hpp"

using namespace countfree;

namespace {
EdhReadout from_widths(const std::vector<double>& w) {
  EdhReadout r;
  double edge = 0.0;
  for (std::size_t i = 0; i + 1 < w.size(); ++i) r.boundaries.push_back(edge += w[i]);
  r.window_bins = edge + w.back();
  return r;
}

PulseSpec pulse(double peak, double signal, double bkg_per_bin, double fwhm = 2e-9) {
  PulseSpec p;
  p.fwhm_s = fwhm;
  p.peak_bin = peak;
  p.signal_photons = signal;
  p.background_per_bin = bkg_per_bin;
  return p;
}
}  // namespace

TEST_SUITE("estimate") {
  TEST_CASE("argmax returns the narrowest bin's midpoint") {
    const EdhReadout r{{100, 400, 410, 800}, 1000};
    CHECK(argmax_distance(r, 1e-10).delay_bins == 405.0);
    CHECK(argmax_distance(r, 1e-10).method == EstimateMethod::EdhArgmax);
  }

  TEST_CASE("argmax breaks ties toward the first bin") {
    EdhReadout r;
    r.window_bins = 1024;
    for (int i = 1; i < 16; ++i) r.boundaries.push_back(64.0 * i);
    CHECK(argmax_distance(r, 1e-10).delay_bins == 1024.0 / 32);
  }

  TEST_CASE("a zero-width bin wins") {
    const EdhReadout r{{100, 300, 300, 310}, 1000};
    CHECK(narrowest_bin(r) == 2);
    CHECK(argmax_distance(r, 1e-10).delay_bins == 300.0);
  }

  TEST_CASE("distance conversion uses the round trip") {
    const auto e = argmax_distance(EdhReadout{{100, 400, 410, 800}, 1000}, 128e-12);
    CHECK(e.distance_m == doctest::Approx(2.998e8 * 405 * 128e-12 / 2));
  }

  TEST_CASE("curve fit on three symmetric bins hits the center") {
    const auto r = from_widths({188, 10, 4, 10, 188});
    const auto e = curvefit_distance(r, 1e-10);
    CHECK_FALSE(e.fallback);
    CHECK(e.delay_bins == doctest::Approx(200.0).epsilon(1e-12));
  }

  TEST_CASE("curve fit on an asymmetric neighborhood leans toward the narrower side") {
    const auto r = from_widths({188, 12, 4, 8, 188});
    const auto e = curvefit_distance(r, 1e-10);
    CHECK_FALSE(e.fallback);
    CHECK(e.delay_bins > 200.0);
    CHECK(e.delay_bins < 206.0);
  }

  TEST_CASE("collinear inverse widths fall back to argmax") {
    // Third width chosen so (midpoint, 1/width) is exactly linear over the
    // first three bins: (15.5 - w/2) w = 90.
    const double w2 = (31.0 - std::sqrt(241.0)) / 2.0;
    const auto r = from_widths({4, 5, w2, 30, 30});
    const auto e = curvefit_distance(r, 1e-10, {.max_side = 2});
    CHECK(e.fallback);
    CHECK(e.method == EstimateMethod::EdhCurvefit);
    CHECK(e.delay_bins == argmax_distance(r, 1e-10).delay_bins);
  }

  TEST_CASE("too few usable neighbors fall back") {
    const auto r = from_widths({100, 2, 3, 100, 100, 100});
    CHECK(curvefit_distance(r, 1e-10).fallback);
  }

  TEST_CASE("curve fit beats argmax when a boundary splits the peak") {
    // Ideal quantile boundaries of an SBR-1 pulse, with the boundary nearest
    // the peak moved onto it and every boundary jittered by binner noise.
    int closer = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      Rng rng = make_rng(31, {s});
      std::uniform_real_distribution<double> u(0.0, 1.0);
      std::normal_distribution<double> jitter(0.0, 0.3);
      const double peak = 200.0 + 600.0 * u(rng);
      const auto t = build_transient(pulse(peak, 1.0, 1.0 / 1000, 5e-9), 1000, 128e-12);
      const double mode = peak + 0.5;  // bin i covers [i, i + 1)
      EdhReadout r;
      r.window_bins = 1000;
      for (int i = 1; i < 16; ++i) r.boundaries.push_back(true_quantile(t, i / 16.0));
      auto nearest = std::min_element(r.boundaries.begin(), r.boundaries.end(), [&](double a, double b) {
        return std::abs(a - mode) < std::abs(b - mode);
      });
      *nearest = mode + (u(rng) - 0.5);
      for (double& d : r.boundaries) d += jitter(rng);
      std::sort(r.boundaries.begin(), r.boundaries.end());
      const double a = std::abs(argmax_distance(r, 1e-10).delay_bins - mode);
      const double c = std::abs(curvefit_distance(r, 1e-10).delay_bins - mode);
      if (c < a) ++closer;
    }
    CHECK(closer >= 80);
  }

  TEST_CASE("locally narrow bins") {
    const auto r = from_widths({50, 5, 60, 4, 70, 80});
    CHECK(locally_narrow_bins(r) == std::vector<std::size_t>{1, 3});
    CHECK(locally_narrow_bins(from_widths({5, 5, 5, 5})).empty());
    CHECK(locally_narrow_bins(from_widths({3, 5, 7, 2})) == std::vector<std::size_t>{0, 3});
    const auto e = first_narrow_distance(r, 1e-10);
    CHECK(e.delay_bins == 52.5);
    CHECK_FALSE(e.fallback);
    CHECK(first_narrow_distance(from_widths({5, 5, 5, 5}), 1e-10).fallback);
  }

  TEST_CASE("equi-width histogram argmax") {
    EwHistogram h(3, 300);
    h.counts = {0, 5, 2};
    CHECK(ewh_argmax(h, 1e-10).delay_bins == 150.0);
    CHECK_FALSE(ewh_argmax(h, 1e-10).fallback);
    EwHistogram empty(4, 400);
    CHECK(ewh_argmax(empty, 1e-10).delay_bins == 50.0);
    CHECK(ewh_argmax(empty, 1e-10).fallback);
  }

  TEST_CASE("equi-width histogram counting and saturation") {
    EwHistogram h(4, 100, true);
    const std::vector<double> d{0.0, 24.9, 25.0, 99.9, 100.0, -1.0};
    h.add(d);
    CHECK(h.counts == std::vector<std::uint32_t>{2, 1, 0, 1});
    const std::vector<double> many(300, 60.0);
    h.add(many);
    CHECK(h.counts[2] == 255);
    CHECK(h.total() == 4 + 255);
  }

  TEST_CASE("coarse histogram quantization error") {
    const double dt = 33.33e-12;
    EwHistogram h(16, 2000);
    double worst = 0.0;
    for (double d = 0.0; d < 2000.0; d += 0.25) {
      std::fill(h.counts.begin(), h.counts.end(), 0);
      h.add(std::vector<double>{d});
      worst = std::max(worst, std::abs(ewh_argmax(h, dt).delay_bins - d));
    }
    CHECK(worst == doctest::Approx(62.5));
    CHECK(delay_to_distance(worst, dt) == doctest::Approx(0.3123).epsilon(1e-3));
  }

  TEST_CASE("metrics on hand cases") {
    const std::vector<double> truth{10, 10, 10};
    const std::vector<double> est{10, 10.4, 9};
    CHECK(delta_fraction(est, truth, 0.05) == doctest::Approx(2.0 / 3.0));
    CHECK(delta_fraction(est, truth, 0.01) == doctest::Approx(1.0 / 3.0));
    CHECK(mean_absolute_error(est, truth) == doctest::Approx(1.4 / 3.0));
    CHECK(mean_absolute_error(truth, truth) == 0.0);
    CHECK_THROWS_AS(mean_absolute_error(est, std::vector<double>{1.0}), std::invalid_argument);
  }
}

// Single-pixel protocol: B = 1024 at 128 ps, 5 ns pulse, 2 signal photons
// and 1e-4 background photons per bin per cycle.
TEST_SUITE("estimate-monte-carlo") {
  TEST_CASE("locally narrow bins find both peaks of a bimodal transient") {
    const std::size_t bins = 1024;
    std::vector<double> rates(bins, 1e-4);
    for (double peak : {300.0, 700.0}) {
      const auto one = build_transient(pulse(peak, 1.0, 0.0, 5e-9), bins, 128e-12);
      for (std::size_t i = 0; i < bins; ++i) rates[i] += one.rates()[i];
    }
    const TransientDistribution t(rates, 128e-12);
    int hits = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      Rng rng = make_rng(32, {s});
      const auto r = run_edh(t, EdhConfig::uniform(4, 5000), rng);
      const auto narrow = locally_narrow_bins(r);
      auto contains = [&](std::size_t bin, double x) { return r.edge(bin) <= x && x <= r.edge(bin + 1); };
      if (narrow.size() == 2 && contains(narrow[0], 300.5) && contains(narrow[1], 700.5)) ++hits;
    }
    CHECK(hits >= 80);
  }

  TEST_CASE("full-resolution histogram locks onto a strong peak") {
    const auto t = build_transient(pulse(100, 2.0, 1e-4, 5e-9), 1024, 128e-12);
    const CycleSampler sampler(t);
    int hits = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      Rng rng = make_rng(33, {s});
      EwHistogram h(1024, 1024);
      PhotonCycle c;
      for (int i = 0; i < 5000; ++i) {
        sampler.sample_into(rng, c);
        h.add(c);
      }
      if (std::floor(ewh_argmax(h, 128e-12).delay_bins) == 100.0) ++hits;
    }
    CHECK(hits >= 99);
  }

  TEST_CASE("edh single-readout argmax within 1% at high SBR") {
    const auto t = build_transient(pulse(100, 2.0, 1e-4, 5e-9), 1024, 128e-12);
    std::vector<double> est;
    for (std::uint64_t s = 0; s < 100; ++s) {
      Rng rng = make_rng(34, {s});
      est.push_back(argmax_distance(run_edh(t, EdhConfig::uniform(4, 5000), rng), 128e-12).delay_bins);
    }
    CHECK(std::abs(median_of(est) - 100.5) <= 0.01 * 100.5);
  }
}
