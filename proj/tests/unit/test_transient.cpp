#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"

#include "countfree/random.hpp"
#include "countfree/transient.hpp"
#include "oracles.hpp"

using namespace countfree;

namespace {
PulseSpec pulse(double peak, double signal, double bkg_per_bin, double fwhm = 2e-9) {
  PulseSpec p;
  p.fwhm_s = fwhm;
  p.peak_bin = peak;
  p.signal_photons = signal;
  p.background_per_bin = bkg_per_bin;
  return p;
}
}  // namespace

TEST_SUITE("transient") {
  TEST_CASE("zero signal gives a flat background") {
    const auto t = build_transient(pulse(100, 0.0, 0.001), 1000, 128e-12);
    for (double r : t.rates()) CHECK(r == doctest::Approx(0.001).epsilon(1e-15));
  }

  TEST_CASE("2 ns pulse at bin 100 peaks at bin 100") {
    const auto t = build_transient(pulse(100, 1.0, 0.0), 1000, 128e-12);
    const auto r = t.rates();
    const auto top = std::max_element(r.begin(), r.end()) - r.begin();
    CHECK(top == 100);
    for (std::size_t i = 1; i < 100; ++i) CHECK(r[i] >= r[i - 1]);
    for (std::size_t i = 101; i < 600; ++i) CHECK(r[i] <= r[i - 1]);
  }

  TEST_CASE("rates match a bin-by-bin density oracle") {
    for (double peak : {0.0, 3.7, 500.0, 998.2}) {
      const double sigma = 2e-9 / 2.355 / 128e-12;
      const auto t = build_transient(pulse(peak, 1.3, 2e-4), 1000, 128e-12);
      const auto ref = oracle::pulse_rates(peak, sigma, 1.3, 2e-4, 1000);
      for (std::size_t i = 0; i < ref.size(); ++i)
        CHECK(t.rates()[i] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("rejects bad specs") {
    CHECK_THROWS_AS(build_transient(pulse(100, 1, 0), 1, 1e-10), std::invalid_argument);
    CHECK_THROWS_AS(build_transient(pulse(1000, 1, 0), 1000, 1e-10), std::invalid_argument);
    CHECK_THROWS_AS(build_transient(pulse(10, -1, 0), 1000, 1e-10), std::invalid_argument);
    CHECK_THROWS_AS(build_transient(pulse(10, 1, 0, 0.0), 1000, 1e-10), std::invalid_argument);
    CHECK_THROWS_AS(TransientDistribution({1.0, -0.5}, 1e-10), std::invalid_argument);
  }

  TEST_CASE("all-zero rates never produce photons") {
    const TransientDistribution t(std::vector<double>(50, 0.0), 1e-10);
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) CHECK(sample_cycle(t, rng).delays.empty());
  }

  TEST_CASE("cycle delays are sorted and inside the window") {
    const auto t = build_transient(pulse(10, 3.0, 0.01), 200, 1e-10);
    Rng rng(2);
    for (int i = 0; i < 2000; ++i) {
      const auto c = sample_cycle(t, rng);
      CHECK(std::is_sorted(c.delays.begin(), c.delays.end()));
      for (double d : c.delays) CHECK((d >= 0.0 && d < 200.0));
    }
  }

  TEST_CASE("mean photons per cycle equals the total rate") {
    const auto t = build_transient(pulse(300, 1.0, 1.0 / 1000), 1000, 128e-12);
    Rng rng(3);
    const CycleSampler s(t);
    PhotonCycle c;
    double n = 0.0;
    for (int i = 0; i < 100000; ++i) {
      s.sample_into(rng, c);
      n += static_cast<double>(c.delays.size());
    }
    CHECK(std::abs(n / 100000 - 2.0) < 0.05);
  }

  TEST_CASE("per-bin frequencies within 3 standard errors for 99% of bins") {
    const auto t = build_transient(pulse(400, 1.0, 1.0 / 1000), 1000, 128e-12);
    Rng rng(4);
    const CycleSampler s(t);
    PhotonCycle c;
    std::vector<double> counts(1000, 0.0);
    const int cycles = 1000000;
    for (int i = 0; i < cycles; ++i) {
      s.sample_into(rng, c);
      for (double d : c.delays) counts[static_cast<std::size_t>(d)] += 1.0;
    }
    int good = 0;
    for (std::size_t i = 0; i < 1000; ++i) {
      const double r = t.rates()[i];
      const double se = std::sqrt(r / cycles);  // Poisson mean r per cycle
      if (std::abs(counts[i] / cycles - r) <= 3 * se) ++good;
    }
    CHECK(good >= 990);
  }

  TEST_CASE("median of uniform rates is the window midpoint") {
    const TransientDistribution t(std::vector<double>(1000, 0.002), 1e-10);
    CHECK(true_median(t) == doctest::Approx(500.0).epsilon(1e-12));
  }

  TEST_CASE("high-SBR median sits on the peak") {
    const auto t = build_transient(pulse(100, 5.0, 1e-7), 1000, 128e-12);
    CHECK(std::abs(true_median(t) - 100.0) <= 1.0);
  }

  TEST_CASE("median matches a cumulative-sum scan") {
    Rng rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
      std::vector<double> r(2 + trial % 97);
      for (double& x : r) x = u(rng) < 0.2 ? 0.0 : u(rng);
      r[trial % r.size()] += 0.5;
      std::vector<double> cum(r.size());
      std::partial_sum(r.begin(), r.end(), cum.begin());
      const double half = cum.back() / 2;
      const auto k = static_cast<std::size_t>(std::lower_bound(cum.begin(), cum.end(), half) - cum.begin());
      const double before = k == 0 ? 0.0 : cum[k - 1];
      const double expect = static_cast<double>(k) + (half - before) / r[k];
      CHECK(true_median(TransientDistribution(r, 1e-10)) == doctest::Approx(expect).epsilon(1e-9));
    }
  }

  TEST_CASE("median of an all-zero transient throws") {
    CHECK_THROWS_AS(true_median(TransientDistribution(std::vector<double>(4, 0.0), 1e-10)),
                    std::invalid_argument);
  }

  TEST_CASE("SBR arithmetic") {
    const auto a = pulse(10, 1.0, 1.0 / 1000);
    CHECK(sbr(build_transient(a, 1000, 1e-10), a) == doctest::Approx(1.0));
    const auto b = pulse(10, 0.1, 1e-4);
    CHECK(sbr(build_transient(b, 1024, 128e-12), b) == doctest::Approx(0.1 / 0.1024));
    const auto c = pulse(10, 2.0, 1e-4);
    CHECK(sbr(build_transient(c, 2000, 33.33e-12), c) == doctest::Approx(10.0));
    const auto d = pulse(10, 2.0, 0.0);
    CHECK(std::isinf(sbr(build_transient(d, 2000, 33.33e-12), d)));
  }

  TEST_CASE("delay and distance convert both ways") {
    CHECK(delay_to_distance(1024, 128e-12) == doctest::Approx(19.65).epsilon(1e-3));
    CHECK(distance_to_delay(delay_to_distance(733.25, 50e-12), 50e-12) == doctest::Approx(733.25));
  }
}
