#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"

#include "countfree/edh.hpp"
#include "countfree/estimate.hpp"
#include "countfree/random.hpp"
#include "countfree/transient.hpp"

using namespace countfree;

namespace {
TransientDistribution peaked(double peak, double signal, double bkg_total, std::size_t bins = 1000) {
  PulseSpec p;
  p.fwhm_s = 2e-9;
  p.peak_bin = peak;
  p.signal_photons = signal;
  p.background_per_bin = bkg_total / static_cast<double>(bins);
  return build_transient(p, bins, 128e-12);
}

// Single-pixel protocol: B = 1024 at 128 ps, 5 ns pulse, 2 signal photons
// and 1e-4 background photons per bin per cycle.
TransientDistribution protocol_pulse(double peak) {
  PulseSpec p;
  p.fwhm_s = 5e-9;
  p.peak_bin = peak;
  p.signal_photons = 2.0;
  p.background_per_bin = 1e-4;
  return build_transient(p, 1024, 128e-12);
}

double variance(const std::vector<double>& v) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}
}  // namespace

TEST_SUITE("edh") {
  TEST_CASE("init places the root at the window midpoint") {
    const auto t = init_tree(EdhConfig::uniform(4, 5000), 1024);
    CHECK(t.node(0).cv() == 512.0);
    CHECK(t.current_stage() == 0);
    CHECK(t.active_count() == 1);

    const auto one = init_tree(EdhConfig::uniform(1, 100), 1000);
    CHECK(one.node_count() == 1);
    CHECK(one.node(0).cv() == 500.0);

    const auto three = init_tree(EdhConfig::uniform(3, 300), 2000);
    CHECK(three.node_count() == 7);
    CHECK(three.active_count() == 1);
    CHECK_FALSE(three.launched(1));
  }

  TEST_CASE("advancing splits the parent window at its frozen cv") {
    auto t = init_tree(EdhConfig::uniform(4, 5000), 1024);
    t.node(0).set_cv(600);
    CHECK(t.advance_stage());
    CHECK(t.node(0).frozen());
    CHECK(t.node(1).cv() == 300.0);
    CHECK(t.node(2).cv() == 812.0);
    CHECK(t.node(1).window() == Window{0, 600});
    CHECK(t.node(2).window() == Window{600, 1024});

    auto u = init_tree(EdhConfig::uniform(2, 5000), 1024);
    CHECK(u.advance_stage());
    CHECK(u.node(1).cv() == 256.0);
    CHECK(u.node(2).cv() == 768.0);
    CHECK_FALSE(u.advance_stage());
    CHECK(u.complete());
  }

  TEST_CASE("all binners below the current stage are frozen") {
    auto t = init_tree(EdhConfig::uniform(4, 400), 1000);
    t.advance_stage();
    t.advance_stage();
    for (std::size_t n = 0; n < 3; ++n) CHECK(t.node(n).frozen());
    for (std::size_t n = 3; n < 7; ++n) CHECK_FALSE(t.node(n).frozen());
  }

  TEST_CASE("same-stage binners share cycles, each inside its own window") {
    auto t = init_tree(EdhConfig::uniform(2, 200), 100);
    t.advance_stage();  // children at 25 and 75
    const std::vector<double> d{10.0, 20.0, 30.0, 60.0};
    t.observe(d);
    CHECK(t.node(1).cv() == 24.0);  // (2 early, 1 late) within [0, 50)
    CHECK(t.node(2).cv() == 74.0);  // (1 early, 0 late) within [50, 100)
  }

  TEST_CASE("an idle tree reads out dyadic midpoints") {
    const TransientDistribution zero(std::vector<double>(1024, 0.0), 1e-10);
    Rng rng(1);
    const auto r = run_edh(zero, EdhConfig::uniform(4, 5000), rng);
    REQUIRE(r.boundaries.size() == 15);
    for (std::size_t i = 0; i < 15; ++i) CHECK(r.boundaries[i] == 64.0 * static_cast<double>(i + 1));
  }

  TEST_CASE("uniform transient converges to the octiles") {
    const TransientDistribution flat(std::vector<double>(1000, 0.001), 1e-10);
    Rng rng(2);
    const auto r = run_edh(flat, EdhConfig::uniform(3, 100000), rng);
    for (std::size_t i = 0; i < 7; ++i)
      CHECK(std::abs(r.boundaries[i] - 125.0 * static_cast<double>(i + 1)) <= 30.0);
  }

  TEST_CASE("one readout equals run_edh") {
    const auto t = peaked(300, 1.0, 1.0);
    auto cfg = EdhConfig::uniform(4, 2000);
    Rng a(4);
    Rng b(4);
    CHECK(multi_readout(t, cfg, a).boundaries == run_edh(t, cfg, b).boundaries);
  }

  TEST_CASE("median of five readouts lowers estimate variance") {
    const auto t = peaked(300, 1.0, 1.0);
    auto single = EdhConfig::uniform(4, 5000);
    auto multi = single;
    multi.readouts = 5;
    std::vector<double> e1;
    std::vector<double> e5;
    for (std::uint64_t s = 0; s < 100; ++s) {
      Rng r1 = make_rng(5, {s});
      Rng r5 = make_rng(5, {s});
      e1.push_back(argmax_distance(multi_readout(t, single, r1), 128e-12).delay_bins);
      e5.push_back(argmax_distance(multi_readout(t, multi, r5), 128e-12).delay_bins);
    }
    CHECK(variance(e5) < variance(e1));
  }

  TEST_CASE("median readout is element-wise and re-sorted") {
    std::vector<EdhReadout> rs(3);
    rs[0] = {{1, 5, 9}, 10};
    rs[1] = {{2, 3, 8}, 10};
    rs[2] = {{4, 6, 7}, 10};
    CHECK(median_readout(rs).boundaries == std::vector<double>{2, 5, 8});
    std::vector<EdhReadout> even(2);
    even[0] = {{1, 9, 9.5}, 10};
    even[1] = {{3, 2, 9.5}, 10};
    const auto m = median_readout(even);
    CHECK(std::is_sorted(m.boundaries.begin(), m.boundaries.end()));
    CHECK(m.boundaries == std::vector<double>{2, 5.5, 9.5});
  }

  TEST_CASE("in-bin SBR worked example") {
    CHECK(bin_sbr(50, 1000, 2.0, 2.0, 3) == doctest::Approx(4.0));
    CHECK(bin_sbr(20, 1000, 2.0, 2.0, 3) == doctest::Approx(11.5));
  }

  TEST_CASE("config validation") {
    auto cfg = EdhConfig::uniform(4, 5000);
    CHECK(cfg.per_stage_cycles == std::vector<std::size_t>{1250, 1250, 1250, 1250});
    CHECK(EdhConfig::uniform(3, 10).per_stage_cycles == std::vector<std::size_t>{3, 3, 4});
    cfg.per_stage_cycles[0] = 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    CHECK_THROWS_AS(EdhConfig::uniform(0, 10).validate(), std::invalid_argument);
    auto r = EdhConfig::uniform(2, 10);
    r.readouts = 0;
    CHECK_THROWS_AS(r.validate(), std::invalid_argument);
  }

  TEST_CASE("readout serialization round trips") {
    const EdhReadout r{{10.25, 500.0, 990.5}, 1000};
    const auto back = readout_from_json(to_json(r));
    CHECK(back.boundaries == r.boundaries);
    CHECK(back.window_bins == r.window_bins);

    const auto codes = quantize(r);
    CHECK(codes == std::vector<std::uint32_t>{10, 512, 1013});
    const auto dq = dequantize(codes, 1000);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::abs(dq.boundaries[i] - r.boundaries[i]) <= 1000.0 / 1023 / 2 + 1e-9);
  }

  TEST_CASE("readout size in bits") {
    static_assert(edh_readout_bits(4, 10) == 150);
    CHECK(edh_readout_bits(3, 8) == 56);
  }
}

TEST_SUITE("edh-monte-carlo") {
  TEST_CASE("narrowest bin covers the peak at high SBR") {
    int hits = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      Rng rng = make_rng(3, {s});
      const double peak = 50.0 + 9.0 * static_cast<double>(s);
      const auto r = run_edh(protocol_pulse(peak), EdhConfig::uniform(4, 5000), rng);
      const std::size_t i = narrowest_bin(r);
      // Bin `peak` covers [peak, peak + 1).
      if (r.edge(i) <= peak + 1.0 && r.edge(i + 1) >= peak) ++hits;
    }
    CHECK(hits >= 90);
  }
}
