#include <cmath>
#include <stdexcept>

#include "doctest.h"

#include "countfree/binner.hpp"
#include "countfree/markov.hpp"
#include "countfree/random.hpp"
#include "countfree/transient.hpp"

using namespace countfree;

namespace {
TransientDistribution peaked(double peak, double signal, double bkg_total) {
  PulseSpec p;
  p.fwhm_s = 2e-9;
  p.peak_bin = peak;
  p.signal_photons = signal;
  p.background_per_bin = bkg_total / 1000.0;
  return build_transient(p, 1000, 128e-12);
}
}  // namespace

TEST_SUITE("binner") {
  TEST_CASE("split counts early and late photons inside the window") {
    const std::vector<double> d{1.5, 2.5, 9.0};
    CHECK(split_cycle(d, 5.0, {0, 10}) == CycleSplit{2, 1});
    CHECK(split_cycle({}, 5.0, {0, 10}) == CycleSplit{0, 0});
  }

  TEST_CASE("a photon exactly at cv is late; photons outside are inhibited") {
    const std::vector<double> d{0.5, 2.0, 5.0, 7.5, 10.0, 12.0};
    CHECK(split_cycle(d, 5.0, {2, 10}) == CycleSplit{1, 2});
  }

  TEST_CASE("uniform photons split evenly about the window midpoint") {
    const TransientDistribution t(std::vector<double>(10, 0.2), 1e-10);
    Rng rng(11);
    CycleSplit total;
    for (int i = 0; i < 100000; ++i) total += split_cycle(sample_cycle(t, rng).delays, 5.0, {0, 10});
    const double e = static_cast<double>(total.n_early);
    const double l = static_cast<double>(total.n_late);
    CHECK(std::abs(e - l) / l < 0.02);
  }

  TEST_CASE("update examples") {
    BinnerState a(500, {0, 1000}, StepSchedule::constant(1));
    a.update({3, 1});
    CHECK(a.cv() == 499.0);

    BinnerState b(0, {0, 1000}, StepSchedule::constant(1));
    b.update({5, 0});
    CHECK(b.cv() == 0.0);

    BinnerState c(500, {0, 1000}, StepSchedule::weighted(1.0));
    c.update({1, 4});
    CHECK(c.cv() == 503.0);

    BinnerState d(500, {0, 1000}, StepSchedule::constant(1));
    d.update({2, 2});
    CHECK(d.cv() == 500.0);
    CHECK(d.cycle_index() == 1);
  }

  TEST_CASE("quantile weights scale the step on each side") {
    BinnerState b(500, {0, 1000}, StepSchedule::constant(2), {3, 1});
    b.update({0, 1});
    CHECK(b.cv() == 506.0);
    b.update({1, 0});
    CHECK(b.cv() == 504.0);
  }

  TEST_CASE("the functional update leaves its argument alone") {
    const BinnerState a(10, {0, 20}, StepSchedule::constant(1));
    const BinnerState b = update(a, {0, 1});
    CHECK(a.cv() == 10.0);
    CHECK(b.cv() == 11.0);
  }

  TEST_CASE("a frozen binner refuses updates") {
    BinnerState b(10, {0, 20});
    b.freeze();
    CHECK_THROWS_AS(b.update({0, 3}), std::logic_error);
    CHECK(b.cv() == 10.0);
  }

  TEST_CASE("coarse-to-fine steps through its stages and keeps the last step") {
    const auto s = StepSchedule::coarse_to_fine({{8, 2}, {4, 1}, {1, 1}});
    const CycleSplit any{1, 0};
    CHECK(s.step(0, any) == 8.0);
    CHECK(s.step(1, any) == 8.0);
    CHECK(s.step(2, any) == 4.0);
    CHECK(s.step(3, any) == 1.0);
    CHECK(s.step(100, any) == 1.0);
    const auto d = StepSchedule::coarse_to_fine_default(400);
    CHECK(d.step(0, any) == 8.0);
    CHECK(d.step(100, any) == 4.0);
    CHECK(d.step(200, any) == 2.0);
    CHECK(d.step(399, any) == 1.0);
  }

  TEST_CASE("schedule validation") {
    CHECK_THROWS_AS(StepSchedule::constant(0.0), std::invalid_argument);
    CHECK_THROWS_AS(StepSchedule::weighted(-1.0), std::invalid_argument);
    CHECK_THROWS_AS(StepSchedule::coarse_to_fine({}), std::invalid_argument);
    CHECK_THROWS_AS(StepSchedule::coarse_to_fine({{2, 1}, {4, 1}}), std::invalid_argument);
    CHECK_THROWS_AS(BinnerState(5, {0, 10}, {}, {0, 1}), std::invalid_argument);
  }

  TEST_CASE("cv outside the window is rejected at construction and clamped by set_cv") {
    CHECK_THROWS_AS(BinnerState(50, {0, 10}), std::invalid_argument);
    BinnerState b(5, {0, 10});
    b.set_cv(50);
    CHECK(b.cv() == 10.0);
    b.set_cv(-3);
    CHECK(b.cv() == 0.0);
  }

  TEST_CASE("an all-zero transient leaves the trajectory flat") {
    const TransientDistribution t(std::vector<double>(100, 0.0), 1e-10);
    BinnerState b(37.5, {0, 100});
    Rng rng(1);
    for (double cv : run(b, t, 500, rng)) CHECK(cv == 37.5);
  }

  TEST_CASE("batched runs still report one value per cycle") {
    const auto t = peaked(100, 1.0, 0.1);
    BinnerState b(500, {0, 1000});
    Rng rng(2);
    const auto traj = run(b, t, 1001, rng, {.batch = 10});
    CHECK(traj.size() == 1001);
    CHECK(b.cycle_index() == 101);
  }

  TEST_CASE("strong signal without background converges to the peak") {
    const auto t = peaked(100, 2.0, 0.0);
    int hits = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      Rng rng = make_rng(21, {s});
      BinnerState b(500, {0, 1000}, StepSchedule::constant(1));
      run(b, t, 5000, rng);
      if (std::abs(b.cv() - 100.0) <= 20.0) ++hits;
    }
    CHECK(hits >= 95);
  }

  TEST_CASE("at SBR 1 the final cv sits at the stationary mode, not the peak") {
    const auto t = peaked(100, 1.0, 1.0);
    const auto mode = static_cast<double>(stationary(build_model(t.rates())).mode());
    CHECK(std::abs(mode - true_median(t)) <= 1.0);
    CHECK(mode - 100.0 > 5.0);
    int hits = 0;
    for (std::uint64_t s = 0; s < 100; ++s) {
      Rng rng = make_rng(22, {s});
      BinnerState b(500, {0, 1000}, StepSchedule::constant(1));
      run(b, t, 5000, rng);
      if (std::abs(b.cv() - mode) <= 10.0) ++hits;
    }
    CHECK(hits >= 90);
  }
}
