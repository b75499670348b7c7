#include "countfree/binner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace countfree {

CycleSplit split_cycle(std::span<const double> delays, double cv, Window window) {
  const auto lo = std::lower_bound(delays.begin(), delays.end(), window.lo);
  const auto mid = std::lower_bound(lo, delays.end(), cv);
  const auto hi = std::lower_bound(mid, delays.end(), window.hi);
  return {static_cast<std::size_t>(mid - lo), static_cast<std::size_t>(hi - mid)};
}

StepSchedule StepSchedule::constant(double step) {
  if (!(step > 0.0)) throw std::invalid_argument("constant step must be positive");
  return StepSchedule(Constant{step});
}

StepSchedule StepSchedule::weighted(double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("weighted step scale must be positive");
  return StepSchedule(Weighted{scale});
}

StepSchedule StepSchedule::coarse_to_fine(std::vector<Stage> stages) {
  if (stages.empty()) throw std::invalid_argument("coarse-to-fine schedule needs a stage");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (!(stages[i].step > 0.0)) throw std::invalid_argument("schedule steps must be positive");
    if (i > 0 && !(stages[i].step < stages[i - 1].step))
      throw std::invalid_argument("coarse-to-fine steps must strictly decrease");
  }
  return StepSchedule(CoarseToFine{std::move(stages)});
}

StepSchedule StepSchedule::coarse_to_fine_default(std::size_t budget) {
  const std::size_t quarter = budget / 4;
  return coarse_to_fine({{8.0, quarter}, {4.0, quarter}, {2.0, quarter},
                         {1.0, budget - 3 * quarter}});
}

double StepSchedule::step(std::size_t update_index, const CycleSplit& split) const {
  struct Visitor {
    std::size_t index;
    const CycleSplit& split;
    double operator()(const Constant& c) const { return c.step; }
    double operator()(const Weighted& w) const {
      const auto diff = split.n_late > split.n_early ? split.n_late - split.n_early
                                                     : split.n_early - split.n_late;
      return w.scale * static_cast<double>(diff);
    }
    double operator()(const CoarseToFine& c) const {
      std::size_t start = 0;
      for (const auto& stage : c.stages) {
        if (index < start + stage.cycles) return stage.step;
        start += stage.cycles;
      }
      return c.stages.back().step;
    }
  };
  return std::visit(Visitor{update_index, split}, schedule_);
}

BinnerState::BinnerState(double cv, Window window, StepSchedule schedule,
                         QuantileWeights weights)
    : cv_(cv), window_(window), schedule_(std::move(schedule)), weights_(weights) {
  if (!(window.lo <= window.hi)) throw std::invalid_argument("binner window is inverted");
  if (!(cv >= window.lo && cv <= window.hi))
    throw std::invalid_argument("control value outside its window");
  if (weights.inc == 0 || weights.dec == 0)
    throw std::invalid_argument("quantile weights must be positive");
}

void BinnerState::set_cv(double cv) noexcept { cv_ = std::clamp(cv, window_.lo, window_.hi); }

void BinnerState::update(const CycleSplit& split) {
  if (frozen_) throw std::logic_error("update on a frozen binner");
  const double step = schedule_.step(cycle_index_, split);
  if (split.n_early > split.n_late)
    cv_ -= step * weights_.dec;
  else if (split.n_late > split.n_early)
    cv_ += step * weights_.inc;
  cv_ = std::clamp(cv_, window_.lo, window_.hi);
  ++cycle_index_;
}

BinnerState update(BinnerState state, const CycleSplit& split) {
  state.update(split);
  return state;
}

std::vector<double> run(BinnerState& binner, const TransientDistribution& transient,
                        std::size_t cycles, Rng& rng, RunOptions options) {
  if (options.batch == 0) throw std::invalid_argument("batch size must be >= 1");
  const CycleSampler sampler(transient);
  std::vector<double> trajectory;
  trajectory.reserve(cycles);
  PhotonCycle cycle;
  CycleSplit pooled;
  for (std::size_t c = 0; c < cycles; ++c) {
    sampler.sample_into(rng, cycle);
    pooled += binner.split(cycle.delays);
    // A trailing partial batch is applied rather than dropped.
    if ((c + 1) % options.batch == 0 || c + 1 == cycles) {
      binner.update(pooled);
      pooled = {};
    }
    trajectory.push_back(binner.cv());
  }
  return trajectory;
}

}  // namespace countfree
