#pragma once

#include <cstddef>
#include <span>
#include <variant>
#include <vector>

#include "countfree/random.hpp"
#include "countfree/transient.hpp"

namespace countfree {

/// Half-open sub-range [lo, hi) of the cycle window, in bins.
struct Window {
  double lo = 0.0;
  double hi = 0.0;

  [[nodiscard]] double width() const noexcept { return hi - lo; }
  [[nodiscard]] double midpoint() const noexcept { return 0.5 * (lo + hi); }
  friend bool operator==(const Window&, const Window&) = default;
};

/// Photons on each side of a control value within one window.
struct CycleSplit {
  std::size_t n_early = 0;
  std::size_t n_late = 0;

  CycleSplit& operator+=(const CycleSplit& other) noexcept {
    n_early += other.n_early;
    n_late += other.n_late;
    return *this;
  }
  friend bool operator==(const CycleSplit&, const CycleSplit&) = default;
};

/// Counts photons in [lo, cv) as early and [cv, hi) as late. Photons outside
/// the window are inhibited. `delays` must be sorted.
CycleSplit split_cycle(std::span<const double> delays, double cv, Window window);

/// How far the control value moves per update.
class StepSchedule {
 public:
  struct Constant {
    double step = 1.0;
  };
  /// Step proportional to the early/late count difference.
  struct Weighted {
    double scale = 1.0;
  };
  struct Stage {
    double step;
    std::size_t cycles;
  };
  /// Large steps first, then progressively finer. The final stage's step is
  /// kept once every stage's budget has been used.
  struct CoarseToFine {
    std::vector<Stage> stages;
  };

  StepSchedule() : StepSchedule(constant(1.0)) {}

  static StepSchedule constant(double step);
  static StepSchedule weighted(double scale = 1.0);
  static StepSchedule coarse_to_fine(std::vector<Stage> stages);
  /// 8 -> 4 -> 2 -> 1, each for a quarter of `budget` cycles.
  static StepSchedule coarse_to_fine_default(std::size_t budget);

  /// Magnitude of the move for update number `update_index` given its split,
  /// before quantile weighting.
  [[nodiscard]] double step(std::size_t update_index, const CycleSplit& split) const;

  [[nodiscard]] const auto& variant() const noexcept { return schedule_; }

 private:
  using Variant = std::variant<Constant, Weighted, CoarseToFine>;
  explicit StepSchedule(Variant v) : schedule_(std::move(v)) {}
  Variant schedule_;
};

/// Step multipliers for moving up (late side wins) and down (early side wins).
/// (1, 1) tracks the median.
struct QuantileWeights {
  unsigned inc = 1;
  unsigned dec = 1;
};

/// One count-free binner: a control value inside a window plus its schedule.
///
/// The control value is real-valued so it can rest between bin edges. Each
/// update compares the early and late counts of one cycle (or batch of cycles),
/// moves toward the heavier side and clamps to the window. Equal counts leave
/// it in place.
class BinnerState {
 public:
  BinnerState(double cv, Window window, StepSchedule schedule = {},
              QuantileWeights weights = {});

  [[nodiscard]] double cv() const noexcept { return cv_; }
  [[nodiscard]] const Window& window() const noexcept { return window_; }
  [[nodiscard]] const StepSchedule& schedule() const noexcept { return schedule_; }
  [[nodiscard]] QuantileWeights weights() const noexcept { return weights_; }
  [[nodiscard]] std::size_t cycle_index() const noexcept { return cycle_index_; }
  [[nodiscard]] bool frozen() const noexcept { return frozen_; }

  /// Applies one update. Throws std::logic_error on a frozen binner.
  void update(const CycleSplit& split);
  void freeze() noexcept { frozen_ = true; }
  /// Loads the register directly (clamped to the window).
  void set_cv(double cv) noexcept;

  [[nodiscard]] CycleSplit split(std::span<const double> delays) const {
    return split_cycle(delays, cv_, window_);
  }

 private:
  double cv_;
  Window window_;
  StepSchedule schedule_;
  QuantileWeights weights_;
  std::size_t cycle_index_ = 0;
  bool frozen_ = false;
};

/// Functional form of BinnerState::update.
BinnerState update(BinnerState state, const CycleSplit& split);

struct RunOptions {
  /// Cycles whose counts are pooled into one update. Must be >= 1.
  std::size_t batch = 1;
};

/// Samples `cycles` cycles and updates the binner, returning the control value
/// after every cycle. `binner` holds the final state afterwards.
std::vector<double> run(BinnerState& binner, const TransientDistribution& transient,
                        std::size_t cycles, Rng& rng, RunOptions options = {});

}  // namespace countfree
