#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "json.hpp"

#include "countfree/binner.hpp"
#include "countfree/random.hpp"
#include "countfree/transient.hpp"

namespace countfree {

struct EdhConfig {
  std::size_t stages = 4;
  std::size_t total_cycles = 5000;
  std::vector<std::size_t> per_stage_cycles{1250, 1250, 1250, 1250};
  /// Applied independently to every binner, indexed by that binner's own
  /// update count (so a coarse-to-fine budget is per stage).
  StepSchedule schedule;
  QuantileWeights weights;
  std::size_t readouts = 1;
  std::size_t readout_spacing = 50;

  /// `total_cycles` split evenly over `stages`, any remainder going to the
  /// final stage.
  static EdhConfig uniform(std::size_t stages, std::size_t total_cycles,
                           StepSchedule schedule = {});

  /// Throws std::invalid_argument if the fields are inconsistent.
  void validate() const;
};

/// Sorted boundaries D[1..2^K-1] over [0, window_bins].
struct EdhReadout {
  std::vector<double> boundaries;
  double window_bins = 0.0;

  /// The 2^K bin widths, using implicit D[0] = 0 and D[2^K] = window_bins.
  [[nodiscard]] std::vector<double> widths() const;
  /// Lower edge of bin i (D[i]) for i in [0, 2^K].
  [[nodiscard]] double edge(std::size_t i) const;
  [[nodiscard]] std::size_t bin_count() const noexcept { return boundaries.size() + 1; }
};

/// Complete binary tree of binners trained one level at a time.
///
/// Nodes are stored in heap order (children of i at 2i+1, 2i+2); level s
/// holds nodes [2^s - 1, 2^(s+1) - 1). Only the current level updates; all
/// shallower levels are frozen. The persistent state is the node registers
/// plus the stage counters; nothing per-bin survives a cycle.
class EdhTree {
 public:
  EdhTree(const EdhConfig& config, double window_bins);

  [[nodiscard]] std::size_t stages() const noexcept { return stages_; }
  [[nodiscard]] std::size_t current_stage() const noexcept { return current_stage_; }
  [[nodiscard]] std::size_t node_count() const noexcept { return nodes_.size(); }
  [[nodiscard]] std::size_t active_count() const noexcept;
  [[nodiscard]] double window_bins() const noexcept { return window_bins_; }
  [[nodiscard]] bool complete() const noexcept { return complete_; }
  /// Cycles observed since the current stage was launched.
  [[nodiscard]] std::size_t cycles_in_stage() const noexcept { return cycles_in_stage_; }

  [[nodiscard]] bool launched(std::size_t node) const { return nodes_.at(node).has_value(); }
  /// Throws std::out_of_range for an unlaunched node.
  [[nodiscard]] const BinnerState& node(std::size_t index) const;
  [[nodiscard]] BinnerState& node(std::size_t index);

  /// Feeds one cycle to every binner of the current stage.
  void observe(std::span<const double> sorted_delays);
  void observe(const PhotonCycle& cycle) { observe(cycle.delays); }

  /// Freezes the current stage and launches the next one, each child
  /// starting at the midpoint of its half of the parent window. On the final
  /// stage this does nothing but set complete(); returns whether a new stage
  /// was launched.
  bool advance_stage();

  /// Inorder traversal of the tree. Nodes that have not been launched yet
  /// report the midpoint of the window they would receive.
  [[nodiscard]] EdhReadout readout() const;

  /// Every control value in heap order, unlaunched nodes as above.
  [[nodiscard]] std::vector<double> registers() const;

 private:
  void launch_children(std::size_t parent);

  std::size_t stages_;
  double window_bins_;
  StepSchedule schedule_;
  QuantileWeights weights_;
  std::vector<std::optional<BinnerState>> nodes_;
  std::size_t current_stage_ = 0;
  std::size_t cycles_in_stage_ = 0;
  bool complete_ = false;
};

EdhTree init_tree(const EdhConfig& config, double window_bins);

/// Writes the next cycle's sorted delays into the buffer.
using CycleSource = std::function<void(PhotonCycle&)>;

/// Trains a tree stage by stage, then keeps updating the final stage to
/// collect `config.readouts` readouts spaced `readout_spacing` cycles apart.
/// The first readout is taken when the last stage's budget runs out.
std::vector<EdhReadout> run_edh_readouts(const EdhConfig& config, double window_bins,
                                         const CycleSource& next_cycle);

/// Single readout after `config.total_cycles` cycles (ignores `readouts`).
EdhReadout run_edh(const TransientDistribution& transient, const EdhConfig& config, Rng& rng);

/// Element-wise median of the readouts (mean of the middle pair for an even
/// count), re-sorted.
EdhReadout median_readout(std::span<const EdhReadout> readouts);

EdhReadout multi_readout(const TransientDistribution& transient, const EdhConfig& config,
                         Rng& rng);

/// In-bin SBR of a stage-`stage` bin of the given width, assuming each bin
/// at that stage holds 1/2^stage of all photons and the background is
/// uniform over the window.
double bin_sbr(double width, double window_bins, double signal, double background,
               unsigned stage);

nlohmann::json to_json(const EdhReadout& readout);
EdhReadout readout_from_json(const nlohmann::json& j);

/// Boundaries as `bits`-bit fixed-point codes of D / window_bins.
std::vector<std::uint32_t> quantize(const EdhReadout& readout, unsigned bits = 10);
EdhReadout dequantize(std::span<const std::uint32_t> codes, double window_bins,
                      unsigned bits = 10);

/// Bits needed to read out a K-stage tree.
constexpr std::size_t edh_readout_bits(std::size_t stages, unsigned bits_per_boundary = 10) {
  return ((std::size_t{1} << stages) - 1) * bits_per_boundary;
}

}  // namespace countfree
