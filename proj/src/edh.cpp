#include "countfree/edh.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace countfree {

EdhConfig EdhConfig::uniform(std::size_t stages, std::size_t total_cycles,
                             StepSchedule schedule) {
  if (stages == 0) throw std::invalid_argument("EDH needs at least one stage");
  EdhConfig c;
  c.stages = stages;
  c.total_cycles = total_cycles;
  c.per_stage_cycles.assign(stages, total_cycles / stages);
  c.per_stage_cycles.back() += total_cycles % stages;
  c.schedule = std::move(schedule);
  return c;
}

void EdhConfig::validate() const {
  if (stages == 0) throw std::invalid_argument("EDH needs at least one stage");
  if (stages > 16) throw std::invalid_argument("EDH depth above 16 stages is not supported");
  if (per_stage_cycles.size() != stages)
    throw std::invalid_argument("per-stage cycle list must have one entry per stage");
  std::size_t sum = 0;
  for (auto c : per_stage_cycles) sum += c;
  if (sum != total_cycles)
    throw std::invalid_argument("per-stage cycles must sum to the total cycle count");
  if (readouts == 0) throw std::invalid_argument("EDH needs at least one readout");
  if (readouts > 1 && readout_spacing == 0)
    throw std::invalid_argument("readout spacing must be positive");
}

std::vector<double> EdhReadout::widths() const {
  std::vector<double> w(bin_count());
  for (std::size_t i = 0; i < w.size(); ++i) w[i] = edge(i + 1) - edge(i);
  return w;
}

double EdhReadout::edge(std::size_t i) const {
  if (i == 0) return 0.0;
  if (i == bin_count()) return window_bins;
  return boundaries.at(i - 1);
}

EdhTree::EdhTree(const EdhConfig& config, double window_bins)
    : stages_(config.stages),
      window_bins_(window_bins),
      schedule_(config.schedule),
      weights_(config.weights) {
  config.validate();
  if (!(window_bins > 0.0)) throw std::invalid_argument("EDH window must be positive");
  nodes_.resize((std::size_t{1} << stages_) - 1);
  nodes_[0].emplace(window_bins / 2.0, Window{0.0, window_bins}, schedule_, weights_);
}

std::size_t EdhTree::active_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(),
                    [](const auto& n) { return n.has_value() && !n->frozen(); }));
}

const BinnerState& EdhTree::node(std::size_t index) const {
  const auto& n = nodes_.at(index);
  if (!n) throw std::out_of_range("EDH node has not been launched");
  return *n;
}

BinnerState& EdhTree::node(std::size_t index) {
  auto& n = nodes_.at(index);
  if (!n) throw std::out_of_range("EDH node has not been launched");
  return *n;
}

void EdhTree::observe(std::span<const double> sorted_delays) {
  const std::size_t first = (std::size_t{1} << current_stage_) - 1;
  const std::size_t last = 2 * first + 1;
  for (std::size_t i = first; i < last; ++i) {
    auto& n = *nodes_[i];
    if (!n.frozen()) n.update(n.split(sorted_delays));
  }
  ++cycles_in_stage_;
}

void EdhTree::launch_children(std::size_t parent) {
  const BinnerState& p = *nodes_[parent];
  const Window left{p.window().lo, p.cv()};
  const Window right{p.cv(), p.window().hi};
  nodes_[2 * parent + 1].emplace(left.midpoint(), left, schedule_, weights_);
  nodes_[2 * parent + 2].emplace(right.midpoint(), right, schedule_, weights_);
}

bool EdhTree::advance_stage() {
  if (current_stage_ + 1 >= stages_) {
    complete_ = true;
    return false;
  }
  const std::size_t first = (std::size_t{1} << current_stage_) - 1;
  const std::size_t last = 2 * first + 1;
  for (std::size_t i = first; i < last; ++i) nodes_[i]->freeze();
  for (std::size_t i = first; i < last; ++i) launch_children(i);
  ++current_stage_;
  cycles_in_stage_ = 0;
  return true;
}

std::vector<double> EdhTree::registers() const {
  std::vector<double> cv(nodes_.size());
  std::vector<Window> win(nodes_.size());
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (i == 0) {
      win[0] = {0.0, window_bins_};
    } else {
      const std::size_t parent = (i - 1) / 2;
      win[i] = (i % 2 == 1) ? Window{win[parent].lo, cv[parent]}
                            : Window{cv[parent], win[parent].hi};
    }
    cv[i] = nodes_[i] ? nodes_[i]->cv() : win[i].midpoint();
  }
  return cv;
}

EdhReadout EdhTree::readout() const {
  const auto cv = registers();
  EdhReadout out;
  out.window_bins = window_bins_;
  out.boundaries.reserve(cv.size());
  // Iterative inorder traversal of the implicit heap.
  std::vector<std::size_t> stack;
  std::size_t i = 0;
  const std::size_t n = cv.size();
  while (i < n || !stack.empty()) {
    while (i < n) {
      stack.push_back(i);
      i = 2 * i + 1;
    }
    i = stack.back();
    stack.pop_back();
    out.boundaries.push_back(cv[i]);
    i = 2 * i + 2;
  }
  return out;
}

EdhTree init_tree(const EdhConfig& config, double window_bins) {
  return EdhTree(config, window_bins);
}

std::vector<EdhReadout> run_edh_readouts(const EdhConfig& config, double window_bins,
                                         const CycleSource& next_cycle) {
  EdhTree tree(config, window_bins);
  PhotonCycle cycle;
  for (std::size_t s = 0; s < config.stages; ++s) {
    for (std::size_t c = 0; c < config.per_stage_cycles[s]; ++c) {
      next_cycle(cycle);
      tree.observe(cycle);
    }
    tree.advance_stage();
  }
  std::vector<EdhReadout> readouts;
  readouts.reserve(config.readouts);
  readouts.push_back(tree.readout());
  for (std::size_t r = 1; r < config.readouts; ++r) {
    for (std::size_t c = 0; c < config.readout_spacing; ++c) {
      next_cycle(cycle);
      tree.observe(cycle);
    }
    readouts.push_back(tree.readout());
  }
  return readouts;
}

namespace {

CycleSource sampler_source(const TransientDistribution& transient, Rng& rng) {
  return [sampler = CycleSampler(transient), &rng](PhotonCycle& out) {
    sampler.sample_into(rng, out);
  };
}

}  // namespace

EdhReadout run_edh(const TransientDistribution& transient, const EdhConfig& config, Rng& rng) {
  EdhConfig single = config;
  single.readouts = 1;
  return run_edh_readouts(single, static_cast<double>(transient.bins()),
                          sampler_source(transient, rng))
      .front();
}

EdhReadout median_readout(std::span<const EdhReadout> readouts) {
  if (readouts.empty()) throw std::invalid_argument("median of zero readouts");
  EdhReadout out;
  out.window_bins = readouts.front().window_bins;
  const std::size_t n = readouts.front().boundaries.size();
  out.boundaries.resize(n);
  std::vector<double> column(readouts.size());
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t r = 0; r < readouts.size(); ++r) {
      if (readouts[r].boundaries.size() != n)
        throw std::invalid_argument("readouts have different boundary counts");
      column[r] = readouts[r].boundaries[i];
    }
    std::sort(column.begin(), column.end());
    const std::size_t m = column.size() / 2;
    out.boundaries[i] = column.size() % 2 ? column[m] : 0.5 * (column[m - 1] + column[m]);
  }
  std::sort(out.boundaries.begin(), out.boundaries.end());
  return out;
}

EdhReadout multi_readout(const TransientDistribution& transient, const EdhConfig& config,
                         Rng& rng) {
  const auto readouts = run_edh_readouts(config, static_cast<double>(transient.bins()),
                                         sampler_source(transient, rng));
  return median_readout(readouts);
}

double bin_sbr(double width, double window_bins, double signal, double background,
               unsigned stage) {
  if (!(width > 0.0) || !(window_bins > 0.0) || !(background > 0.0))
    throw std::invalid_argument("bin_sbr needs positive width, window and background");
  const double in_bin = (signal + background) / std::ldexp(1.0, static_cast<int>(stage));
  const double bkg = background * width / window_bins;
  return (in_bin - bkg) / bkg;
}

nlohmann::json to_json(const EdhReadout& readout) {
  return {{"window_bins", readout.window_bins}, {"boundaries", readout.boundaries}};
}

EdhReadout readout_from_json(const nlohmann::json& j) {
  EdhReadout r;
  r.window_bins = j.at("window_bins").get<double>();
  r.boundaries = j.at("boundaries").get<std::vector<double>>();
  return r;
}

std::vector<std::uint32_t> quantize(const EdhReadout& readout, unsigned bits) {
  if (bits == 0 || bits > 32) throw std::invalid_argument("fixed-point width must be 1..32");
  const double levels = std::ldexp(1.0, static_cast<int>(bits)) - 1.0;
  std::vector<std::uint32_t> codes;
  codes.reserve(readout.boundaries.size());
  for (double d : readout.boundaries) {
    const double x = std::clamp(d / readout.window_bins, 0.0, 1.0);
    codes.push_back(static_cast<std::uint32_t>(std::llround(x * levels)));
  }
  return codes;
}

EdhReadout dequantize(std::span<const std::uint32_t> codes, double window_bins, unsigned bits) {
  if (bits == 0 || bits > 32) throw std::invalid_argument("fixed-point width must be 1..32");
  const double levels = std::ldexp(1.0, static_cast<int>(bits)) - 1.0;
  EdhReadout r;
  r.window_bins = window_bins;
  for (auto c : codes) r.boundaries.push_back(static_cast<double>(c) / levels * window_bins);
  return r;
}

}  // namespace countfree
