// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "vmsched/miner.hpp"
#include "vmsched/policy.hpp"
#include "vmsched/rng.hpp"
#include "vmsched/sim.hpp"
#include "vmsched/trace.hpp"

namespace vmsched {

struct ExecConfig {
  std::size_t tau_max = 50;
  TermMode term_mode = TermMode::FixedLength;
  double geometric_p = 0.1;
  std::size_t history = 200;  // L
  std::size_t group_size = 50;
  ThresholdTable thresholds;
  std::uint64_t seed = 0;

  std::size_t groups() const { return group_size ? history / group_size : 0; }
  void validate() const;
};

/// Type mix of the last `history` Create events before `cursor`, split into
/// groups of `group_size`, oldest group first. A short history fills the
/// newest groups first (the oldest present group may be partial) and
/// repeats the oldest available distribution for missing groups; no history
/// at all gives uniform groups.
SelectorContext context_features(const RequestSequence& seq, std::size_t cursor, std::size_t history,
                                 std::size_t group_size, const ThresholdTable& thresholds);

/// Termination test for the running option, applied before each Create
/// decision once the option has made at least one decision.
bool option_terminated(std::size_t steps_in_option, const Environment& env, const ExecConfig& cfg,
                       Rng& rng);

struct MasterPolicy {
  PolicyArtifact selector;
  /// Selector index i (1-based) activates library option option_order[i-1].
  std::vector<std::size_t> option_order;
  std::size_t history = 200;
  std::size_t group_size = 50;
};

struct Segment {
  std::size_t option = 0;  // library index
  std::size_t start_step = 0;  // Create decisions made before the segment
  std::size_t duration = 0;  // Create decisions inside the segment
  std::size_t reward = 0;
};

struct HierTrace {
  std::vector<Segment> segments;
  EpisodeResult result;

  std::size_t distinct_options() const;
};

/// Returns an index in 1..n_options.
using SelectorFn = std::function<std::size_t(const SelectorContext&)>;

/// Call-and-return execution over plain placement policies. Selector
/// failures raise SelectorFault; policy failures raise EpisodeAborted.
HierTrace run_hierarchical(const SelectorFn& selector, const std::vector<PlacementPolicy>& options,
                           const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start,
                           const ExecConfig& cfg, const EpisodeOptions& episode = {});

/// Compiled master plus option library, reusable across episodes.
class HierarchicalAgent {
 public:
  HierarchicalAgent(const MasterPolicy& master, const OptionLibrary& library,
                    const script::Limits& limits = {});
  /// Same options, different selector.
  HierarchicalAgent with_selector(std::shared_ptr<const CompiledPolicy> selector) const;

  /// The master's context layout overrides the one in `cfg`.
  HierTrace run(const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start,
                const ExecConfig& cfg, const EpisodeOptions& episode = {}) const;
  std::size_t n_options() const { return options_.size(); }

 private:
  HierarchicalAgent() = default;

  std::shared_ptr<const CompiledPolicy> selector_;
  std::vector<std::size_t> order_;
  std::vector<PlacementPolicy> options_;
  std::size_t history_ = 200;
  std::size_t group_size_ = 50;
};

HierTrace run_hierarchical(const MasterPolicy& master, const OptionLibrary& library,
                           const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start,
                           const ExecConfig& cfg, const EpisodeOptions& episode = {});

/// `option<TAB>start_step<TAB>duration<TAB>reward` per segment.
std::string format_hier_trace(const HierTrace& trace);

}  // namespace vmsched
