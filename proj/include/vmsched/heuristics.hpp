// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "vmsched/sim.hpp"

namespace vmsched {

/// Score for placing `item` into a bin with residual `bin`; higher is better
/// and -infinity refuses the bin.
using PriorityFn =
    std::function<double(std::span<const std::int64_t> bin, std::span<const std::int64_t> item)>;

/// Place on the feasible PM with the highest score (lowest index on ties).
/// Rejects when no feasible PM accepts the item.
Action argmax_placement(const PriorityFn& f, const Environment& env);

/// Maximizes post-placement mean normalized utilization.
Action best_fit(const Environment& env);

/// Lowest-index feasible PM.
Action first_fit(const Environment& env);

/// Known lifetimes, indexed by VmId. VMs without a Delete live until one
/// time unit past the last event of the sequence.
class HindsightTable {
 public:
  static HindsightTable from_sequence(const RequestSequence& seq);

  void set(VmId vm, std::int64_t arrival, std::int64_t lifetime);
  std::optional<std::int64_t> lifetime(VmId vm) const;
  std::optional<std::int64_t> departure(VmId vm) const;

 private:
  struct Entry {
    std::int64_t arrival = 0;
    std::int64_t lifetime = 0;
  };
  std::vector<std::optional<Entry>> entries_;
};

/// Lifetime matching: prefer the non-empty feasible PM whose longest
/// remaining hosted lifetime is closest to the pending VM's lifetime; fall
/// back to the lowest-index empty feasible PM.
Action hindsight(const Environment& env, const HindsightTable& table);

PlacementPolicy best_fit_policy();
PlacementPolicy first_fit_policy();
PlacementPolicy hindsight_policy(std::shared_ptr<const HindsightTable> table);
PlacementPolicy scored_policy(PriorityFn f);

}  // namespace vmsched
