// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "vmsched/gateway.hpp"
#include "vmsched/policy.hpp"
#include "vmsched/sim.hpp"
#include "vmsched/trace.hpp"

namespace vmsched {

enum class TermMode { FixedLength, Geometric };

std::string_view to_string(TermMode mode);
TermMode term_mode_from_string(std::string_view text);

/// Option <I, pi, beta>: initiation is universal, pi is a priority policy and
/// beta is resource exhaustion, the step limit, or a truncated geometric coin.
struct OptionDef {
  std::size_t scenario = 1;  // 1-based scenario the option was mined on
  PolicyArtifact policy;
  std::size_t tau_max = 50;
  TermMode term_mode = TermMode::FixedLength;
  double geometric_p = 0.1;
};

/// One option per mined scenario, in scenario order.
struct OptionLibrary {
  std::vector<OptionDef> options;

  std::size_t size() const { return options.size(); }
  /// Library restricted to `indices` (0-based), in the given order.
  OptionLibrary subset(const std::vector<std::size_t>& indices) const;
};

struct MinerConfig {
  std::size_t iterations = 300;
  std::size_t top_m = 2;
  std::size_t n_s = 30;
  std::string seed_source = seed_priority_source();
  std::size_t candidates_per_iteration = 1;
  SamplerConfig sampler;
  std::uint64_t seed = 0;
  SplitSpec split;
  script::Limits limits;
  /// Concurrent scenario loops in mine_options (0 = hardware concurrency).
  std::size_t workers = 1;
  /// Copied into every emitted OptionDef.
  std::size_t tau_max = 50;
  TermMode term_mode = TermMode::FixedLength;
  double geometric_p = 0.1;

  void validate() const;
};

/// Absolute start indices, `n_s` draws with replacement from the scenario's
/// training starting points. Depends only on the seed and the scenario.
std::vector<std::size_t> evaluation_starts(const Scenario& scenario, std::size_t n_s,
                                           std::uint64_t seed, const SplitSpec& split = {});

/// Mean scheduled length over `starts`; every episode ends at `end`.
/// Compiled policies are deterministic, so repeated starts run once.
double mean_scheduled_length(const PlacementPolicy& policy, const ClusterSpec& cluster,
                             const RequestSequence& seq, const std::vector<std::size_t>& starts,
                             std::size_t end);

/// J of a priority policy on a scenario. The artifact must be Valid.
double evaluate_policy(const PolicyArtifact& policy, const Scenario& scenario,
                       const ClusterSpec& cluster, const RequestSequence& seq,
                       const MinerConfig& cfg);

// ---------------------------------------------------------------------------
// Generic evolutionary loop shared by the miner and the composer.

struct ScoredPolicy {
  PolicyArtifact artifact;
  double j = 0.0;
  std::size_t seen = 0;  // order of first evaluation
};

/// Best `m` of `pool` by (J desc, seen asc).
std::vector<ScoredPolicy> select_top(std::vector<ScoredPolicy> pool, std::size_t m);

struct EvolutionConfig {
  std::size_t iterations = 300;
  std::size_t top_m = 2;
  std::size_t candidates_per_iteration = 1;
  SamplerConfig sampler;
  script::Limits limits;
  ProbeSuite probes;
};

struct EvolutionResult {
  /// Every valid, distinct policy in evaluation order (seed first).
  std::vector<ScoredPolicy> evaluated;
  /// Retained population after the last iteration.
  std::vector<ScoredPolicy> retained;
  /// Best retained J after the seed evaluation and after each iteration.
  std::vector<double> best_j;
  /// One record per sampled candidate.
  std::vector<ValidationRecord> ledger;
  /// Set when the backend failed and the loop stopped early.
  std::optional<std::string> halted;

  const ScoredPolicy& best() const { return retained.front(); }
};

using RenderFn = std::function<PromptBundle(const std::vector<PolicyArtifact>& top_best_first)>;
using EvaluateFn = std::function<double(const std::shared_ptr<const CompiledPolicy>&)>;

/// Samples, validates and scores new candidates from the current top-M.
/// Valid new candidates are returned scored; every sample lands in `ledger`.
std::vector<ScoredPolicy> improve_step(const std::vector<ScoredPolicy>& top, Backend& backend,
                                       const RenderFn& render, const EvaluateFn& evaluate,
                                       const EvolutionConfig& cfg, std::size_t& seen_counter,
                                       std::vector<ValidationRecord>& ledger);

/// Seed, then `iterations` rounds of improve_step with top-M retention.
/// The seed must validate; a backend failure halts the loop and keeps the
/// population found so far.
EvolutionResult evolve(PolicyArtifact seed, Backend& backend, const RenderFn& render,
                       const EvaluateFn& evaluate, const EvolutionConfig& cfg);

// ---------------------------------------------------------------------------
// Option mining

struct ScenarioMining {
  Scenario scenario;
  EvolutionResult evolution;
  std::optional<OptionDef> option;
  std::optional<std::string> failure;
};

/// Mines one scenario. Throws PartialLibrary when no valid policy exists.
ScenarioMining mine_scenario(const Scenario& scenario, const ClusterSpec& cluster,
                             const RequestSequence& seq, Backend& backend, const MinerConfig& cfg);

using BackendFactory = std::function<std::unique_ptr<Backend>(std::size_t scenario_index)>;

struct MiningResult {
  OptionLibrary library;
  std::vector<ScenarioMining> scenarios;

  std::vector<ValidationRecord> ledger() const;
};

/// Mines every scenario (concurrently up to cfg.workers); `on_scenario` is
/// called once per finished scenario from the coordinating thread, in
/// scenario order. Throws PartialLibrary after all scenarios ran if any
/// produced no option.
MiningResult mine_options(const std::vector<Scenario>& scenarios, const ClusterSpec& cluster,
                          const RequestSequence& seq, const BackendFactory& backends,
                          const MinerConfig& cfg,
                          const std::function<void(const ScenarioMining&)>& on_scenario = {});

}  // namespace vmsched
