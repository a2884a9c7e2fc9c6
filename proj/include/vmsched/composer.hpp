// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "vmsched/exec.hpp"
#include "vmsched/gateway.hpp"
#include "vmsched/miner.hpp"

namespace vmsched {

/// entries[k][j] is the J of option k's policy on scenario j.
struct ScoreMatrix {
  std::vector<std::vector<double>> entries;

  std::size_t size() const { return entries.size(); }
  /// Column max J*(S_j).
  double best(std::size_t j) const;
  /// Column mean over all K rows.
  double mean(std::size_t j) const;
  /// Throws InvalidConfig unless square and non-empty.
  void validate() const;
};

ScoreMatrix build_score_matrix(const OptionLibrary& library, const std::vector<Scenario>& scenarios,
                               const ClusterSpec& cluster, const RequestSequence& seq,
                               const MinerConfig& cfg);

struct PruneConfig {
  double q1 = 0.95;
  double q2 = 0.95;
  double q3 = 0.5;
  void validate() const;
};

/// Own-scenario excellence and cross-scenario robustness for row k.
bool retains(const ScoreMatrix& matrix, std::size_t k, const PruneConfig& cfg);

/// Retained rows (0-based, ascending). Throws EmptyRetention.
std::vector<std::size_t> prune(const ScoreMatrix& matrix, const PruneConfig& cfg = {});

struct ComposerConfig {
  std::size_t iterations = 300;
  std::size_t top_m = 2;
  std::size_t n_s = 30;
  std::size_t candidates_per_iteration = 1;
  SamplerConfig sampler;
  std::uint64_t seed = 0;
  SplitSpec split;
  script::Limits limits;
  ExecConfig exec;
  /// Empty: the selector seed rendered for the retained option count.
  std::string seed_source;

  void validate() const;
};

/// `n_s` absolute starts drawn with replacement from the union of all
/// scenarios' training starts.
std::vector<std::size_t> composer_starts(const std::vector<Scenario>& scenarios, std::size_t n_s,
                                         std::uint64_t seed, const SplitSpec& split = {});

/// Mean hierarchical scheduled length over `starts`, episodes running to the
/// end of the sequence.
double evaluate_master(const HierarchicalAgent& agent, const ClusterSpec& cluster,
                       const RequestSequence& seq, const std::vector<std::size_t>& starts,
                       const ExecConfig& cfg);

struct CompositionResult {
  MasterPolicy master;
  EvolutionResult evolution;
};

/// Evolves a selector over library options `retained` (0-based library
/// indices; selector index i picks retained[i-1]).
CompositionResult learn_master(const OptionLibrary& library, const std::vector<std::size_t>& retained,
                               const std::vector<Scenario>& scenarios, const ClusterSpec& cluster,
                               const RequestSequence& seq, Backend& backend, const ComposerConfig& cfg);

}  // namespace vmsched
