// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include "vmsched/composer.hpp"

#include <map>

#include "vmsched/error.hpp"
#include "vmsched/rng.hpp"

namespace vmsched {

double ScoreMatrix::best(std::size_t j) const {
  double m = entries.at(0).at(j);
  for (const auto& row : entries) m = std::max(m, row.at(j));
  return m;
}

double ScoreMatrix::mean(std::size_t j) const {
  double s = 0.0;
  for (const auto& row : entries) s += row.at(j);
  return s / static_cast<double>(entries.size());
}

void ScoreMatrix::validate() const {
  if (entries.empty()) throw Error(ErrorCode::InvalidConfig, "empty score matrix");
  for (const auto& row : entries) {
    if (row.size() != entries.size()) throw Error(ErrorCode::InvalidConfig, "score matrix is not square");
  }
}

ScoreMatrix build_score_matrix(const OptionLibrary& library, const std::vector<Scenario>& scenarios,
                               const ClusterSpec& cluster, const RequestSequence& seq,
                               const MinerConfig& cfg) {
  if (library.size() != scenarios.size()) {
    throw Error(ErrorCode::InvalidConfig, "library has " + std::to_string(library.size()) + " options for " +
                                              std::to_string(scenarios.size()) + " scenarios");
  }
  ScoreMatrix m;
  m.entries.assign(library.size(), std::vector<double>(scenarios.size(), 0.0));
  for (std::size_t k = 0; k < library.size(); ++k) {
    for (std::size_t j = 0; j < scenarios.size(); ++j) {
      try {
        m.entries[k][j] = evaluate_policy(library.options[k].policy, scenarios[j], cluster, seq, cfg);
      } catch (const Error& e) {
        throw Error(e.code(), "option " + std::to_string(k + 1) + " on scenario " + std::to_string(j + 1) +
                                  ": " + e.what());
      }
    }
  }
  return m;
}

void PruneConfig::validate() const {
  for (double q : {q1, q2, q3}) {
    if (!(q >= 0.0)) throw Error(ErrorCode::InvalidConfig, "pruning thresholds must be non-negative");
  }
}

bool retains(const ScoreMatrix& matrix, std::size_t k, const PruneConfig& cfg) {
  const std::size_t K = matrix.size();
  if (matrix.entries[k][k] < cfg.q1 * matrix.best(k)) return false;
  std::size_t robust = 0;
  for (std::size_t j = 0; j < K; ++j) {
    if (matrix.entries[k][j] >= cfg.q2 * matrix.mean(j)) ++robust;
  }
  return static_cast<double>(robust) / static_cast<double>(K) >= cfg.q3;
}

std::vector<std::size_t> prune(const ScoreMatrix& matrix, const PruneConfig& cfg) {
  matrix.validate();
  cfg.validate();
  std::vector<std::size_t> kept;
  for (std::size_t k = 0; k < matrix.size(); ++k) {
    if (retains(matrix, k, cfg)) kept.push_back(k);
  }
  if (kept.empty()) throw Error(ErrorCode::EmptyRetention, "no option passes the pruning thresholds");
  return kept;
}

void ComposerConfig::validate() const {
  if (top_m == 0 || n_s == 0 || candidates_per_iteration == 0) {
    throw Error(ErrorCode::InvalidConfig, "top_m, n_s and candidates must be positive");
  }
  sampler.validate();
  exec.validate();
}

std::vector<std::size_t> composer_starts(const std::vector<Scenario>& scenarios, std::size_t n_s,
                                         std::uint64_t seed, const SplitSpec& split) {
  std::vector<std::size_t> pool;
  for (const auto& s : scenarios) {
    for (auto off : split_train_test(s, split).train) pool.push_back(s.begin + off);
  }
  if (pool.empty()) throw Error(ErrorCode::ScenarioTooShort, "no training starts");
  Rng rng(Rng::mix(seed, 0xc0));
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_s; ++i) out.push_back(pool[rng.index(pool.size())]);
  return out;
}

double evaluate_master(const HierarchicalAgent& agent, const ClusterSpec& cluster,
                       const RequestSequence& seq, const std::vector<std::size_t>& starts,
                       const ExecConfig& cfg) {
  if (starts.empty()) return 0.0;
  std::map<std::size_t, std::size_t> multiplicity;
  for (auto s : starts) ++multiplicity[s];
  double total = 0.0;
  for (const auto& [start, count] : multiplicity) {
    total += static_cast<double>(agent.run(cluster, seq, start, cfg).result.scheduled_length) *
             static_cast<double>(count);
  }
  return total / static_cast<double>(starts.size());
}

CompositionResult learn_master(const OptionLibrary& library, const std::vector<std::size_t>& retained,
                               const std::vector<Scenario>& scenarios, const ClusterSpec& cluster,
                               const RequestSequence& seq, Backend& backend, const ComposerConfig& cfg) {
  if (retained.empty()) throw Error(ErrorCode::EmptyRetention, "no retained options to compose");
  cfg.validate();
  const std::size_t n = retained.size();
  const ContextLayout layout{cfg.exec.history, cfg.exec.group_size};

  MasterPolicy master;
  master.option_order = retained;
  master.history = cfg.exec.history;
  master.group_size = cfg.exec.group_size;
  master.selector = PolicyArtifact::make(
      PolicyKind::Selector, cfg.seed_source.empty() ? seed_selector_source(n, layout) : cfg.seed_source);
  validate(master.selector, default_probes(cluster.capacities.front(), n, cfg.exec.groups(), cfg.seed),
           cfg.limits);
  if (master.selector.status != PolicyStatus::Valid) {
    throw Error(ErrorCode::InvalidConfig, "seed selector is invalid: " + master.selector.reason);
  }
  const HierarchicalAgent base(master, library, cfg.limits);
  const auto starts = composer_starts(scenarios, cfg.n_s, cfg.seed, cfg.split);

  EvolutionConfig ec;
  ec.iterations = cfg.iterations;
  ec.top_m = cfg.top_m;
  ec.candidates_per_iteration = cfg.candidates_per_iteration;
  ec.sampler = cfg.sampler;
  ec.limits = cfg.limits;
  ec.probes = default_probes(cluster.capacities.front(), n, cfg.exec.groups(), cfg.seed);

  const EvaluateFn evaluate = [&](const std::shared_ptr<const CompiledPolicy>& h) {
    return evaluate_master(base.with_selector(h), cluster, seq, starts, cfg.exec);
  };
  const RenderFn render = [&](const std::vector<PolicyArtifact>& top) {
    return render_composer_prompt(top, n, layout);
  };

  CompositionResult out;
  out.evolution = evolve(master.selector, backend, render, evaluate, ec);
  for (auto* list : {&out.evolution.evaluated, &out.evolution.retained}) {
    for (auto& s : *list) s.artifact.scores = {{"master", s.j}};
  }
  master.selector = out.evolution.best().artifact;
  out.master = std::move(master);
  return out;
}

}  // namespace vmsched
