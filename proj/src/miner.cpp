// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include "vmsched/miner.hpp"

#include <algorithm>
#include <atomic>
#include <map>
#include <set>
#include <thread>

#include "vmsched/error.hpp"
#include "vmsched/rng.hpp"

namespace vmsched {

std::string_view to_string(TermMode mode) {
  return mode == TermMode::FixedLength ? "fixed" : "geometric";
}

TermMode term_mode_from_string(std::string_view text) {
  if (text == "fixed") return TermMode::FixedLength;
  if (text == "geometric") return TermMode::Geometric;
  throw Error(ErrorCode::InvalidConfig, "unknown termination mode: " + std::string(text));
}

OptionLibrary OptionLibrary::subset(const std::vector<std::size_t>& indices) const {
  OptionLibrary out;
  for (auto i : indices) {
    if (i >= options.size()) throw Error(ErrorCode::OutOfRange, "option index " + std::to_string(i));
    out.options.push_back(options[i]);
  }
  return out;
}

void MinerConfig::validate() const {
  if (top_m == 0 || n_s == 0 || candidates_per_iteration == 0 || tau_max == 0) {
    throw Error(ErrorCode::InvalidConfig, "top_m, n_s, candidates and tau_max must be positive");
  }
  if (term_mode == TermMode::Geometric && !(geometric_p > 0.0 && geometric_p <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "geometric p must lie in (0, 1]");
  }
  sampler.validate();
}

std::vector<std::size_t> evaluation_starts(const Scenario& scenario, std::size_t n_s,
                                           std::uint64_t seed, const SplitSpec& split) {
  const auto starts = split_train_test(scenario, split);
  if (starts.train.empty()) throw Error(ErrorCode::ScenarioTooShort, "scenario has no training starts");
  Rng rng(Rng::mix(seed, scenario.index));
  std::vector<std::size_t> out;
  out.reserve(n_s);
  for (std::size_t i = 0; i < n_s; ++i) out.push_back(scenario.begin + starts.train[rng.index(starts.train.size())]);
  return out;
}

double mean_scheduled_length(const PlacementPolicy& policy, const ClusterSpec& cluster,
                             const RequestSequence& seq, const std::vector<std::size_t>& starts,
                             std::size_t end) {
  if (starts.empty()) return 0.0;
  std::map<std::size_t, std::size_t> multiplicity;
  for (auto s : starts) ++multiplicity[s];
  double total = 0.0;
  EpisodeOptions opts;
  opts.end = end;
  for (const auto& [start, count] : multiplicity) {
    try {
      total += static_cast<double>(run_episode(policy, cluster, seq, start, opts).scheduled_length) *
               static_cast<double>(count);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EpisodeAborted) throw;
      throw Error(ErrorCode::EpisodeAborted, "start " + std::to_string(start) + ": " + e.what());
    }
  }
  return total / static_cast<double>(starts.size());
}

double evaluate_policy(const PolicyArtifact& policy, const Scenario& scenario,
                       const ClusterSpec& cluster, const RequestSequence& seq,
                       const MinerConfig& cfg) {
  if (policy.status != PolicyStatus::Valid) {
    throw Error(ErrorCode::InvalidConfig, "evaluate_policy needs a Valid policy, got " +
                                              std::string(to_string(policy.status)));
  }
  const auto handle = compile(policy, cfg.limits);
  return mean_scheduled_length(priority_policy(handle), cluster, seq,
                               evaluation_starts(scenario, cfg.n_s, cfg.seed, cfg.split), scenario.end);
}

// ---------------------------------------------------------------------------

std::vector<ScoredPolicy> select_top(std::vector<ScoredPolicy> pool, std::size_t m) {
  std::stable_sort(pool.begin(), pool.end(), [](const ScoredPolicy& a, const ScoredPolicy& b) {
    if (a.j != b.j) return a.j > b.j;
    return a.seen < b.seen;
  });
  if (pool.size() > m) pool.resize(m);
  return pool;
}

namespace {

std::vector<PolicyArtifact> artifacts_of(const std::vector<ScoredPolicy>& top) {
  std::vector<PolicyArtifact> out;
  for (const auto& s : top) out.push_back(s.artifact);
  return out;
}

bool is_backend_failure(ErrorCode code) { return code == ErrorCode::BackendUnavailable; }

}  // namespace

std::vector<ScoredPolicy> improve_step(const std::vector<ScoredPolicy>& top, Backend& backend,
                                       const RenderFn& render, const EvaluateFn& evaluate,
                                       const EvolutionConfig& cfg, std::size_t& seen_counter,
                                       std::vector<ValidationRecord>& ledger) {
  if (top.empty()) throw Error(ErrorCode::EmptyExemplars, "improve_step needs a non-empty population");
  const PromptBundle prompt = render(artifacts_of(top));
  std::vector<ScoredPolicy> fresh;
  for (std::size_t c = 0; c < cfg.candidates_per_iteration; ++c) {
    std::string source;
    try {
      source = sample(backend, prompt, cfg.sampler);
    } catch (const Error& e) {
      if (is_backend_failure(e.code())) throw;
      ledger.push_back({"", prompt.kind, false, e.what()});
      continue;
    }
    PolicyArtifact artifact = PolicyArtifact::make(prompt.kind, std::move(source));
    const auto report = validate(artifact, cfg.probes, cfg.limits);
    if (!report.valid) {
      ledger.push_back({artifact.id, artifact.kind, false, report.reason});
      continue;
    }
    double j = 0.0;
    try {
      j = evaluate(compile(artifact, cfg.limits));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EpisodeAborted && e.code() != ErrorCode::SelectorFault) throw;
      artifact.status = PolicyStatus::Invalid;
      artifact.reason = e.what();
      ledger.push_back({artifact.id, artifact.kind, false, artifact.reason});
      continue;
    }
    ledger.push_back({artifact.id, artifact.kind, true, ""});
    fresh.push_back({std::move(artifact), j, seen_counter++});
  }
  return fresh;
}

EvolutionResult evolve(PolicyArtifact seed, Backend& backend, const RenderFn& render,
                       const EvaluateFn& evaluate, const EvolutionConfig& cfg) {
  if (cfg.top_m == 0) throw Error(ErrorCode::InvalidConfig, "top_m must be positive");
  const auto report = validate(seed, cfg.probes, cfg.limits);
  if (!report.valid) throw Error(ErrorCode::PartialLibrary, "seed policy is invalid: " + report.reason);

  EvolutionResult out;
  std::size_t seen = 0;
  const double seed_j = evaluate(compile(seed, cfg.limits));
  out.evaluated.push_back({std::move(seed), seed_j, seen++});
  out.retained = select_top(out.evaluated, cfg.top_m);
  out.best_j.push_back(out.best().j);

  std::set<std::string> known{out.evaluated.front().artifact.id};
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    std::vector<ScoredPolicy> fresh;
    try {
      fresh = improve_step(out.retained, backend, render, evaluate, cfg, seen, out.ledger);
    } catch (const Error& e) {
      if (!is_backend_failure(e.code())) throw;
      out.halted = e.what();
      break;
    }
    auto pool = out.retained;
    for (auto& f : fresh) {
      if (!known.insert(f.artifact.id).second) continue;  // duplicate source
      out.evaluated.push_back(f);
      pool.push_back(std::move(f));
    }
    out.retained = select_top(std::move(pool), cfg.top_m);
    out.best_j.push_back(out.best().j);
  }
  return out;
}

// ---------------------------------------------------------------------------

ScenarioMining mine_scenario(const Scenario& scenario, const ClusterSpec& cluster,
                             const RequestSequence& seq, Backend& backend, const MinerConfig& cfg) {
  cfg.validate();
  ScenarioMining out;
  out.scenario = scenario;
  const auto starts = evaluation_starts(scenario, cfg.n_s, cfg.seed, cfg.split);

  EvolutionConfig ec;
  ec.iterations = cfg.iterations;
  ec.top_m = cfg.top_m;
  ec.candidates_per_iteration = cfg.candidates_per_iteration;
  ec.sampler = cfg.sampler;
  ec.limits = cfg.limits;
  ec.probes = default_probes(cluster.capacities.front(), 4, 4, cfg.seed);

  const EvaluateFn evaluate = [&](const std::shared_ptr<const CompiledPolicy>& h) {
    return mean_scheduled_length(priority_policy(h), cluster, seq, starts, scenario.end);
  };
  const RenderFn render = [](const std::vector<PolicyArtifact>& top) { return render_miner_prompt(top); };

  out.evolution = evolve(PolicyArtifact::make(PolicyKind::Priority, cfg.seed_source), backend, render, evaluate, ec);
  if (out.evolution.halted) out.failure = *out.evolution.halted;

  const std::string context = "S" + std::to_string(scenario.index);
  for (auto* list : {&out.evolution.evaluated, &out.evolution.retained}) {
    for (auto& s : *list) s.artifact.scores = {{context, s.j}};
  }
  OptionDef def;
  def.scenario = scenario.index;
  def.policy = out.evolution.best().artifact;
  def.tau_max = cfg.tau_max;
  def.term_mode = cfg.term_mode;
  def.geometric_p = cfg.geometric_p;
  out.option = std::move(def);
  return out;
}

std::vector<ValidationRecord> MiningResult::ledger() const {
  std::vector<ValidationRecord> out;
  for (const auto& s : scenarios) out.insert(out.end(), s.evolution.ledger.begin(), s.evolution.ledger.end());
  return out;
}

MiningResult mine_options(const std::vector<Scenario>& scenarios, const ClusterSpec& cluster,
                          const RequestSequence& seq, const BackendFactory& backends,
                          const MinerConfig& cfg,
                          const std::function<void(const ScenarioMining&)>& on_scenario) {
  if (scenarios.empty()) throw Error(ErrorCode::InvalidConfig, "no scenarios to mine");
  cfg.validate();
  cluster.validate();

  std::vector<ScenarioMining> results(scenarios.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < scenarios.size(); i = next++) {
      try {
        auto backend = backends(scenarios[i].index);
        results[i] = mine_scenario(scenarios[i], cluster, seq, *backend, cfg);
      } catch (const std::exception& e) {
        results[i] = ScenarioMining{};
        results[i].scenario = scenarios[i];
        results[i].failure = e.what();
      }
    }
  };
  std::size_t workers = cfg.workers ? cfg.workers : std::max(1u, std::thread::hardware_concurrency());
  workers = std::min(workers, scenarios.size());
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  MiningResult out;
  std::string missing;
  for (auto& r : results) {
    if (on_scenario) on_scenario(r);
    if (r.option) {
      out.library.options.push_back(*r.option);
    } else {
      missing += (missing.empty() ? "" : "; ") + std::string("S") + std::to_string(r.scenario.index) + ": " +
                 r.failure.value_or("no valid policy");
    }
  }
  out.scenarios = std::move(results);
  if (!missing.empty()) throw Error(ErrorCode::PartialLibrary, missing);
  return out;
}

}  // namespace vmsched
