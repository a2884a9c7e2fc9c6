// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include "vmsched/exec.hpp"

#include <algorithm>
#include <optional>
#include <set>
#include <sstream>

#include "vmsched/error.hpp"

namespace vmsched {

void ExecConfig::validate() const {
  if (tau_max == 0) throw Error(ErrorCode::InvalidConfig, "tau_max must be at least 1");
  if (term_mode == TermMode::Geometric && !(geometric_p > 0.0 && geometric_p <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "geometric p must lie in (0, 1]");
  }
  if (group_size == 0 || history == 0 || history % group_size != 0) {
    throw Error(ErrorCode::InvalidConfig, "history must be a positive multiple of the group size");
  }
  thresholds.validate();
}

SelectorContext context_features(const RequestSequence& seq, std::size_t cursor, std::size_t history,
                                 std::size_t group_size, const ThresholdTable& thresholds) {
  if (group_size == 0 || history == 0 || history % group_size != 0) {
    throw Error(ErrorCode::InvalidConfig, "history must be a positive multiple of the group size");
  }
  const std::size_t n_groups = history / group_size;
  std::vector<VmType> recent;  // newest first
  recent.reserve(history);
  for (std::size_t i = std::min(cursor, seq.requests.size()); i > 0 && recent.size() < history; --i) {
    const auto& r = seq.requests[i - 1];
    if (r.op == Op::Create) recent.push_back(classify_vm(r.demand, thresholds));
  }
  if (recent.empty()) return SelectorContext::uniform(n_groups);

  using Mix = std::array<double, kAllVmTypes.size()>;
  std::vector<Mix> newest_first;
  for (std::size_t b = 0; b < recent.size(); b += group_size) {
    const std::size_t e = std::min(b + group_size, recent.size());
    Mix mix{};
    for (std::size_t i = b; i < e; ++i) mix[static_cast<std::size_t>(recent[i])] += 1.0;
    for (auto& x : mix) x /= static_cast<double>(e - b);
    newest_first.push_back(mix);
  }
  while (newest_first.size() < n_groups) newest_first.push_back(newest_first.back());
  SelectorContext ctx;
  ctx.groups.assign(newest_first.rbegin(), newest_first.rend());
  return ctx;
}

bool option_terminated(std::size_t steps_in_option, const Environment& env, const ExecConfig& cfg,
                       Rng& rng) {
  if (env.pending() && env.pending()->op == Op::Create && env.feasible().empty()) return true;
  if (steps_in_option >= cfg.tau_max) return true;
  if (cfg.term_mode == TermMode::Geometric && steps_in_option > 0) return rng.bernoulli(cfg.geometric_p);
  return false;
}

std::size_t HierTrace::distinct_options() const {
  std::set<std::size_t> ids;
  for (const auto& s : segments) ids.insert(s.option);
  return ids.size();
}

namespace {

HierTrace run_impl(const SelectorFn& selector, const std::vector<PlacementPolicy>& options,
                   const std::vector<std::size_t>& ids, const ClusterSpec& cluster,
                   const RequestSequence& seq, std::size_t start, const ExecConfig& cfg,
                   const EpisodeOptions& episode) {
  if (options.empty()) throw Error(ErrorCode::InvalidConfig, "hierarchical run needs at least one option");
  cfg.validate();

  HierTrace trace;
  Rng rng(Rng::mix(cfg.seed, start));
  std::optional<std::size_t> active;  // index into options
  std::size_t steps_in_option = 0;
  std::size_t decisions = 0;
  std::size_t placed_at_open = 0;
  std::optional<Error> selector_fault;

  auto close = [&](std::size_t placed_now) {
    if (!active) return;
    auto& seg = trace.segments.back();
    seg.reward = placed_now - placed_at_open;
  };

  const PlacementPolicy policy = [&](const Environment& env) -> Action {
    if (!active || (steps_in_option >= 1 && option_terminated(steps_in_option, env, cfg, rng))) {
      close(env.state().placed);
      const auto ctx = context_features(env.sequence(), env.state().cursor, cfg.history, cfg.group_size,
                                        cfg.thresholds);
      std::size_t pick = 0;
      try {
        pick = selector(ctx);
      } catch (const Error& e) {
        selector_fault.emplace(ErrorCode::SelectorFault, e.what());
        throw *selector_fault;
      } catch (const std::exception& e) {
        selector_fault.emplace(ErrorCode::SelectorFault, e.what());
        throw *selector_fault;
      }
      if (pick < 1 || pick > options.size()) {
        selector_fault.emplace(ErrorCode::SelectorFault,
                               "selector returned " + std::to_string(pick) + " outside 1.." +
                                   std::to_string(options.size()));
        throw *selector_fault;
      }
      active = pick - 1;
      steps_in_option = 0;
      placed_at_open = env.state().placed;
      trace.segments.push_back({ids[*active], decisions, 0, 0});
    }
    ++steps_in_option;
    ++decisions;
    ++trace.segments.back().duration;
    return options[*active](env);
  };

  try {
    trace.result = run_episode(policy, cluster, seq, start, episode);
  } catch (const Error&) {
    if (selector_fault) throw *selector_fault;
    throw;
  }
  close(trace.result.scheduled_length);
  return trace;
}

}  // namespace

HierTrace run_hierarchical(const SelectorFn& selector, const std::vector<PlacementPolicy>& options,
                           const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start,
                           const ExecConfig& cfg, const EpisodeOptions& episode) {
  std::vector<std::size_t> ids(options.size());
  for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
  return run_impl(selector, options, ids, cluster, seq, start, cfg, episode);
}

HierarchicalAgent::HierarchicalAgent(const MasterPolicy& master, const OptionLibrary& library,
                                     const script::Limits& limits) {
  if (library.options.empty()) throw Error(ErrorCode::InvalidConfig, "empty option library");
  order_ = master.option_order;
  history_ = master.history;
  group_size_ = master.group_size;
  if (order_.empty()) {
    for (std::size_t i = 0; i < library.size(); ++i) order_.push_back(i);
  }
  for (auto idx : order_) {
    if (idx >= library.size()) throw Error(ErrorCode::OutOfRange, "option order names missing option");
    options_.push_back(priority_policy(compile(library.options[idx].policy, limits)));
  }
  selector_ = compile(master.selector, limits);
}

HierarchicalAgent HierarchicalAgent::with_selector(std::shared_ptr<const CompiledPolicy> selector) const {
  HierarchicalAgent copy;
  copy.selector_ = std::move(selector);
  copy.order_ = order_;
  copy.options_ = options_;
  copy.history_ = history_;
  copy.group_size_ = group_size_;
  return copy;
}

HierTrace HierarchicalAgent::run(const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start,
                                 const ExecConfig& cfg, const EpisodeOptions& episode) const {
  const auto handle = selector_;
  const std::size_t n = options_.size();
  const SelectorFn fn = [handle, n](const SelectorContext& ctx) { return eval_selector(*handle, ctx, n); };
  ExecConfig c = cfg;
  c.history = history_;
  c.group_size = group_size_;
  return run_impl(fn, options_, order_, cluster, seq, start, c, episode);
}

HierTrace run_hierarchical(const MasterPolicy& master, const OptionLibrary& library,
                           const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start,
                           const ExecConfig& cfg, const EpisodeOptions& episode) {
  return HierarchicalAgent(master, library).run(cluster, seq, start, cfg, episode);
}

std::string format_hier_trace(const HierTrace& trace) {
  std::ostringstream out;
  for (const auto& s : trace.segments) {
    out << s.option << '\t' << s.start_step << '\t' << s.duration << '\t' << s.reward << '\n';
  }
  return out.str();
}

}  // namespace vmsched
