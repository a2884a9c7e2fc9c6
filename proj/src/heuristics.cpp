// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include "vmsched/heuristics.hpp"

#include <cmath>
#include <limits>

#include "vmsched/error.hpp"

namespace vmsched {

namespace {

void require_create(const Environment& env) {
  const Request* req = env.pending();
  if (req == nullptr || req->op != Op::Create) {
    throw Error(ErrorCode::NotACreateEvent, "placement needs a pending Create");
  }
}

template <typename ScoreOf>
Action argmax_feasible(const Environment& env, ScoreOf&& score_of) {
  require_create(env);
  constexpr double kRefuse = -std::numeric_limits<double>::infinity();
  std::optional<std::size_t> best;
  double best_score = kRefuse;
  for (std::size_t i = 0; i < env.n_pms(); ++i) {
    if (!env.fits(i)) continue;
    const double s = score_of(i);
    if (s == kRefuse || std::isnan(s)) continue;
    if (!best || s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return best ? Action::place(*best) : Action::reject();
}

}  // namespace

Action argmax_placement(const PriorityFn& f, const Environment& env) {
  const Request& req = *env.pending();
  Resources bin(env.dims());
  return argmax_feasible(env, [&](std::size_t pm) {
    for (std::size_t j = 0; j < bin.size(); ++j) bin[j] = env.effective_residual(pm, j);
    try {
      return f(bin, req.demand);
    } catch (const Error& e) {
      throw Error(ErrorCode::PolicyEvalFailed, "pm " + std::to_string(pm) + ": " + e.what());
    }
  });
}

Action best_fit(const Environment& env) {
  const Request& req = *env.pending();
  return argmax_feasible(env, [&](std::size_t pm) {
    const auto& cap = env.capacity(pm);
    double s = 0;
    for (std::size_t j = 0; j < env.dims(); ++j) {
      s -= static_cast<double>(env.effective_residual(pm, j) - req.demand[j]) /
           static_cast<double>(cap[j]);
    }
    return s;
  });
}

Action first_fit(const Environment& env) {
  require_create(env);
  for (std::size_t i = 0; i < env.n_pms(); ++i) {
    if (env.fits(i)) return Action::place(i);
  }
  return Action::reject();
}

HindsightTable HindsightTable::from_sequence(const RequestSequence& seq) {
  HindsightTable table;
  table.entries_.resize(seq.vm_count());
  if (seq.empty()) return table;
  const std::int64_t horizon_end = seq.requests.back().time + 1;
  std::vector<std::int64_t> arrival(seq.vm_count(), -1);
  for (const auto& r : seq.requests) {
    if (r.op == Op::Create) {
      arrival[r.vm.value] = r.time;
      table.entries_[r.vm.value] = Entry{r.time, horizon_end - r.time};
    } else {
      table.entries_[r.vm.value] = Entry{arrival[r.vm.value], r.time - arrival[r.vm.value]};
    }
  }
  return table;
}

void HindsightTable::set(VmId vm, std::int64_t arrival, std::int64_t lifetime) {
  if (entries_.size() <= vm.value) entries_.resize(vm.value + 1);
  entries_[vm.value] = Entry{arrival, lifetime};
}

std::optional<std::int64_t> HindsightTable::lifetime(VmId vm) const {
  if (vm.value >= entries_.size() || !entries_[vm.value]) return std::nullopt;
  return entries_[vm.value]->lifetime;
}

std::optional<std::int64_t> HindsightTable::departure(VmId vm) const {
  if (vm.value >= entries_.size() || !entries_[vm.value]) return std::nullopt;
  return entries_[vm.value]->arrival + entries_[vm.value]->lifetime;
}

Action hindsight(const Environment& env, const HindsightTable& table) {
  require_create(env);
  const Request& req = *env.pending();
  const auto own = table.lifetime(req.vm);
  if (!own) throw Error(ErrorCode::MissingDuration, env.sequence().name(req.vm));
  const std::int64_t now = req.time;

  std::optional<std::size_t> best_busy, first_empty;
  std::int64_t best_gap = 0;
  for (std::size_t i = 0; i < env.n_pms(); ++i) {
    if (!env.fits(i)) continue;
    std::optional<std::int64_t> longest;
    for (const VmId vm : env.hosted(i)) {
      const auto dep = table.departure(vm);
      if (!dep) throw Error(ErrorCode::MissingDuration, env.sequence().name(vm));
      const std::int64_t remaining = *dep - now;
      if (remaining <= 0) continue;  // already departed, awaiting release
      longest = longest ? std::max(*longest, remaining) : remaining;
    }
    if (!longest) {
      if (!first_empty) first_empty = i;
      continue;
    }
    const std::int64_t gap = std::abs(*own - *longest);
    if (!best_busy || gap < best_gap) {
      best_busy = i;
      best_gap = gap;
    }
  }
  if (best_busy) return Action::place(*best_busy);
  if (first_empty) return Action::place(*first_empty);
  return Action::reject();
}

PlacementPolicy best_fit_policy() { return [](const Environment& env) { return best_fit(env); }; }

PlacementPolicy first_fit_policy() { return [](const Environment& env) { return first_fit(env); }; }

PlacementPolicy hindsight_policy(std::shared_ptr<const HindsightTable> table) {
  return [table = std::move(table)](const Environment& env) { return hindsight(env, *table); };
}

PlacementPolicy scored_policy(PriorityFn f) {
  return [f = std::move(f)](const Environment& env) { return argmax_placement(f, env); };
}

}  // namespace vmsched
