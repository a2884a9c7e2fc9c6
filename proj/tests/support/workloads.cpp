// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include "workloads.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

#ifndef VMSCHED_SOURCE_DIR
#error "VMSCHED_SOURCE_DIR must point at the repository root"
#endif

namespace vmsched::testing {

Instance random_instance(Rng& rng, std::size_t max_creates, std::size_t max_pms, std::int64_t cap,
                         double delete_rate) {
  const std::size_t n_pms = 1 + rng.index(max_pms);
  const std::size_t creates = 1 + rng.index(max_creates);
  SequenceBuilder b(2);
  std::vector<std::string> live;
  std::int64_t t = 0;
  std::size_t made = 0;
  while (made < creates) {
    if (!live.empty() && rng.bernoulli(delete_rate)) {
      const std::size_t k = rng.index(live.size());
      b.add_delete(live[k], t++);
      live.erase(live.begin() + static_cast<std::ptrdiff_t>(k));
      continue;
    }
    const std::string vm = "v" + std::to_string(made++);
    const auto c = 1 + static_cast<std::int64_t>(rng.index(static_cast<std::size_t>(cap)));
    const auto m = 1 + static_cast<std::int64_t>(rng.index(static_cast<std::size_t>(cap)));
    b.add_create(vm, {c, m}, t++);
    live.push_back(vm);
  }
  return {ClusterSpec::homogeneous(n_pms, {cap, cap}), std::move(b).finish()};
}

namespace {

std::size_t explore(Environment env) {
  while (!env.done() && env.pending()->op == Op::Delete) env.step(Action::noop());
  if (env.done()) return env.state().placed;
  const auto options = env.feasible();
  if (options.empty()) return env.state().placed;
  std::size_t best = 0;
  for (const std::size_t pm : options) {
    Environment next = env;
    next.step(Action::place(pm));
    best = std::max(best, explore(std::move(next)));
  }
  return best;
}

}  // namespace

std::size_t brute_force_optimal(const ClusterSpec& cluster, const RequestSequence& seq,
                                std::size_t start) {
  return explore(Environment(cluster, seq, start));
}

TwoRegime two_regime_workload() {
  // One CPU unit is 4 cores; memory is twice the CPU so it never binds on a
  // {40, 80} host and Best-Fit reduces to one dimension.
  SequenceBuilder b(2);
  std::int64_t t = 0;
  std::size_t id = 0;
  auto flash = [&](Resources d) {
    const std::string vm = "f" + std::to_string(id++);
    b.add_create(vm, d, t++);
    b.add_delete(vm, t++);
  };
  auto keep = [&](std::int64_t units) {
    const std::string vm = "k" + std::to_string(id++);
    b.add_create(vm, {4 * units, 8 * units}, t++);
    return vm;
  };

  std::vector<std::string> regime1;
  for (int i = 0; i < 396; ++i) flash({1, 1});
  for (const std::int64_t u : {4, 4, 6, 5}) regime1.push_back(keep(u));
  for (const auto& vm : regime1) b.add_delete(vm, t++);

  TwoRegime out;
  for (int i = 0; i < 100; ++i) flash({12, 24});
  for (const std::int64_t u : {2, 3, 4, 6, 5}) keep(u);

  out.instance = {ClusterSpec::homogeneous(2, {40, 80}), std::move(b).finish()};
  std::size_t creates = 0;
  for (std::size_t i = 0; i < out.instance.seq.requests.size(); ++i) {
    if (out.instance.seq.requests[i].op == Op::Create && creates++ == 400) {
      out.regime2_begin = i;
      break;
    }
  }
  return out;
}

std::filesystem::path fixture_path(const std::string& relative) {
  return std::filesystem::path(VMSCHED_SOURCE_DIR) / "fixtures" / relative;
}

std::string fixture_text(const std::string& relative) {
  std::ifstream in(fixture_path(relative), std::ios::binary);
  if (!in) throw std::runtime_error("missing fixture " + relative);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace vmsched::testing
