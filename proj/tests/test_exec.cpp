// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include <gtest/gtest.h>

#include "vmsched/error.hpp"
#include "vmsched/exec.hpp"
#include "workloads.hpp"

namespace vmsched {
namespace {

RequestSequence typed_sequence(const std::vector<Resources>& demands) {
  SequenceBuilder b(2);
  std::int64_t t = 0;
  for (std::size_t i = 0; i < demands.size(); ++i) b.add_create("v" + std::to_string(i), demands[i], t++);
  return std::move(b).finish();
}

TEST(Context, EmptyHistoryIsUniform) {
  const auto seq = typed_sequence({{1, 1}});
  const auto ctx = context_features(seq, 0, 200, 50, {});
  ASSERT_EQ(ctx.groups.size(), 4u);
  for (const auto& g : ctx.groups) {
    for (double v : g) EXPECT_DOUBLE_EQ(v, 0.2);
  }
}

TEST(Context, GroupsOldestFirst) {
  std::vector<Resources> d;
  for (int i = 0; i < 4; ++i) d.push_back({1, 1});      // small
  for (int i = 0; i < 4; ++i) d.push_back({32, 64});    // large
  const auto seq = typed_sequence(d);
  const auto ctx = context_features(seq, 8, 8, 4, {});
  ASSERT_EQ(ctx.groups.size(), 2u);
  EXPECT_DOUBLE_EQ(ctx.groups[0][0], 1.0);
  EXPECT_DOUBLE_EQ(ctx.groups[1][4], 1.0);
}

TEST(Context, ShortHistoryRepeatsOldestGroup) {
  std::vector<Resources> d;
  for (int i = 0; i < 2; ++i) d.push_back({1, 1});
  for (int i = 0; i < 4; ++i) d.push_back({32, 64});
  const auto seq = typed_sequence(d);
  const auto ctx = context_features(seq, 6, 16, 4, {});
  ASSERT_EQ(ctx.groups.size(), 4u);
  EXPECT_DOUBLE_EQ(ctx.groups[3][4], 1.0);
  EXPECT_DOUBLE_EQ(ctx.groups[2][0], 1.0);  // partial oldest present group
  EXPECT_EQ(ctx.groups[0], ctx.groups[2]);
  EXPECT_EQ(ctx.groups[1], ctx.groups[2]);
}

TEST(Context, OnlyCreatesBeforeCursorCount) {
  SequenceBuilder b(2);
  b.add_create("a", {1, 1}, 0);
  b.add_delete("a", 1);
  b.add_create("c", {32, 64}, 2);
  const auto seq = std::move(b).finish();
  const auto ctx = context_features(seq, 2, 4, 4, {});
  ASSERT_EQ(ctx.groups.size(), 1u);
  EXPECT_DOUBLE_EQ(ctx.groups[0][0], 1.0);
}

TEST(Exec, FixedLengthSegments) {
  MixtureSchedule spec;
  spec.segments.push_back({{{VmType::Small, 1.0}}, 120, {LifetimeDist::Kind::Fixed, 3, 0}});
  const auto seq = synth_workload(spec, 0);
  const auto cluster = ClusterSpec::homogeneous(2, {64, 256});
  ExecConfig cfg;
  cfg.tau_max = 50;
  std::size_t calls = 0;
  const auto trace = run_hierarchical([&](const SelectorContext&) { return 1 + (calls++ % 2); },
                                      {first_fit_policy(), best_fit_policy()}, cluster, seq, 0, cfg);
  ASSERT_EQ(trace.segments.size(), 3u);
  EXPECT_EQ(trace.segments[0].duration, 50u);
  EXPECT_EQ(trace.segments[1].start_step, 50u);
  EXPECT_EQ(trace.segments[2].duration, 20u);
  EXPECT_EQ(trace.segments[1].option, 1u);
  EXPECT_EQ(trace.distinct_options(), 2u);
  EXPECT_EQ(trace.result.scheduled_length, 120u);
}

TEST(Exec, SelectorFaultsSurface) {
  MixtureSchedule spec;
  spec.segments.push_back({{{VmType::Small, 1.0}}, 5, {LifetimeDist::Kind::Fixed, 3, 0}});
  const auto seq = synth_workload(spec, 0);
  const auto cluster = ClusterSpec::homogeneous(2, {64, 256});
  try {
    run_hierarchical([](const SelectorContext&) -> std::size_t { return 7; }, {first_fit_policy()}, cluster,
                     seq, 0, {});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SelectorFault);
  }
}

TEST(Exec, GeometricTerminationIsSeeded) {
  MixtureSchedule spec;
  spec.segments.push_back({{{VmType::Small, 1.0}}, 200, {LifetimeDist::Kind::Fixed, 3, 0}});
  const auto seq = synth_workload(spec, 0);
  const auto cluster = ClusterSpec::homogeneous(2, {64, 256});
  ExecConfig cfg;
  cfg.term_mode = TermMode::Geometric;
  cfg.geometric_p = 0.2;
  cfg.seed = 4;
  auto sel = [](const SelectorContext&) -> std::size_t { return 1; };
  const auto a = run_hierarchical(sel, {best_fit_policy()}, cluster, seq, 0, cfg);
  const auto b = run_hierarchical(sel, {best_fit_policy()}, cluster, seq, 0, cfg);
  ASSERT_EQ(a.segments.size(), b.segments.size());
  EXPECT_GT(a.segments.size(), 4u);
  for (const auto& s : a.segments) EXPECT_LE(s.duration, cfg.tau_max);
}

TEST(Exec, FailingCreateOpensNewSegment) {
  // Exhaustion terminates the running option, so the failing decision is
  // made by a freshly selected option in a new segment.
  SequenceBuilder b(2);
  b.add_create("a", {6, 6}, 0);
  b.add_create("b", {6, 6}, 1);
  const auto seq = std::move(b).finish();
  const auto cluster = ClusterSpec::homogeneous(1, {10, 10});
  std::size_t calls = 0;
  const auto trace = run_hierarchical([&](const SelectorContext&) { return ++calls == 1 ? 1u : 2u; },
                                      {first_fit_policy(), best_fit_policy()}, cluster, seq, 0, {});
  EXPECT_EQ(trace.result.scheduled_length, 1u);
  ASSERT_EQ(trace.segments.size(), 2u);
  EXPECT_EQ(trace.segments[1].option, 1u);
  EXPECT_EQ(trace.segments[1].start_step, 1u);
  EXPECT_EQ(trace.segments[1].duration, 1u);
  EXPECT_EQ(trace.segments[1].reward, 0u);
}

TEST(Exec, AgentUsesMasterOrder) {
  OptionLibrary lib;
  lib.options.push_back({1, PolicyArtifact::make(PolicyKind::Priority, "def priority(bin, item):\n    return bin[0]\n")});
  lib.options.push_back({2, PolicyArtifact::make(PolicyKind::Priority, "def priority(bin, item):\n    return -bin[0]\n")});
  MasterPolicy master;
  master.selector = PolicyArtifact::make(PolicyKind::Selector, "def heuristic_selector(condition):\n    return 1\n");
  master.option_order = {1};
  HierarchicalAgent agent(master, lib, {});
  MixtureSchedule spec;
  spec.segments.push_back({{{VmType::Small, 1.0}}, 30, {LifetimeDist::Kind::Fixed, 100, 0}});
  const auto seq = synth_workload(spec, 0);
  const auto cluster = ClusterSpec::homogeneous(3, {64, 256});
  const auto trace = agent.run(cluster, seq, 0, {});
  ASSERT_FALSE(trace.segments.empty());
  EXPECT_EQ(trace.segments[0].option, 1u);
  const auto direct = run_episode(scored_policy([](auto bin, auto) { return -static_cast<double>(bin[0]); }),
                                  cluster, seq, 0);
  EXPECT_EQ(trace.result.scheduled_length, direct.scheduled_length);
  EXPECT_FALSE(format_hier_trace(trace).empty());
}

TEST(Exec, ConfigValidation) {
  ExecConfig cfg;
  cfg.tau_max = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.group_size = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.term_mode = TermMode::Geometric;
  cfg.geometric_p = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
}

}  // namespace
}  // namespace vmsched
