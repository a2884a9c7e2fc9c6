// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include <gtest/gtest.h>

#include "vmsched/error.hpp"
#include "vmsched/heuristics.hpp"
#include "vmsched/oracle.hpp"
#include "workloads.hpp"

namespace vmsched {
namespace {

TEST(Oracle, OrderMattersForFirstFailure) {
  // Best-Fit stacks the two 4s, so the second 6 has nowhere to go;
  // splitting them leaves room for a 6 on each host.
  SequenceBuilder b(1);
  b.add_create("a", {4}, 0);
  b.add_create("b", {4}, 1);
  b.add_create("c", {6}, 2);
  b.add_create("d", {6}, 3);
  const auto seq = std::move(b).finish();
  const auto cluster = ClusterSpec::homogeneous(2, {10});
  EXPECT_EQ(offline_optimal(cluster, seq).optimal_length, 4u);
  EXPECT_EQ(run_episode(best_fit_policy(), cluster, seq, 0).scheduled_length, 3u);
}

TEST(Oracle, DeletesFreeCapacity) {
  SequenceBuilder b(2);
  b.add_create("a", {8, 8}, 0);
  b.add_delete("a", 1);
  b.add_create("b", {8, 8}, 2);
  const auto seq = std::move(b).finish();
  const auto r = offline_optimal(ClusterSpec::homogeneous(1, {8, 8}), seq);
  EXPECT_EQ(r.optimal_length, 2u);
  EXPECT_TRUE(r.proven);
}

TEST(Oracle, MatchesBruteForceOnSmallInstances) {
  Rng rng(17);
  for (int i = 0; i < 60; ++i) {
    const auto inst = testing::random_instance(rng, 7, 3);
    EXPECT_EQ(offline_optimal(inst.cluster, inst.seq).optimal_length,
              testing::brute_force_optimal(inst.cluster, inst.seq))
        << "instance " << i;
  }
}

TEST(Oracle, WindowRestrictsSearch) {
  Rng rng(3);
  const auto inst = testing::random_instance(rng, 10, 2);
  const auto full = offline_optimal(inst.cluster, inst.seq).optimal_length;
  const auto half = offline_optimal(inst.cluster, inst.seq, 0, inst.seq.horizon() / 2).optimal_length;
  EXPECT_LE(half, full);
}

TEST(Oracle, BudgetExhaustionCarriesBest) {
  Rng rng(8);
  const auto inst = testing::random_instance(rng, 20, 3, 8, 0.1);
  OracleLimits lim;
  lim.max_nodes = 3;
  try {
    offline_optimal(inst.cluster, inst.seq, 0, Environment::npos, lim);
  } catch (const BudgetExhaustedError& e) {
    EXPECT_FALSE(e.best().proven);
    EXPECT_GE(e.best().optimal_length, run_episode(best_fit_policy(), inst.cluster, inst.seq, 0).scheduled_length);
    const auto bound = offline_bound(inst.cluster, inst.seq, 0, Environment::npos, lim);
    EXPECT_EQ(bound.optimal_length, e.best().optimal_length);
    return;
  }
  SUCCEED() << "instance solved within three nodes";
}

TEST(Oracle, GuardsLargeInstances) {
  MixtureSchedule spec;
  spec.segments.push_back({{{VmType::Small, 1.0}}, 40, {LifetimeDist::Kind::Fixed, 2, 0}});
  const auto seq = synth_workload(spec, 0);
  try {
    offline_optimal(ClusterSpec::homogeneous(8, {64, 256}), seq);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InstanceTooLarge);
  }
  OracleLimits lim;
  lim.allow_large = true;
  EXPECT_EQ(offline_optimal(ClusterSpec::homogeneous(8, {64, 256}), seq, 0, Environment::npos, lim).optimal_length,
            40u);
}

TEST(Metrics, PerformanceRatio) {
  EXPECT_DOUBLE_EQ(performance_ratio(2, 2), 100.0);
  EXPECT_DOUBLE_EQ(performance_ratio(31, 32), 96.875);
  EXPECT_EQ(format_percent(performance_ratio(31, 32)), "96.9");
  EXPECT_EQ(format_percent(performance_ratio(3, 5)), "60.0");
  try {
    performance_ratio(1, 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DivisionByZeroOffline);
  }
}

}  // namespace
}  // namespace vmsched
