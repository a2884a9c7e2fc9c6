// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "vmsched/error.hpp"
#include "vmsched/heuristics.hpp"

namespace vmsched {
namespace {

struct Fixture {
  ClusterSpec cluster = ClusterSpec::homogeneous(3, {10, 10});
  RequestSequence seq;
  Fixture() {
    SequenceBuilder b(2);
    b.add_create("a", {6, 6}, 0);
    b.add_create("b", {3, 3}, 1);
    b.add_create("c", {3, 3}, 2);
    seq = std::move(b).finish();
  }
};

TEST(Heuristics, FirstFitTakesLowestIndex) {
  Fixture f;
  Environment env(f.cluster, f.seq, 0);
  EXPECT_EQ(first_fit(env), Action::place(0));
  env.step(Action::place(1));
  EXPECT_EQ(first_fit(env), Action::place(0));
}

TEST(Heuristics, BestFitMinimisesNormalisedLeftover) {
  Fixture f;
  Environment env(f.cluster, f.seq, 0);
  env.step(Action::place(1));
  EXPECT_EQ(best_fit(env), Action::place(1));
  env.step(Action::place(1));
  EXPECT_EQ(best_fit(env), Action::place(0));  // PM 1 is full, ties go low
}

TEST(Heuristics, RejectWhenNothingFits) {
  const auto cluster = ClusterSpec::homogeneous(1, {4, 4});
  SequenceBuilder b(2);
  b.add_create("a", {5, 1}, 0);
  const auto seq = std::move(b).finish();
  Environment env(cluster, seq, 0);
  EXPECT_EQ(first_fit(env), Action::reject());
  EXPECT_EQ(best_fit(env), Action::reject());
}

TEST(Heuristics, ScoredPolicySkipsRefusals) {
  Fixture f;
  Environment env(f.cluster, f.seq, 0);
  const PriorityFn only_last = [n = 0](std::span<const std::int64_t>, std::span<const std::int64_t>) mutable {
    return ++n == 3 ? 1.0 : -std::numeric_limits<double>::infinity();
  };
  EXPECT_EQ(argmax_placement(only_last, env), Action::place(2));
}

TEST(Heuristics, PlacementNeedsCreate) {
  const auto cluster = ClusterSpec::homogeneous(1, {4, 4});
  SequenceBuilder b(2);
  b.add_create("a", {1, 1}, 0);
  b.add_delete("a", 1);
  const auto seq = std::move(b).finish();
  Environment env(cluster, seq, 0);
  env.step(Action::place(0));
  EXPECT_THROW(first_fit(env), Error);
}

TEST(Heuristics, HindsightMatchesDepartures) {
  const auto cluster = ClusterSpec::homogeneous(3, {10, 10});
  SequenceBuilder b(2);
  b.add_create("long", {2, 2}, 0);
  b.add_create("short", {2, 2}, 1);
  b.add_create("x", {2, 2}, 2);
  b.add_delete("short", 5);
  b.add_delete("x", 6);
  b.add_delete("long", 50);
  const auto seq = std::move(b).finish();
  const auto table = std::make_shared<HindsightTable>(HindsightTable::from_sequence(seq));
  EXPECT_EQ(table->lifetime(VmId{0}), 50);
  EXPECT_EQ(table->departure(VmId{2}), 6);

  Environment env(cluster, seq, 0);
  EXPECT_EQ(hindsight(env, *table), Action::place(0));  // empty cluster: first empty PM
  env.step(Action::place(0));
  env.step(Action::place(1));
  // x (lifetime 4) pairs with short (4 remaining) rather than long (49).
  EXPECT_EQ(hindsight(env, *table), Action::place(1));
}

TEST(Heuristics, HindsightNeedsDurations) {
  const auto cluster = ClusterSpec::homogeneous(1, {10, 10});
  SequenceBuilder b(2);
  b.add_create("a", {1, 1}, 0);
  const auto seq = std::move(b).finish();
  HindsightTable empty;
  Environment env(cluster, seq, 0);
  try {
    hindsight(env, empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingDuration);
  }
}

}  // namespace
}  // namespace vmsched
