// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include <gtest/gtest.h>

#include <set>

#include "vmsched/composer.hpp"
#include "vmsched/error.hpp"
#include "workloads.hpp"

namespace vmsched {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::EmptyLedger;
}

TEST(Pruning, ColumnStatistics) {
  ScoreMatrix m{{{1, 4}, {3, 2}}};
  EXPECT_DOUBLE_EQ(m.best(0), 3);
  EXPECT_DOUBLE_EQ(m.best(1), 4);
  EXPECT_DOUBLE_EQ(m.mean(0), 2);
  EXPECT_DOUBLE_EQ(m.mean(1), 3);
}

TEST(Pruning, HandComputedRetention) {
  // Row 0 is best on its own scenario and above 0.95 of every column mean.
  // Row 1 is far below the best on its own scenario.
  // Row 2 is best on its own scenario but robust on only 1 of 3 columns.
  ScoreMatrix m{{{10, 10, 10}, {9, 5, 9}, {1, 1, 12}}};
  EXPECT_TRUE(retains(m, 0, {}));
  EXPECT_FALSE(retains(m, 1, {}));
  EXPECT_FALSE(retains(m, 2, {}));
  EXPECT_EQ(prune(m), (std::vector<std::size_t>{0}));
  PruneConfig loose;
  loose.q3 = 0.3;
  EXPECT_EQ(prune(m, loose), (std::vector<std::size_t>{0, 2}));
}

TEST(Pruning, EmptyRetentionRaises) {
  ScoreMatrix m{{{1, 10}, {10, 1}}};
  PruneConfig strict;
  strict.q3 = 1.0;
  strict.q2 = 1.5;
  EXPECT_EQ(code_of([&] { prune(m, strict); }), ErrorCode::EmptyRetention);
}

TEST(Pruning, RejectsBadShapes) {
  EXPECT_THROW(ScoreMatrix{}.validate(), Error);
  EXPECT_THROW((ScoreMatrix{{{1, 2}}}.validate()), Error);
  PruneConfig c;
  c.q1 = -0.1;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Pruning, PublishedRowsRetainPolicyFour) {
  // Literal application to the published per-scenario rows keeps row 4:
  // its S4 entry is the column best and 3 of 6 entries clear 0.95 x mean.
  const auto m = ScoreMatrix{{{100.0, 99.3, 87.4, 93.3, 69.7, 80.5},
                              {99.9, 99.5, 89.3, 92.0, 70.4, 82.6},
                              {91.3, 97.7, 95.5, 93.6, 74.5, 87.1},
                              {85.6, 87.0, 84.1, 100.0, 69.7, 87.0},
                              {90.8, 95.4, 86.1, 91.6, 89.4, 87.0},
                              {84.8, 86.8, 81.7, 93.7, 79.7, 99.8}}};
  EXPECT_TRUE(retains(m, 3, {}));
}

struct Workload {
  RequestSequence seq;
  std::vector<Scenario> scenarios;
  ClusterSpec cluster = ClusterSpec::homogeneous(4, {64, 256});
  OptionLibrary library;

  Workload() {
    MixtureSchedule spec;
    spec.segments.push_back({{{VmType::Small, 0.8}, {VmType::Large, 0.2}}, 120, {LifetimeDist::Kind::Exponential, 25, 0}});
    spec.segments.push_back({{{VmType::Large, 0.8}, {VmType::Small, 0.2}}, 120, {LifetimeDist::Kind::Exponential, 25, 0}});
    seq = synth_workload(spec, 2);
    scenarios = equal_scenarios(seq, 2);
    for (std::size_t k = 1; k <= 2; ++k) {
      auto a = PolicyArtifact::make(PolicyKind::Priority, k == 1 ? "def priority(bin, item):\n    return -bin[0]\n"
                                                                 : "def priority(bin, item):\n    return bin[0]\n");
      a.status = PolicyStatus::Valid;
      library.options.push_back({k, a});
    }
  }
};

TEST(Composer, ScoreMatrixMatchesEvaluatePolicy) {
  Workload w;
  MinerConfig cfg;
  cfg.n_s = 4;
  const auto m = build_score_matrix(w.library, w.scenarios, w.cluster, w.seq, cfg);
  ASSERT_EQ(m.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    for (std::size_t j = 0; j < 2; ++j) {
      EXPECT_DOUBLE_EQ(m.entries[k][j], evaluate_policy(w.library.options[k].policy, w.scenarios[j], w.cluster, w.seq, cfg));
    }
  }
}

TEST(Composer, StartsComeFromTrainingUnion) {
  Workload w;
  const auto starts = composer_starts(w.scenarios, 40, 1);
  EXPECT_EQ(starts, composer_starts(w.scenarios, 40, 1));
  std::set<std::size_t> allowed;
  for (const auto& s : w.scenarios) {
    for (auto off : split_train_test(s).train) allowed.insert(s.begin + off);
  }
  for (auto st : starts) EXPECT_TRUE(allowed.count(st));
}

TEST(Composer, LearnMasterImprovesOnSeed) {
  Workload w;
  MockBackend backend(4);
  ComposerConfig cfg;
  cfg.iterations = 5;
  cfg.n_s = 4;
  const auto res = learn_master(w.library, {0, 1}, w.scenarios, w.cluster, w.seq, backend, cfg);
  EXPECT_EQ(res.master.option_order, (std::vector<std::size_t>{0, 1}));
  ASSERT_EQ(res.evolution.best_j.size(), 6u);
  for (std::size_t i = 1; i < res.evolution.best_j.size(); ++i) {
    EXPECT_GE(res.evolution.best_j[i], res.evolution.best_j[i - 1]);
  }
  ASSERT_FALSE(res.master.selector.scores.empty());
  EXPECT_EQ(res.master.selector.scores[0].context, "master");
  HierarchicalAgent agent(res.master, w.library);
  const auto starts = composer_starts(w.scenarios, cfg.n_s, cfg.seed, cfg.split);
  EXPECT_DOUBLE_EQ(evaluate_master(agent, w.cluster, w.seq, starts, cfg.exec), res.evolution.best().j);
}

TEST(Composer, ConfigValidation) {
  ComposerConfig cfg;
  cfg.top_m = 0;
  EXPECT_THROW(cfg.validate(), Error);
}

}  // namespace
}  // namespace vmsched
