// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "vmsched/error.hpp"
#include "vmsched/miner.hpp"

namespace vmsched {
namespace {

struct TwoScenarios {
  RequestSequence seq;
  std::vector<Scenario> scenarios;
  ClusterSpec cluster = ClusterSpec::homogeneous(4, {64, 256});

  TwoScenarios() {
    MixtureSchedule spec;
    spec.segments.push_back({{{VmType::Small, 0.5}, {VmType::Large, 0.5}}, 150, {LifetimeDist::Kind::Exponential, 30, 0}});
    spec.segments.push_back({{{VmType::MediumLarge, 0.7}, {VmType::Small, 0.3}}, 150, {LifetimeDist::Kind::Exponential, 30, 0}});
    seq = synth_workload(spec, 11);
    scenarios = equal_scenarios(seq, 2);
  }
};

MinerConfig small_config(std::uint64_t seed = 0) {
  MinerConfig cfg;
  cfg.iterations = 6;
  cfg.n_s = 5;
  cfg.seed = seed;
  return cfg;
}

TEST(Miner, StartsAreSeededAndInsideTraining) {
  const Scenario s{2, 100, 200};
  const auto a = evaluation_starts(s, 30, 4);
  EXPECT_EQ(a, evaluation_starts(s, 30, 4));
  EXPECT_EQ(a.size(), 30u);
  const auto split = split_train_test(s);
  std::set<std::size_t> allowed;
  for (auto off : split.train) allowed.insert(s.begin + off);
  for (auto st : a) EXPECT_TRUE(allowed.count(st)) << st;
}

TEST(Miner, MeanLengthMatchesDirectRuns) {
  TwoScenarios su;
  const auto starts = evaluation_starts(su.scenarios[0], 8, 1);
  const auto pol = best_fit_policy();
  double sum = 0;
  for (auto st : starts) {
    EpisodeOptions o;
    o.end = su.scenarios[0].end;
    sum += static_cast<double>(run_episode(pol, su.cluster, su.seq, st, o).scheduled_length);
  }
  EXPECT_DOUBLE_EQ(mean_scheduled_length(pol, su.cluster, su.seq, starts, su.scenarios[0].end),
                   sum / static_cast<double>(starts.size()));
}

TEST(Miner, SelectTopOrdersByScoreThenAge) {
  std::vector<ScoredPolicy> pool(4);
  pool[0].j = 3; pool[0].seen = 0;
  pool[1].j = 5; pool[1].seen = 1;
  pool[2].j = 5; pool[2].seen = 2;
  pool[3].j = 1; pool[3].seen = 3;
  const auto top = select_top(pool, 2);
  ASSERT_EQ(top.size(), 2u);
  EXPECT_EQ(top[0].seen, 1u);
  EXPECT_EQ(top[1].seen, 2u);
}

TEST(Miner, EvolveKeepsBestMonotone) {
  TwoScenarios su;
  MockBackend backend(3);
  const auto res = mine_scenario(su.scenarios[0], su.cluster, su.seq, backend, small_config());
  ASSERT_TRUE(res.option.has_value());
  ASSERT_EQ(res.evolution.best_j.size(), 7u);
  for (std::size_t i = 1; i < res.evolution.best_j.size(); ++i) {
    EXPECT_GE(res.evolution.best_j[i], res.evolution.best_j[i - 1]);
  }
  EXPECT_EQ(res.evolution.ledger.size(), 6u);
  EXPECT_EQ(res.option->scenario, 1u);
  ASSERT_FALSE(res.option->policy.scores.empty());
  EXPECT_EQ(res.option->policy.scores[0].context, "S1");
  EXPECT_DOUBLE_EQ(res.option->policy.scores[0].j, res.evolution.best().j);
}

TEST(Miner, SameSeedSameResult) {
  TwoScenarios su;
  MockBackend a(5), b(5);
  const auto ra = mine_scenario(su.scenarios[1], su.cluster, su.seq, a, small_config(2));
  const auto rb = mine_scenario(su.scenarios[1], su.cluster, su.seq, b, small_config(2));
  EXPECT_EQ(ra.option->policy.id, rb.option->policy.id);
  EXPECT_EQ(ra.evolution.best_j, rb.evolution.best_j);
}

class BrokenBackend : public Backend {
 public:
  std::string complete(const PromptBundle&, const SamplerConfig&) override {
    throw Error(ErrorCode::BackendUnavailable, "offline");
  }
};

class GarbageBackend : public Backend {
 public:
  std::string complete(const PromptBundle&, const SamplerConfig&) override { return "no code here"; }
};

TEST(Miner, BackendFailureHaltsButKeepsSeed) {
  TwoScenarios su;
  BrokenBackend backend;
  const auto res = mine_scenario(su.scenarios[0], su.cluster, su.seq, backend, small_config());
  EXPECT_TRUE(res.evolution.halted.has_value());
  ASSERT_TRUE(res.option.has_value());
  EXPECT_EQ(res.evolution.best_j.size(), 1u);
}

TEST(Miner, UnparseableRepliesAreLedgered) {
  TwoScenarios su;
  GarbageBackend backend;
  const auto res = mine_scenario(su.scenarios[0], su.cluster, su.seq, backend, small_config());
  EXPECT_EQ(res.evolution.ledger.size(), 6u);
  for (const auto& r : res.evolution.ledger) EXPECT_FALSE(r.valid);
}

TEST(Miner, InvalidSeedIsPartialLibrary) {
  TwoScenarios su;
  MockBackend backend(1);
  auto cfg = small_config();
  cfg.seed_source = "def priority(bin, item):\n    return bin[9]\n";
  try {
    mine_scenario(su.scenarios[0], su.cluster, su.seq, backend, cfg);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PartialLibrary);
  }
}

TEST(Miner, MineOptionsParallelMatchesSerial) {
  TwoScenarios su;
  auto factory = [](std::size_t k) { return std::make_unique<MockBackend>(100 + k); };
  auto cfg = small_config(9);
  std::vector<std::size_t> order;
  const auto serial = mine_options(su.scenarios, su.cluster, su.seq, factory, cfg,
                                   [&](const ScenarioMining& m) { order.push_back(m.scenario.index); });
  cfg.workers = 2;
  const auto parallel = mine_options(su.scenarios, su.cluster, su.seq, factory, cfg);
  ASSERT_EQ(serial.library.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(serial.library.options[i].policy.id, parallel.library.options[i].policy.id);
  }
  EXPECT_EQ(order, (std::vector<std::size_t>{1, 2}));
  EXPECT_EQ(serial.ledger().size(), 12u);
}

TEST(Miner, LibrarySubsetKeepsOrder) {
  OptionLibrary lib;
  for (std::size_t k = 1; k <= 4; ++k) lib.options.push_back({k, {}, 50, TermMode::FixedLength, 0.1});
  const auto sub = lib.subset({3, 0});
  ASSERT_EQ(sub.size(), 2u);
  EXPECT_EQ(sub.options[0].scenario, 4u);
  EXPECT_EQ(sub.options[1].scenario, 1u);
}

TEST(Miner, ConfigValidation) {
  MinerConfig cfg;
  cfg.top_m = 0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.n_s = 0;
  EXPECT_THROW(cfg.validate(), Error);
  EXPECT_EQ(term_mode_from_string("geometric"), TermMode::Geometric);
  EXPECT_EQ(to_string(TermMode::FixedLength), "fixed");
}

}  // namespace
}  // namespace vmsched
