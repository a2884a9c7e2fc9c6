// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include <gtest/gtest.h>

#include "vmsched/error.hpp"
#include "vmsched/trace.hpp"

namespace vmsched {
namespace {

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::EmptyLedger;
}

TEST(Trace, ParsesCanonicalText) {
  const auto report = parse_trace_text(
      "vm_id,cpu,memory,time,type\n"
      "a,2,4,0,1\n"
      "b,8,16,1,1\n"
      "a,2,4,2,0\n",
      ColumnMapping::canonical());
  const auto& seq = report.sequence;
  ASSERT_EQ(seq.horizon(), 3u);
  EXPECT_EQ(seq.create_count(), 2u);
  EXPECT_EQ(seq.requests[2].op, Op::Delete);
  EXPECT_EQ(seq.requests[2].vm, seq.requests[0].vm);
  EXPECT_EQ(seq.name(seq.requests[1].vm), "b");
  EXPECT_EQ(seq.requests[1].demand, (Resources{8, 16}));
}

TEST(Trace, SerializeRoundTrips) {
  const auto seq = parse_trace_text("vm_id,cpu,memory,time,type\nx,1,2,0,1\ny,3,4,0,1\nx,1,2,5,0\n",
                                    ColumnMapping::canonical())
                       .sequence;
  const auto again = parse_trace_text(serialize_trace(seq), ColumnMapping::canonical()).sequence;
  ASSERT_EQ(again.horizon(), seq.horizon());
  for (std::size_t i = 0; i < seq.horizon(); ++i) {
    EXPECT_EQ(again.requests[i].demand, seq.requests[i].demand);
    EXPECT_EQ(again.requests[i].op, seq.requests[i].op);
    EXPECT_EQ(again.requests[i].time, seq.requests[i].time);
  }
}

TEST(Trace, CustomColumnsByIndex) {
  ColumnMapping m;
  m.has_header = false;
  m.delimiter = ';';
  m.vm_id = "1";
  m.demand = {"2", "3"};
  m.time = "0";
  m.op = "4";
  m.create_code = "C";
  m.delete_code = "D";
  const auto seq = parse_trace_text("0;vm1;4;8;C\n3;vm1;4;8;D\n", m).sequence;
  ASSERT_EQ(seq.horizon(), 2u);
  EXPECT_EQ(seq.requests[1].time, 3);
}

TEST(Trace, RejectsBadInput) {
  const auto canon = ColumnMapping::canonical();
  EXPECT_EQ(code_of([&] { parse_trace_text("vm_id,cpu,memory,time,type\na,1,1,0,0\n", canon); }),
            ErrorCode::UnmatchedDelete);
  EXPECT_EQ(code_of([&] { parse_trace_text("vm_id,cpu,memory,time,type\na,-1,1,0,1\n", canon); }),
            ErrorCode::NegativeDemand);
  EXPECT_EQ(code_of([&] { parse_trace_text("vm_id,cpu,memory,time,type\na,1,0,1\n", canon); }),
            ErrorCode::MalformedRow);
}

TEST(Trace, SkipsUnmatchedDeletesWhenAsked) {
  auto m = ColumnMapping::canonical();
  m.skip_unmatched_deletes = true;
  const auto report = parse_trace_text("vm_id,cpu,memory,time,type\nz,1,1,0,0\na,1,1,1,1\n", m);
  EXPECT_EQ(report.unmatched_deletes, 1u);
  EXPECT_EQ(report.sequence.horizon(), 1u);
}

TEST(Trace, ClassifiesByBands) {
  const ThresholdTable t;
  EXPECT_EQ(classify_vm({1, 2}, t), VmType::Small);
  EXPECT_EQ(classify_vm({4, 8}, t), VmType::MediumMedium);
  EXPECT_EQ(classify_vm({16, 64}, t), VmType::Large);
  EXPECT_EQ(classify_vm({2, 8}, t), VmType::MediumSmall);
  EXPECT_EQ(classify_vm({16, 16}, t), VmType::MediumLarge);
  EXPECT_EQ(vm_type_key(VmType::MediumLarge), "medium_large");
  EXPECT_EQ(vm_type_from_key("large"), VmType::Large);
  EXPECT_FALSE(vm_type_from_key("huge").has_value());
}

TEST(Trace, DefaultDemandsMatchTheirType) {
  const ThresholdTable t;
  for (const auto& [type, demands] : MixtureSchedule::default_demands()) {
    for (const auto& d : demands) EXPECT_EQ(classify_vm(d, t), type);
  }
}

TEST(Trace, EqualScenariosCoverTheSequence) {
  MixtureSchedule spec;
  spec.segments.push_back({{{VmType::Small, 1.0}}, 100, {LifetimeDist::Kind::Fixed, 5, 0}});
  const auto seq = synth_workload(spec, 3);
  const auto scenarios = equal_scenarios(seq, 6);
  ASSERT_EQ(scenarios.size(), 6u);
  EXPECT_EQ(scenarios.front().begin, 0u);
  EXPECT_EQ(scenarios.back().end, seq.horizon());
  for (std::size_t i = 1; i < scenarios.size(); ++i) {
    EXPECT_EQ(scenarios[i].begin, scenarios[i - 1].end);
    EXPECT_EQ(scenarios[i].index, i + 1);
  }
}

TEST(Trace, CountWindowsUseCeiling) {
  MixtureSchedule spec;
  spec.segments.push_back({{{VmType::Small, 1.0}}, 10, {LifetimeDist::Kind::Fixed, 100, 0}});
  const auto seq = synth_workload(spec, 1);  // 20 requests
  const auto scenarios = generate_scenarios(seq, {WindowKind::RequestCount, 6});
  ASSERT_EQ(scenarios.size(), 4u);
  EXPECT_EQ(scenarios.back().size(), 2u);
}

TEST(Trace, SplitUsesOnlyScenarioOffsets) {
  const Scenario s{1, 100, 160};
  const auto split = split_train_test(s, {6});
  EXPECT_EQ(split.train.size(), 5u);
  for (const auto off : split.train) EXPECT_LT(off, s.size());
  EXPECT_LT(split.test, s.size());
}

TEST(Trace, SynthIsSeededAndTyped) {
  MixtureSchedule spec;
  spec.segments.push_back({{{VmType::Large, 1.0}}, 50, {LifetimeDist::Kind::Uniform, 5, 20}});
  const auto a = synth_workload(spec, 9);
  const auto b = synth_workload(spec, 9);
  ASSERT_EQ(a.horizon(), b.horizon());
  EXPECT_EQ(a.create_count(), 50u);
  for (std::size_t i = 0; i < a.horizon(); ++i) {
    EXPECT_EQ(a.requests[i].demand, b.requests[i].demand);
    EXPECT_EQ(classify_vm(a.requests[i].demand, {}), VmType::Large);
  }
}

TEST(Trace, RejectsBadMixture) {
  MixtureSchedule spec;
  spec.segments.push_back({{{VmType::Large, -1.0}}, 5, {}});
  EXPECT_EQ(code_of([&] { synth_workload(spec, 0); }), ErrorCode::InvalidMixture);
}

TEST(Trace, ClusteringGroupsSimilarRows) {
  MixtureSchedule spec;
  spec.segments.push_back({{{VmType::Small, 1.0}}, 40, {LifetimeDist::Kind::Fixed, 3, 0}});
  const auto seq = synth_workload(spec, 0);
  const std::vector<std::vector<double>> scores = {
      {10, 10, 1, 1}, {10, 9, 1, 1}, {1, 1, 10, 10}, {1, 1, 9, 10}};
  ClusterOptions opt;
  opt.n_clusters = 2;
  const auto r = cluster_scenarios(seq, scores, opt);
  ASSERT_EQ(r.scenarios.size(), 2u);
  EXPECT_EQ(r.membership, (std::vector<std::size_t>{0, 0, 1, 1}));
}

}  // namespace
}  // namespace vmsched
