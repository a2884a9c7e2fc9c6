// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "vmsched/bench.hpp"
#include "vmsched/error.hpp"

namespace vmsched {
namespace {

TEST(Config, DefaultsMatchGolden) {
  std::ifstream in(std::filesystem::path(VMSCHED_SOURCE_DIR) / "tests" / "golden" / "config_defaults.json");
  const auto golden = nlohmann::json::parse(in);
  EXPECT_EQ(nlohmann::json(RunConfig{}.to_json()), golden);
}

TEST(Config, DefaultsAreTheEnvironmentAndAlgorithmTable) {
  const RunConfig c;
  EXPECT_EQ(c.n_pms, 50u);
  EXPECT_DOUBLE_EQ(c.temperature, 0.8);
  EXPECT_EQ(c.top_m, 2u);
  EXPECT_EQ(c.tau_max, 50u);
  EXPECT_EQ(c.k, 6u);
  EXPECT_EQ(c.n_s, 30u);
  EXPECT_EQ(c.miner_iterations, 300u);
  EXPECT_EQ(c.composer_iterations, 300u);
  EXPECT_EQ(c.history, 200u);
  EXPECT_EQ(c.group_size, 50u);
  EXPECT_EQ(c.miner_tokens, 1000u);
  EXPECT_EQ(c.composer_tokens, 1000u);
  EXPECT_DOUBLE_EQ(c.q1, 0.95);
  EXPECT_DOUBLE_EQ(c.q2, 0.95);
  EXPECT_DOUBLE_EQ(c.q3, 0.5);
  EXPECT_EQ(c.exec().groups(), 4u);
  EXPECT_EQ(c.cluster().n_pms(), 50u);
}

TEST(Config, JsonRoundTripAndUnknownKeys) {
  RunConfig c;
  c.k = 3;
  c.backend = "remote";
  c.model = "gpt";
  const auto again = RunConfig::from_json(c.to_json());
  EXPECT_EQ(again.to_json(), c.to_json());
  nlohmann::json j = c.to_json();
  j["bogus"] = 1;
  EXPECT_THROW(RunConfig::from_json(j), Error);
}

TEST(Config, Validation) {
  RunConfig c;
  c.backend = "carrier-pigeon";
  EXPECT_THROW(c.validate(), Error);
  c = {};
  c.history = 210;
  EXPECT_THROW(c.validate(), Error);
}

TEST(Metrics, CodeValidRatio) {
  std::vector<ValidationRecord> all_valid(2, ValidationRecord{"a", PolicyKind::Priority, true, ""});
  EXPECT_EQ(format_percent(code_valid_ratio(all_valid)), "100.0");
  std::vector<ValidationRecord> mixed;
  for (int i = 0; i < 5; ++i) mixed.push_back({"x", PolicyKind::Priority, i < 3, ""});
  EXPECT_DOUBLE_EQ(code_valid_ratio(mixed), 60.0);
  try {
    code_valid_ratio({});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyLedger);
  }
}

PerformanceTable sample_table() {
  PerformanceTable t;
  t.scenarios = {"S1", "S2"};
  t.offline = {10, 30};
  t.offline_proven = {true, false};
  t.rows = {{"Best-Fit", {10, 21}}, {"MiCo", {9, 30}}};
  return t;
}

TEST(Report, MeanIsRatioOfSums) {
  const auto t = sample_table();
  EXPECT_DOUBLE_EQ(t.ratio(0, 1), 70.0);
  EXPECT_DOUBLE_EQ(t.mean(0), 100.0 * 31.0 / 40.0);  // not the mean of 100 and 70
  EXPECT_DOUBLE_EQ(t.mean(1), 97.5);
}

TEST(Report, TableLayout) {
  const auto text = format_table(sample_table());
  std::istringstream in(text);
  std::string header, rule, bf, mico, note;
  std::getline(in, header);
  std::getline(in, rule);
  std::getline(in, bf);
  std::getline(in, mico);
  std::getline(in, note);
  EXPECT_NE(header.find("Algorithm"), std::string::npos);
  EXPECT_LT(header.find("S1"), header.find("S2"));
  EXPECT_LT(header.find("S2"), header.find("Mean"));
  EXPECT_NE(bf.find("100.0%"), std::string::npos);
  EXPECT_NE(bf.find("77.5%"), std::string::npos);
  EXPECT_NE(mico.find("97.5%"), std::string::npos);
  EXPECT_NE(note.find("S2"), std::string::npos);
}

TEST(Report, BoxStats) {
  const auto b = box_stats({4, 1, 3, 2, 5});
  EXPECT_DOUBLE_EQ(b.min, 1);
  EXPECT_DOUBLE_EQ(b.q1, 2);
  EXPECT_DOUBLE_EQ(b.median, 3);
  EXPECT_DOUBLE_EQ(b.q3, 4);
  EXPECT_DOUBLE_EQ(b.max, 5);
}

TEST(Report, BundleRoundTrip) {
  ReportBundle r;
  r.table = sample_table();
  r.code_valid_ratio = 88.4;
  r.box_data = {{"MiCo", {1, 2, 3}}};
  r.hier = {{"S1", 3, 2, 50}};
  const auto again = ReportBundle::from_json(r.to_json());
  EXPECT_EQ(again.to_json(), r.to_json());
}

TEST(Report, ScoreMatrixJsonAcceptsBareArray) {
  const auto m = score_matrix_from_json(nlohmann::json::parse("[[1, 2], [3, 4]]"));
  EXPECT_EQ(m.entries, (std::vector<std::vector<double>>{{1, 2}, {3, 4}}));
  EXPECT_EQ(score_matrix_from_json(to_json(m)).entries, m.entries);
}

}  // namespace
}  // namespace vmsched
