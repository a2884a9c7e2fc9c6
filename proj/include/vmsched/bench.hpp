// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "vmsched/composer.hpp"
#include "vmsched/exec.hpp"
#include "vmsched/miner.hpp"
#include "vmsched/oracle.hpp"

namespace vmsched {

/// Every pipeline parameter. Defaults reproduce the reference settings
/// (50 PMs, temperature 0.8, top-2, tau_max 50, 6 scenarios, 30 samples,
/// 300 + 300 iterations, 200-request context, 1000 tokens).
struct RunConfig {
  std::size_t n_pms = 50;
  Resources pm_capacity = {64, 256};
  double temperature = 0.8;
  std::size_t top_m = 2;
  std::size_t tau_max = 50;
  std::string term_mode = "fixed";
  double geometric_p = 0.1;
  std::size_t k = 6;
  std::size_t n_s = 30;
  std::size_t n_starts = 6;
  std::size_t miner_iterations = 300;
  std::size_t composer_iterations = 300;
  std::size_t candidates_per_iteration = 1;
  std::size_t history = 200;
  std::size_t group_size = 50;
  std::size_t miner_tokens = 1000;
  std::size_t composer_tokens = 1000;
  double q1 = 0.95;
  double q2 = 0.95;
  double q3 = 0.5;
  std::uint64_t seed = 0;
  std::string backend = "mock";
  std::string model;
  std::size_t retries = 3;
  std::size_t workers = 1;
  std::uint64_t oracle_nodes = 2'000'000;
  std::uint64_t oracle_ms = 30'000;

  void validate() const;
  ClusterSpec cluster() const;
  MinerConfig miner() const;
  ComposerConfig composer() const;
  ExecConfig exec() const;
  PruneConfig pruning() const;
  OracleLimits oracle() const;

  nlohmann::ordered_json to_json() const;
  /// Unknown keys raise InvalidConfig; missing keys keep their defaults.
  static RunConfig from_json(const nlohmann::json& j);
};

/// 100 * valid / total. Throws EmptyLedger.
double code_valid_ratio(const std::vector<ValidationRecord>& ledger);

/// Per-scenario scheduled lengths of one algorithm.
struct AlgorithmRow {
  std::string name;
  std::vector<double> online;
};

struct PerformanceTable {
  std::vector<std::string> scenarios;  // column labels, e.g. S1..S6
  std::vector<double> offline;
  std::vector<bool> offline_proven;
  std::vector<AlgorithmRow> rows;

  double ratio(std::size_t row, std::size_t col) const;
  /// Sum of online lengths over sum of offline lengths, in percent.
  double mean(std::size_t row) const;
};

/// Algorithm x scenario grid of performance ratios plus the Mean column.
std::string format_table(const PerformanceTable& table);

struct BoxStats {
  double min = 0, q1 = 0, median = 0, q3 = 0, max = 0;
};

/// Linear-interpolated quartiles; throws InvalidConfig on empty input.
BoxStats box_stats(std::vector<double> values);

struct HierSummary {
  std::string scenario;
  std::size_t segments = 0;
  std::size_t distinct_options = 0;
  std::size_t max_duration = 0;
};

struct ReportBundle {
  PerformanceTable table;
  std::optional<double> code_valid_ratio;
  /// Scheduled lengths on the test starts, per algorithm.
  std::vector<std::pair<std::string, std::vector<double>>> box_data;
  std::vector<HierSummary> hier;

  nlohmann::ordered_json to_json() const;
  static ReportBundle from_json(const nlohmann::json& j);
};

// ---------------------------------------------------------------------------
// Artifact serialization

nlohmann::ordered_json to_json(const ScoreMatrix& m);
ScoreMatrix score_matrix_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const std::vector<Scenario>& scenarios);
std::vector<Scenario> scenarios_from_json(const nlohmann::json& j);
nlohmann::ordered_json to_json(const ValidationRecord& r);
ValidationRecord validation_record_from_json(const nlohmann::json& j);
/// Library references policies by artifact id; sources live in a store.
nlohmann::ordered_json to_json(const OptionLibrary& lib);
OptionLibrary library_from_json(const nlohmann::json& j, const ArtifactStore& store);
nlohmann::ordered_json to_json(const MasterPolicy& m);
MasterPolicy master_from_json(const nlohmann::json& j, const ArtifactStore& store);
nlohmann::ordered_json to_json(const EvolutionResult& e);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace vmsched
