// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <string>

#include "vmsched/error.hpp"
#include "vmsched/sim.hpp"

namespace vmsched {

struct OracleLimits {
  std::uint64_t max_nodes = 20'000'000;
  std::chrono::milliseconds max_time{60'000};
  /// Skip the desk-scale guard (creates <= 25 or N <= 4).
  bool allow_large = false;
};

struct OracleResult {
  std::size_t optimal_length = 0;
  std::uint64_t nodes_explored = 0;
  bool proven = false;
};

/// Raised when the search runs out of nodes or time; carries the best
/// schedule length found so far.
class BudgetExhaustedError : public Error {
 public:
  explicit BudgetExhaustedError(OracleResult best)
      : Error(ErrorCode::BudgetExhausted,
              "search budget exhausted; best found " + std::to_string(best.optimal_length)),
        best_(best) {}
  const OracleResult& best() const { return best_; }

 private:
  OracleResult best_;
};

/// Longest all-placed prefix of Creates achievable with full knowledge of
/// the window [start, end). Depth-first search with memoization on a
/// canonical state, symmetry breaking across interchangeable PMs, and an
/// early exit once a branch places every remaining Create.
OracleResult offline_optimal(const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start = 0,
                             std::size_t end = Environment::npos, const OracleLimits& limits = {});

/// Like offline_optimal but returns the best-found result (proven = false)
/// instead of throwing when the budget runs out.
OracleResult offline_bound(const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start = 0,
                           std::size_t end = Environment::npos, const OracleLimits& limits = {});

/// 100 * online / offline. Throws DivisionByZeroOffline when offline < 1.
double performance_ratio(double online_length, double offline_length);

/// Percentage with one decimal, e.g. "96.9".
std::string format_percent(double value);

}  // namespace vmsched
