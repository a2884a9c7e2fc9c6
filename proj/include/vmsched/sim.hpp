// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "vmsched/trace.hpp"

namespace vmsched {

/// PM capacities; index i is PM i (0-based).
struct ClusterSpec {
  std::vector<Resources> capacities;

  static ClusterSpec homogeneous(std::size_t n_pms, Resources capacity);

  std::size_t n_pms() const { return capacities.size(); }
  std::size_t dims() const { return capacities.empty() ? 0 : capacities.front().size(); }
  void validate() const;
};

struct Action {
  enum class Kind : std::uint8_t { Place, Reject, NoOp };
  Kind kind = Kind::Reject;
  std::size_t pm = 0;

  static Action place(std::size_t pm) { return {Kind::Place, pm}; }
  static Action reject() { return {Kind::Reject, 0}; }
  static Action noop() { return {Kind::NoOp, 0}; }
  friend bool operator==(const Action&, const Action&) = default;
};

/// Optional shaping terms; zero weights reproduce the plain placement count.
struct RewardWeights {
  double util = 0.0;
  double type = 0.0;
};

struct StepOutcome {
  int reward = 0;              // 1 iff a Create was placed
  double shaped_reward = 0.0;  // reward + weighted Util/Type terms
  bool terminal = false;
  std::vector<std::pair<VmId, std::size_t>> released;
};

/// Endogenous state. Residuals are stored before the deletion queue is
/// applied; `pending_release` holds the per-PM amounts the queue will return
/// at the next Create.
struct SimState {
  std::size_t cursor = 0;
  std::size_t end = 0;
  std::size_t dims = 0;
  std::vector<std::int64_t> residual;         // n_pms * dims
  std::vector<std::int64_t> pending_release;  // n_pms * dims
  std::vector<std::int32_t> host;             // per vm index, -1 when not allocated
  std::vector<std::vector<VmId>> hosted;      // per PM, active VMs (queue not applied)
  std::vector<VmId> queue;
  bool terminal = false;
  std::size_t placed = 0;
  std::size_t steps = 0;
};

/// Event-driven environment over a window [start, end) of a sequence. The
/// cluster and sequence must outlive the environment.
class Environment {
 public:
  static constexpr std::size_t npos = std::numeric_limits<std::size_t>::max();

  Environment(const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start,
              std::size_t end = npos, RewardWeights weights = {});

  const ClusterSpec& cluster() const { return *cluster_; }
  const RequestSequence& sequence() const { return *seq_; }
  const SimState& state() const { return state_; }

  /// Request at the cursor, or nullptr once the window is exhausted.
  const Request* pending() const;
  bool done() const { return state_.terminal || pending() == nullptr; }

  std::size_t n_pms() const { return cluster_->n_pms(); }
  std::size_t dims() const { return state_.dims; }

  /// Residual of PM i as the next placement would see it (queue applied).
  Resources effective_residual(std::size_t pm) const;
  std::int64_t effective_residual(std::size_t pm, std::size_t dim) const {
    const auto k = pm * state_.dims + dim;
    return state_.residual[k] + state_.pending_release[k];
  }
  const Resources& capacity(std::size_t pm) const { return cluster_->capacities[pm]; }

  bool fits(std::size_t pm) const;
  /// PMs able to host the pending Create; throws NotACreateEvent otherwise.
  std::vector<std::size_t> feasible() const;

  StepOutcome step(Action action);

  /// Host of an active VM (queue not yet applied), if any.
  std::optional<std::size_t> host_of(VmId vm) const;
  const std::vector<VmId>& hosted(std::size_t pm) const { return state_.hosted[pm]; }

 private:
  const ClusterSpec* cluster_;
  const RequestSequence* seq_;
  RewardWeights weights_;
  SimState state_;
};

Environment init(const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start,
                 std::size_t end = Environment::npos);

// ---------------------------------------------------------------------------
// Episodes and replay logs

/// A placement policy is consulted only when a Create is pending.
using PlacementPolicy = std::function<Action(const Environment&)>;

struct LogRecord {
  std::size_t step = 0;
  Op op = Op::Create;
  std::string vm;
  Action action;
  int reward = 0;
  bool terminal = false;
  friend bool operator==(const LogRecord&, const LogRecord&) = default;
};

struct EpisodeResult {
  std::size_t scheduled_length = 0;
  std::size_t steps = 0;
  std::size_t creates_consumed = 0;
  double total_reward = 0.0;
  bool failed = false;  // ended by first-failure rather than exhaustion
  std::optional<std::vector<LogRecord>> trajectory;
  friend bool operator==(const EpisodeResult&, const EpisodeResult&) = default;
};

struct EpisodeOptions {
  std::size_t end = Environment::npos;
  bool record = false;
  RewardWeights weights;
};

EpisodeResult run_episode(const PlacementPolicy& policy, const ClusterSpec& cluster,
                          const RequestSequence& seq, std::size_t start,
                          const EpisodeOptions& options = {});

/// One line per step: `step<TAB>C|D:vm<TAB>P:i|R|N<TAB>reward<TAB>terminal`.
std::string format_replay_log(const std::vector<LogRecord>& records);
std::vector<LogRecord> parse_replay_log(std::string_view text);

/// Re-drives logged actions through a fresh environment; throws
/// EpisodeAborted at the first record whose outcome differs.
EpisodeResult replay(const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start,
                     const std::vector<LogRecord>& records, std::size_t end = Environment::npos);

}  // namespace vmsched
