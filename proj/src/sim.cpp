// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include "vmsched/sim.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "vmsched/error.hpp"

namespace vmsched {

ClusterSpec ClusterSpec::homogeneous(std::size_t n_pms, Resources capacity) {
  ClusterSpec spec;
  spec.capacities.assign(n_pms, std::move(capacity));
  spec.validate();
  return spec;
}

void ClusterSpec::validate() const {
  if (capacities.empty()) throw Error(ErrorCode::InvalidCluster, "cluster needs at least one PM");
  const auto d = capacities.front().size();
  if (d == 0) throw Error(ErrorCode::InvalidCluster, "capacity needs at least one dimension");
  for (const auto& cap : capacities) {
    if (cap.size() != d) throw Error(ErrorCode::InvalidCluster, "mixed capacity dimensions");
    for (auto v : cap) {
      if (v <= 0) throw Error(ErrorCode::InvalidCluster, "capacities must be positive");
    }
  }
}

Environment::Environment(const ClusterSpec& cluster, const RequestSequence& seq,
                         std::size_t start, std::size_t end, RewardWeights weights)
    : cluster_(&cluster), seq_(&seq), weights_(weights) {
  cluster.validate();
  if (seq.dims != cluster.dims()) {
    throw Error(ErrorCode::DimensionMismatch, "trace and cluster disagree on dimensions");
  }
  end = std::min(end, seq.horizon());
  const bool past_end = seq.horizon() > 0 && start >= seq.horizon();
  if (start > end || past_end) {
    throw Error(ErrorCode::OffsetOutOfRange,
                "start " + std::to_string(start) + " outside sequence of " +
                    std::to_string(seq.horizon()));
  }
  const auto d = cluster.dims();
  state_.cursor = start;
  state_.end = end;
  state_.dims = d;
  state_.residual.reserve(cluster.n_pms() * d);
  for (const auto& cap : cluster.capacities) {
    state_.residual.insert(state_.residual.end(), cap.begin(), cap.end());
  }
  state_.pending_release.assign(cluster.n_pms() * d, 0);
  state_.host.assign(seq.vm_count(), -1);
  state_.hosted.assign(cluster.n_pms(), {});
}

const Request* Environment::pending() const {
  if (state_.cursor >= state_.end) return nullptr;
  return &seq_->requests[state_.cursor];
}

Resources Environment::effective_residual(std::size_t pm) const {
  Resources out(state_.dims);
  for (std::size_t j = 0; j < state_.dims; ++j) out[j] = effective_residual(pm, j);
  return out;
}

bool Environment::fits(std::size_t pm) const {
  const Request* req = pending();
  if (req == nullptr || req->op != Op::Create) {
    throw Error(ErrorCode::NotACreateEvent, "feasibility needs a pending Create");
  }
  for (std::size_t j = 0; j < state_.dims; ++j) {
    if (effective_residual(pm, j) < req->demand[j]) return false;
  }
  return true;
}

std::vector<std::size_t> Environment::feasible() const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_pms(); ++i) {
    if (fits(i)) out.push_back(i);
  }
  return out;
}

std::optional<std::size_t> Environment::host_of(VmId vm) const {
  const auto h = state_.host.at(vm.value);
  if (h < 0) return std::nullopt;
  return static_cast<std::size_t>(h);
}

StepOutcome Environment::step(Action action) {
  if (state_.terminal) throw Error(ErrorCode::SteppedAfterTerminal, "episode already terminated");
  const Request* req = pending();
  if (req == nullptr) throw Error(ErrorCode::OffsetOutOfRange, "sequence exhausted");
  const auto d = state_.dims;
  StepOutcome out;

  if (req->op == Op::Delete) {
    if (action.kind != Action::Kind::NoOp) {
      throw Error(ErrorCode::IllegalAction, "only NoOp is legal on a Delete event");
    }
    // VMs created before the window (or never placed) have nothing to release.
    const auto h = state_.host[req->vm.value];
    if (h >= 0) {
      state_.queue.push_back(req->vm);
      for (std::size_t j = 0; j < d; ++j) {
        state_.pending_release[static_cast<std::size_t>(h) * d + j] += req->demand[j];
      }
    }
    ++state_.cursor;
    ++state_.steps;
    return out;
  }

  if (action.kind == Action::Kind::NoOp) {
    throw Error(ErrorCode::IllegalAction, "NoOp is not legal on a Create event");
  }
  if (action.kind == Action::Kind::Place && action.pm >= n_pms()) {
    throw Error(ErrorCode::IllegalAction, "PM index " + std::to_string(action.pm) + " out of range");
  }

  // Apply the deletion queue before the placement decision takes effect.
  for (const VmId vm : state_.queue) {
    const auto h = static_cast<std::size_t>(state_.host[vm.value]);
    out.released.emplace_back(vm, h);
    state_.host[vm.value] = -1;
    auto& list = state_.hosted[h];
    list.erase(std::find(list.begin(), list.end(), vm));
  }
  for (std::size_t k = 0; k < state_.residual.size(); ++k) {
    state_.residual[k] += state_.pending_release[k];
    state_.pending_release[k] = 0;
  }
  state_.queue.clear();

  bool placed = false;
  if (action.kind == Action::Kind::Place) {
    const auto base = action.pm * d;
    placed = true;
    for (std::size_t j = 0; j < d; ++j) {
      if (state_.residual[base + j] < req->demand[j]) {
        placed = false;
        break;
      }
    }
    if (placed) {
      for (std::size_t j = 0; j < d; ++j) state_.residual[base + j] -= req->demand[j];
      state_.host[req->vm.value] = static_cast<std::int32_t>(action.pm);
      state_.hosted[action.pm].push_back(req->vm);
    }
  }

  ++state_.steps;
  ++state_.cursor;
  if (placed) {
    ++state_.placed;
    out.reward = 1;
    out.shaped_reward = 1.0;
    if (weights_.util != 0.0 || weights_.type != 0.0) {
      const auto& cap = capacity(action.pm);
      double lo = 1.0, hi = 0.0, vol = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double frac = static_cast<double>(state_.residual[action.pm * d + j]) /
                            static_cast<double>(cap[j]);
        lo = std::min(lo, frac);
        hi = std::max(hi, frac);
        vol += static_cast<double>(req->demand[j]) / static_cast<double>(cap[j]);
      }
      out.shaped_reward += weights_.util * (1.0 - (hi - lo)) + weights_.type * (vol / static_cast<double>(d));
    }
  } else {
    state_.terminal = true;
    out.terminal = true;
  }
  return out;
}

Environment init(const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start,
                 std::size_t end) {
  return Environment(cluster, seq, start, end);
}

// ---------------------------------------------------------------------------

EpisodeResult run_episode(const PlacementPolicy& policy, const ClusterSpec& cluster,
                          const RequestSequence& seq, std::size_t start,
                          const EpisodeOptions& options) {
  Environment env(cluster, seq, start, options.end, options.weights);
  EpisodeResult result;
  if (options.record) result.trajectory.emplace();
  while (!env.done()) {
    const Request& req = *env.pending();
    Action action = Action::noop();
    if (req.op == Op::Create) {
      try {
        action = policy(env);
      } catch (const Error& e) {
        throw Error(ErrorCode::EpisodeAborted,
                    "at step " + std::to_string(env.state().steps) + ": " + e.what());
      }
      ++result.creates_consumed;
    }
    const std::size_t step_index = env.state().steps;
    const StepOutcome out = env.step(action);
    result.scheduled_length += static_cast<std::size_t>(out.reward);
    result.total_reward += out.shaped_reward;
    if (result.trajectory) {
      result.trajectory->push_back(
          LogRecord{step_index, req.op, seq.name(req.vm), action, out.reward, out.terminal});
    }
  }
  result.steps = env.state().steps;
  result.failed = env.state().terminal;
  return result;
}

std::string format_replay_log(const std::vector<LogRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += std::to_string(r.step);
    out += r.op == Op::Create ? "\tC:" : "\tD:";
    out += r.vm;
    out += '\t';
    switch (r.action.kind) {
      case Action::Kind::Place: out += "P:" + std::to_string(r.action.pm); break;
      case Action::Kind::Reject: out += "R"; break;
      case Action::Kind::NoOp: out += "N"; break;
    }
    out += '\t';
    out += std::to_string(r.reward);
    out += r.terminal ? "\t1\n" : "\t0\n";
  }
  return out;
}

std::vector<LogRecord> parse_replay_log(std::string_view text) {
  std::vector<LogRecord> out;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  auto bad = [&](const std::string& why) {
    return Error(ErrorCode::MalformedRow, "replay line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> f;
    std::size_t pos = 0;
    while (true) {
      auto tab = line.find('\t', pos);
      f.push_back(line.substr(pos, tab == std::string::npos ? std::string::npos : tab - pos));
      if (tab == std::string::npos) break;
      pos = tab + 1;
    }
    if (f.size() != 5 || f[1].size() < 2 || f[1][1] != ':') throw bad("expected 5 fields");
    LogRecord r;
    r.step = std::stoull(f[0]);
    if (f[1][0] == 'C') {
      r.op = Op::Create;
    } else if (f[1][0] == 'D') {
      r.op = Op::Delete;
    } else {
      throw bad("bad event");
    }
    r.vm = f[1].substr(2);
    if (f[2] == "R") {
      r.action = Action::reject();
    } else if (f[2] == "N") {
      r.action = Action::noop();
    } else if (f[2].rfind("P:", 0) == 0) {
      r.action = Action::place(std::stoull(f[2].substr(2)));
    } else {
      throw bad("bad action");
    }
    r.reward = std::stoi(f[3]);
    r.terminal = f[4] == "1";
    out.push_back(std::move(r));
  }
  return out;
}

EpisodeResult replay(const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start,
                     const std::vector<LogRecord>& records, std::size_t end) {
  Environment env(cluster, seq, start, end);
  EpisodeResult result;
  result.trajectory.emplace();
  for (const auto& rec : records) {
    const Request* req = env.pending();
    auto diverged = [&](const std::string& why) {
      return Error(ErrorCode::EpisodeAborted,
                   "replay diverged at step " + std::to_string(rec.step) + ": " + why);
    };
    if (req == nullptr || env.state().terminal) throw diverged("episode already ended");
    if (env.state().steps != rec.step || req->op != rec.op || seq.name(req->vm) != rec.vm) {
      throw diverged("event mismatch");
    }
    if (req->op == Op::Create) ++result.creates_consumed;
    const auto out = env.step(rec.action);
    if (out.reward != rec.reward || out.terminal != rec.terminal) throw diverged("outcome mismatch");
    result.scheduled_length += static_cast<std::size_t>(out.reward);
    result.total_reward += out.shaped_reward;
    result.trajectory->push_back(rec);
  }
  if (!env.done()) {
    throw Error(ErrorCode::EpisodeAborted, "replay log ends before the episode does");
  }
  result.steps = env.state().steps;
  result.failed = env.state().terminal;
  return result;
}

}  // namespace vmsched
