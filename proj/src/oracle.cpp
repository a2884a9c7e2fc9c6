// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include "vmsched/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <unordered_map>

#include "vmsched/heuristics.hpp"

namespace vmsched {

namespace {

struct OutOfBudget {};

struct CreateEvent {
  std::uint32_t vm = 0;
  std::vector<std::int64_t> demand;
  std::vector<std::uint32_t> deletes_after;  // released before the next Create
};

class Search {
 public:
  Search(const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start, std::size_t end,
         const OracleLimits& limits)
      : limits_(limits), n_(cluster.n_pms()), d_(seq.dims), begin_(std::chrono::steady_clock::now()) {
    end = std::min(end, seq.requests.size());
    std::vector<bool> created(seq.vm_count(), false);
    future_delete_.assign(seq.vm_count(), false);
    demand_.assign(seq.vm_count(), {});
    for (std::size_t i = start; i < end; ++i) {
      const auto& r = seq.requests[i];
      const auto v = r.vm.value;
      if (r.op == Op::Create) {
        created[v] = true;
        demand_[v] = r.demand;
        creates_.push_back({v, r.demand, {}});
      } else if (created[v] && !creates_.empty()) {
        future_delete_[v] = true;
        creates_.back().deletes_after.push_back(v);
      }
    }
    residual_.resize(n_ * d_);
    for (std::size_t p = 0; p < n_; ++p) {
      for (std::size_t k = 0; k < d_; ++k) residual_[p * d_ + k] = cluster.capacities[p][k];
    }
    hosted_.assign(n_, {});
    host_.assign(seq.vm_count(), -1);
  }

  std::size_t creates() const { return creates_.size(); }

  std::size_t solve() { return value(0); }

  std::uint64_t nodes = 0;
  std::size_t best = 0;

 private:
  bool fits(std::size_t p, const std::vector<std::int64_t>& dem) const {
    for (std::size_t k = 0; k < d_; ++k) {
      if (dem[k] > residual_[p * d_ + k]) return false;
    }
    return true;
  }

  bool same_descriptor(std::size_t a, std::size_t b) const {
    for (std::size_t k = 0; k < d_; ++k) {
      if (residual_[a * d_ + k] != residual_[b * d_ + k]) return false;
    }
    return hosted_[a] == hosted_[b];
  }

  std::string key(std::size_t i) const {
    std::vector<std::vector<std::int64_t>> desc(n_);
    for (std::size_t p = 0; p < n_; ++p) {
      auto& v = desc[p];
      for (std::size_t k = 0; k < d_; ++k) v.push_back(residual_[p * d_ + k]);
      v.push_back(static_cast<std::int64_t>(hosted_[p].size()));
      for (auto id : hosted_[p]) v.push_back(id);
    }
    std::sort(desc.begin(), desc.end());
    std::string out(reinterpret_cast<const char*>(&i), sizeof(i));
    for (const auto& v : desc) out.append(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(std::int64_t));
    return out;
  }

  void tick() {
    ++nodes;
    if (nodes > limits_.max_nodes) throw OutOfBudget{};
    if ((nodes & 4095) == 0 && std::chrono::steady_clock::now() - begin_ > limits_.max_time) throw OutOfBudget{};
  }

  // Places create i on p and applies the deletes that follow it; returns the
  // released VMs for undo.
  std::vector<std::pair<std::uint32_t, std::size_t>> apply(std::size_t i, std::size_t p) {
    const auto& c = creates_[i];
    for (std::size_t k = 0; k < d_; ++k) residual_[p * d_ + k] -= c.demand[k];
    host_[c.vm] = static_cast<std::int32_t>(p);
    if (future_delete_[c.vm]) {
      auto& h = hosted_[p];
      h.insert(std::lower_bound(h.begin(), h.end(), c.vm), c.vm);
    }
    std::vector<std::pair<std::uint32_t, std::size_t>> released;
    for (auto v : c.deletes_after) {
      if (host_[v] < 0) continue;
      const auto q = static_cast<std::size_t>(host_[v]);
      for (std::size_t k = 0; k < d_; ++k) residual_[q * d_ + k] += demand_[v][k];
      auto& h = hosted_[q];
      h.erase(std::lower_bound(h.begin(), h.end(), v));
      host_[v] = -1;
      released.emplace_back(v, q);
    }
    return released;
  }

  void undo(std::size_t i, std::size_t p, const std::vector<std::pair<std::uint32_t, std::size_t>>& released) {
    for (auto it = released.rbegin(); it != released.rend(); ++it) {
      const auto [v, q] = *it;
      for (std::size_t k = 0; k < d_; ++k) residual_[q * d_ + k] -= demand_[v][k];
      auto& h = hosted_[q];
      h.insert(std::lower_bound(h.begin(), h.end(), v), v);
      host_[v] = static_cast<std::int32_t>(q);
    }
    const auto& c = creates_[i];
    if (future_delete_[c.vm]) {
      auto& h = hosted_[p];
      h.erase(std::lower_bound(h.begin(), h.end(), c.vm));
    }
    host_[c.vm] = -1;
    for (std::size_t k = 0; k < d_; ++k) residual_[p * d_ + k] += c.demand[k];
  }

  std::size_t value(std::size_t i) {
    tick();
    best = std::max(best, i);
    if (i == creates_.size()) return 0;
    const auto k = key(i);
    if (auto it = memo_.find(k); it != memo_.end()) return it->second;
    const std::size_t remaining = creates_.size() - i;
    std::size_t result = 0;
    for (std::size_t p = 0; p < n_ && result < remaining; ++p) {
      if (!fits(p, creates_[i].demand)) continue;
      bool duplicate = false;
      for (std::size_t q = 0; q < p && !duplicate; ++q) duplicate = same_descriptor(p, q);
      if (duplicate) continue;
      const auto released = apply(i, p);
      const std::size_t v = 1 + value(i + 1);
      undo(i, p, released);
      result = std::max(result, v);
    }
    if (memo_bytes_ < kMemoBytes) {
      memo_bytes_ += k.size() + 64;
      memo_.emplace(k, result);
    }
    return result;
  }

  OracleLimits limits_;
  std::size_t n_;
  std::size_t d_;
  std::chrono::steady_clock::time_point begin_;
  std::vector<CreateEvent> creates_;
  std::vector<bool> future_delete_;
  std::vector<std::vector<std::int64_t>> demand_;
  std::vector<std::int64_t> residual_;
  std::vector<std::vector<std::uint32_t>> hosted_;
  std::vector<std::int32_t> host_;
  std::unordered_map<std::string, std::size_t> memo_;
  std::size_t memo_bytes_ = 0;
  static constexpr std::size_t kMemoBytes = std::size_t{512} << 20;
};

std::size_t greedy_floor(const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start,
                         std::size_t end) {
  EpisodeOptions opts;
  opts.end = end;
  std::size_t best = 0;
  for (const auto& p : {best_fit_policy(), first_fit_policy()}) {
    best = std::max(best, run_episode(p, cluster, seq, start, opts).scheduled_length);
  }
  return best;
}

OracleResult search(const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start,
                    std::size_t end, const OracleLimits& limits, bool throw_on_budget) {
  cluster.validate();
  if (cluster.dims() != seq.dims) throw Error(ErrorCode::DimensionMismatch, "cluster and trace dimensions differ");
  if (start > seq.requests.size()) throw Error(ErrorCode::OffsetOutOfRange, "start beyond the sequence");
  Search s(cluster, seq, start, end, limits);
  if (!limits.allow_large && s.creates() > 25 && cluster.n_pms() > 4) {
    throw Error(ErrorCode::InstanceTooLarge, std::to_string(s.creates()) + " creates on " +
                                                 std::to_string(cluster.n_pms()) + " PMs exceeds desk scale");
  }
  try {
    const std::size_t v = s.solve();
    return {v, s.nodes, true};
  } catch (const OutOfBudget&) {
    OracleResult best{std::max(s.best, greedy_floor(cluster, seq, start, end)), s.nodes, false};
    if (throw_on_budget) throw BudgetExhaustedError(best);
    return best;
  }
}

}  // namespace

OracleResult offline_optimal(const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start,
                             std::size_t end, const OracleLimits& limits) {
  return search(cluster, seq, start, end, limits, true);
}

OracleResult offline_bound(const ClusterSpec& cluster, const RequestSequence& seq, std::size_t start,
                           std::size_t end, const OracleLimits& limits) {
  OracleLimits l = limits;
  l.allow_large = true;
  return search(cluster, seq, start, end, l, false);
}

double performance_ratio(double online_length, double offline_length) {
  if (!(offline_length >= 1.0)) {
    throw Error(ErrorCode::DivisionByZeroOffline, "offline length must be at least 1");
  }
  return 100.0 * online_length / offline_length;
}

std::string format_percent(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.1f", std::round(value * 10.0) / 10.0);
  return buf;
}

}  // namespace vmsched
