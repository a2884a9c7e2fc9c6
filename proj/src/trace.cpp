// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include "vmsched/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "vmsched/error.hpp"
#include "vmsched/rng.hpp"

namespace vmsched {

std::size_t RequestSequence::create_count() const {
  return static_cast<std::size_t>(std::count_if(
      requests.begin(), requests.end(), [](const Request& r) { return r.op == Op::Create; }));
}

// ---------------------------------------------------------------------------
// SequenceBuilder

VmId SequenceBuilder::intern(std::string_view vm) {
  auto [it, inserted] = ids_.try_emplace(std::string(vm), VmId{0});
  if (inserted) {
    it->second = VmId{static_cast<std::uint32_t>(seq_.names.size())};
    seq_.names.emplace_back(vm);
    live_.push_back(false);
    demand_of_.emplace_back();
  }
  return it->second;
}

void SequenceBuilder::check_time(std::int64_t time, std::size_t line) {
  if (time < 0) throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line) + ": negative time");
  if (!seq_.requests.empty() && time < seq_.requests.back().time) {
    throw Error(ErrorCode::MalformedRow,
                "line " + std::to_string(line) + ": timestamps must be nondecreasing");
  }
}

void SequenceBuilder::add_create(std::string_view vm, Resources demand, std::int64_t time,
                                 std::size_t line) {
  check_time(time, line);
  if (demand.size() != seq_.dims) {
    throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line) + ": expected " +
                                             std::to_string(seq_.dims) + " demand values");
  }
  for (auto v : demand) {
    if (v < 0) throw Error(ErrorCode::NegativeDemand, std::string(vm));
  }
  const VmId id = intern(vm);
  if (live_[id.value]) {
    throw Error(ErrorCode::MalformedRow,
                "line " + std::to_string(line) + ": vm " + std::string(vm) + " created twice");
  }
  live_[id.value] = true;
  demand_of_[id.value] = demand;
  seq_.requests.push_back(Request{id, std::move(demand), Op::Create, time});
}

void SequenceBuilder::add_delete(std::string_view vm, std::int64_t time,
                                 std::optional<Resources> demand, std::size_t line) {
  check_time(time, line);
  auto it = ids_.find(std::string(vm));
  if (it == ids_.end() || !live_[it->second.value]) {
    if (tolerate_unmatched_) {
      ++unmatched_;
      return;
    }
    throw Error(ErrorCode::UnmatchedDelete, std::string(vm));
  }
  const VmId id = it->second;
  if (demand) {
    for (auto v : *demand) {
      if (v < 0) throw Error(ErrorCode::NegativeDemand, std::string(vm));
    }
    if (*demand != demand_of_[id.value]) {
      throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line) +
                                               ": delete demand differs from create for vm " +
                                               std::string(vm));
    }
  }
  live_[id.value] = false;
  seq_.requests.push_back(Request{id, demand_of_[id.value], Op::Delete, time});
}

RequestSequence SequenceBuilder::finish() && { return std::move(seq_); }

// ---------------------------------------------------------------------------
// Parsing

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(delim, pos);
    if (next == std::string_view::npos) {
      out.push_back(trim(line.substr(pos)));
      break;
    }
    out.push_back(trim(line.substr(pos, next - pos)));
    pos = next + 1;
  }
  return out;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  // Accept integral floats such as "4.0" that some exporters emit.
  double d = 0;
  auto [p2, ec2] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ec2 == std::errc() && p2 == s.data() + s.size() && std::floor(d) == d &&
      std::abs(d) < 9.0e18) {
    return static_cast<std::int64_t>(d);
  }
  return std::nullopt;
}

std::size_t resolve_column(const std::string& key, const std::vector<std::string_view>& header) {
  if (auto idx = parse_int(key); idx && *idx >= 0) return static_cast<std::size_t>(*idx);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == key) return i;
  }
  throw Error(ErrorCode::MalformedRow, "line 1: column '" + key + "' not found in header");
}

[[noreturn]] void malformed(std::size_t line, const std::string& what) {
  throw Error(ErrorCode::MalformedRow, "line " + std::to_string(line) + ": " + what);
}

}  // namespace

ParseReport parse_trace_text(std::string_view text, const ColumnMapping& mapping) {
  SequenceBuilder builder(mapping.demand.size());
  builder.set_tolerate_unmatched(mapping.skip_unmatched_deletes);

  std::vector<std::string_view> header;
  std::size_t vm_col = 0, time_col = 0, op_col = 0;
  std::vector<std::size_t> demand_cols;
  bool resolved = false;

  auto resolve = [&]() {
    vm_col = resolve_column(mapping.vm_id, header);
    time_col = resolve_column(mapping.time, header);
    op_col = resolve_column(mapping.op, header);
    demand_cols.clear();
    for (const auto& c : mapping.demand) demand_cols.push_back(resolve_column(c, header));
    resolved = true;
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view raw = trim(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    if (raw.empty() || raw.front() == '#') {
      if (nl == text.size()) break;
      continue;
    }
    auto fields = split(raw, mapping.delimiter);
    if (!resolved) {
      if (mapping.has_header) {
        header = fields;
        resolve();
        // Header views point into `text`, which outlives this loop.
        continue;
      }
      resolve();
    }
    auto need = std::max({vm_col, time_col, op_col,
                          demand_cols.empty() ? std::size_t{0}
                                              : *std::max_element(demand_cols.begin(), demand_cols.end())});
    if (fields.size() <= need) malformed(line_no, "too few columns");

    const std::string_view vm = fields[vm_col];
    if (vm.empty()) malformed(line_no, "empty vm id");
    auto time = parse_int(fields[time_col]);
    if (!time) malformed(line_no, "bad time '" + std::string(fields[time_col]) + "'");

    const std::string_view op = fields[op_col];
    bool any_demand = false, all_demand = true;
    Resources demand;
    for (auto c : demand_cols) {
      if (fields[c].empty()) {
        all_demand = false;
        continue;
      }
      any_demand = true;
      auto v = parse_int(fields[c]);
      if (!v) malformed(line_no, "bad demand '" + std::string(fields[c]) + "'");
      demand.push_back(*v);
    }
    if (any_demand && !all_demand) malformed(line_no, "partial demand");

    if (op == mapping.create_code) {
      if (!all_demand) malformed(line_no, "create without demand");
      builder.add_create(vm, std::move(demand), *time, line_no);
    } else if (op == mapping.delete_code) {
      std::optional<Resources> d;
      if (all_demand) d = std::move(demand);
      builder.add_delete(vm, *time, std::move(d), line_no);
    } else {
      malformed(line_no, "unknown op code '" + std::string(op) + "'");
    }
    if (nl == text.size()) break;
  }
  ParseReport report;
  report.unmatched_deletes = builder.unmatched_deletes();
  report.sequence = std::move(builder).finish();
  return report;
}

ParseReport parse_trace(const std::filesystem::path& path, const ColumnMapping& mapping) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  return parse_trace_text(text, mapping);
}

std::string serialize_trace(const RequestSequence& seq) {
  std::string out = "vm_id";
  if (seq.dims == 2) {
    out += ",cpu,memory";
  } else {
    for (std::size_t j = 0; j < seq.dims; ++j) out += ",r" + std::to_string(j);
  }
  out += ",time,type\n";
  for (const auto& r : seq.requests) {
    out += seq.name(r.vm);
    for (auto v : r.demand) {
      out += ',';
      out += std::to_string(v);
    }
    out += ',';
    out += std::to_string(r.time);
    out += r.op == Op::Create ? ",1\n" : ",0\n";
  }
  return out;
}

void write_trace(const std::filesystem::path& path, const RequestSequence& seq) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << serialize_trace(seq);
}

// ---------------------------------------------------------------------------
// VM types

std::string_view vm_type_key(VmType t) {
  switch (t) {
    case VmType::Small: return "small";
    case VmType::MediumSmall: return "medium_small";
    case VmType::MediumMedium: return "medium_medium";
    case VmType::MediumLarge: return "medium_large";
    case VmType::Large: return "large";
  }
  return "small";
}

std::optional<VmType> vm_type_from_key(std::string_view key) {
  for (auto t : kAllVmTypes) {
    if (vm_type_key(t) == key) return t;
  }
  return std::nullopt;
}

void ThresholdTable::validate() const {
  if (cpu_cuts[0] >= cpu_cuts[1] || mem_cuts[0] >= mem_cuts[1]) {
    throw Error(ErrorCode::InvalidThresholds, "cut points must be strictly increasing");
  }
}

VmType classify_vm(const Resources& demand, const ThresholdTable& thresholds) {
  thresholds.validate();
  if (demand.size() < 2) throw Error(ErrorCode::DimensionMismatch, "classification needs cpu and memory");
  auto band = [](std::int64_t x, const std::array<std::int64_t, 2>& cuts) -> std::size_t {
    if (x <= cuts[0]) return 0;
    if (x <= cuts[1]) return 1;
    return 2;
  };
  return thresholds.band_table[band(demand[0], thresholds.cpu_cuts)][band(demand[1], thresholds.mem_cuts)];
}

// ---------------------------------------------------------------------------
// Scenarios

std::vector<Scenario> generate_scenarios(const RequestSequence& seq, Window window) {
  if (seq.empty()) throw Error(ErrorCode::EmptySequence, "cannot split an empty sequence");
  if (window.length <= 0) throw Error(ErrorCode::InvalidConfig, "window length must be positive");
  std::vector<Scenario> out;
  const std::size_t t_total = seq.horizon();
  if (window.kind == WindowKind::RequestCount) {
    const auto w = static_cast<std::size_t>(window.length);
    const std::size_t k = (t_total + w - 1) / w;
    for (std::size_t i = 0; i < k; ++i) {
      out.push_back(Scenario{i + 1, i * w, std::min((i + 1) * w, t_total)});
    }
    return out;
  }
  const std::int64_t t0 = seq.requests.front().time;
  std::size_t begin = 0;
  std::int64_t bucket = (seq.requests.front().time - t0) / window.length;
  for (std::size_t i = 1; i <= t_total; ++i) {
    const bool boundary =
        i == t_total || (seq.requests[i].time - t0) / window.length != bucket;
    if (boundary) {
      out.push_back(Scenario{out.size() + 1, begin, i});
      if (i < t_total) {
        begin = i;
        bucket = (seq.requests[i].time - t0) / window.length;
      }
    }
  }
  return out;
}

std::vector<Scenario> equal_scenarios(const RequestSequence& seq, std::size_t k) {
  if (seq.empty()) throw Error(ErrorCode::EmptySequence, "cannot split an empty sequence");
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "K must be positive");
  const std::size_t w = (seq.horizon() + k - 1) / k;
  return generate_scenarios(seq, Window{WindowKind::RequestCount, static_cast<std::int64_t>(w)});
}

ClusterResult cluster_scenarios(const RequestSequence& seq,
                                const std::vector<std::vector<double>>& scores,
                                const ClusterOptions& options) {
  const std::size_t n = scores.size();
  if (n == 0) throw Error(ErrorCode::DimensionMismatch, "empty score matrix");
  for (const auto& row : scores) {
    if (row.size() != n) throw Error(ErrorCode::DimensionMismatch, "score matrix must be square");
  }
  if (seq.horizon() < n) throw Error(ErrorCode::DimensionMismatch, "fewer requests than traces");
  if (options.n_clusters > n) throw Error(ErrorCode::DimensionMismatch, "more clusters than traces");

  std::vector<std::vector<double>> dist(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double s = 0;
      for (std::size_t c = 0; c < n; ++c) s += (scores[i][c] - scores[j][c]) * (scores[i][c] - scores[j][c]);
      dist[i][j] = dist[j][i] = std::sqrt(s);
    }
  }

  // Average linkage; record every merge so the dendrogram can be cut.
  std::vector<std::vector<std::size_t>> clusters(n);
  for (std::size_t i = 0; i < n; ++i) clusters[i] = {i};
  struct Merge {
    std::size_t a, b;
    double height;
  };
  std::vector<Merge> merges;
  std::vector<std::vector<std::vector<std::size_t>>> snapshots{clusters};
  auto linkage = [&](const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    double s = 0;
    for (auto i : a)
      for (auto j : b) s += dist[i][j];
    return s / static_cast<double>(a.size() * b.size());
  };
  while (clusters.size() > 1) {
    std::size_t best_a = 0, best_b = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        const double l = linkage(clusters[a], clusters[b]);
        if (l < best - 1e-12) {
          best = l;
          best_a = a;
          best_b = b;
        }
      }
    }
    merges.push_back({best_a, best_b, best});
    auto& dst = clusters[best_a];
    dst.insert(dst.end(), clusters[best_b].begin(), clusters[best_b].end());
    std::sort(dst.begin(), dst.end());
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(best_b));
    snapshots.push_back(clusters);
  }

  std::size_t k = options.n_clusters;
  if (k == 0) {
    // Cut before the largest jump in merge height; no jump means one cluster.
    k = 1;
    double prev = 0.0, best_gap = 1e-9;
    for (std::size_t m = 0; m < merges.size(); ++m) {
      const double gap = merges[m].height - prev;
      if (gap > best_gap) {
        best_gap = gap;
        k = n - m;
      }
      prev = merges[m].height;
    }
  }
  auto chosen = snapshots[n - k];
  std::sort(chosen.begin(), chosen.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });

  ClusterResult result;
  result.membership.assign(n, 0);
  const auto slices = equal_scenarios(seq, n);
  std::vector<Scenario> reps;
  for (std::size_t c = 0; c < chosen.size(); ++c) {
    std::size_t medoid = chosen[c].front();
    double best = std::numeric_limits<double>::infinity();
    for (auto i : chosen[c]) {
      result.membership[i] = c;
      double s = 0;
      for (auto j : chosen[c]) s += dist[i][j];
      if (s < best - 1e-12) {
        best = s;
        medoid = i;
      }
    }
    reps.push_back(slices.at(medoid));
  }
  std::sort(reps.begin(), reps.end(), [](const auto& a, const auto& b) { return a.begin < b.begin; });
  for (std::size_t i = 0; i < reps.size(); ++i) reps[i].index = i + 1;
  result.scenarios = std::move(reps);
  return result;
}

StartSplit split_train_test(const Scenario& scenario, const SplitSpec& spec) {
  if (spec.n_starts < 2) throw Error(ErrorCode::InvalidConfig, "n_starts must be at least 2");
  const std::size_t len = scenario.size();
  if (len < spec.n_starts) {
    throw Error(ErrorCode::ScenarioTooShort, "scenario of length " + std::to_string(len) +
                                                 " cannot host " + std::to_string(spec.n_starts) +
                                                 " starts");
  }
  StartSplit split;
  for (std::size_t i = 0; i < spec.n_starts; ++i) {
    const std::size_t off = i * len / spec.n_starts;
    if (i + 1 < spec.n_starts) {
      split.train.push_back(off);
    } else {
      split.test = off;
    }
  }
  return split;
}

// ---------------------------------------------------------------------------
// Synthetic workloads

std::map<VmType, std::vector<Resources>> MixtureSchedule::default_demands() {
  // Consistent with the default ThresholdTable (cpu cuts {2,8}, mem cuts {4,16}).
  return {
      {VmType::Small, {{1, 2}, {2, 4}, {1, 1}}},
      {VmType::MediumSmall, {{2, 8}, {4, 4}, {1, 8}}},
      {VmType::MediumMedium, {{4, 8}, {8, 16}, {4, 16}}},
      {VmType::MediumLarge, {{4, 32}, {16, 16}, {8, 32}}},
      {VmType::Large, {{16, 32}, {16, 64}, {32, 64}}},
  };
}

RequestSequence synth_workload(const MixtureSchedule& spec, std::uint64_t seed) {
  for (const auto& seg : spec.segments) {
    double total = 0;
    for (const auto& [type, p] : seg.mixture) {
      if (p < 0) throw Error(ErrorCode::InvalidMixture, "negative probability");
      total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw Error(ErrorCode::InvalidMixture, "mixture sums to " + std::to_string(total));
    }
    for (const auto& [type, p] : seg.mixture) {
      if (p > 0) {
        auto it = spec.demands.find(type);
        if (it == spec.demands.end() || it->second.empty()) {
          throw Error(ErrorCode::InvalidMixture,
                      "no demand candidates for " + std::string(vm_type_key(type)));
        }
      }
    }
  }

  struct Event {
    std::int64_t time;
    int order;  // 0 = delete, 1 = create
    std::size_t serial;
    std::size_t vm;
  };
  Rng rng(seed);
  std::vector<Event> events;
  std::vector<Resources> demands;
  std::int64_t now = 0;
  for (const auto& seg : spec.segments) {
    std::vector<std::pair<VmType, double>> cdf;
    double acc = 0;
    for (const auto& [type, p] : seg.mixture) {
      if (p <= 0) continue;
      acc += p;
      cdf.emplace_back(type, acc);
    }
    for (std::size_t c = 0; c < seg.creates; ++c) {
      const double u = rng.uniform() * acc;
      VmType type = cdf.back().first;
      for (const auto& [t, edge] : cdf) {
        if (u < edge) {
          type = t;
          break;
        }
      }
      const auto& candidates = spec.demands.at(type);
      const std::size_t vm = demands.size();
      demands.push_back(candidates[rng.index(candidates.size())]);

      double life = 0;
      switch (seg.lifetime.kind) {
        case LifetimeDist::Kind::Fixed: life = seg.lifetime.a; break;
        case LifetimeDist::Kind::Uniform:
          life = seg.lifetime.a + rng.uniform() * (seg.lifetime.b - seg.lifetime.a);
          break;
        case LifetimeDist::Kind::Exponential: life = rng.exponential(seg.lifetime.a); break;
      }
      const auto lifetime = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(life)));
      events.push_back({now, 1, events.size(), vm});
      events.push_back({now + lifetime, 0, events.size(), vm});
      ++now;
    }
  }
  std::sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
    if (a.time != b.time) return a.time < b.time;
    if (a.order != b.order) return a.order < b.order;
    return a.serial < b.serial;
  });

  SequenceBuilder builder(demands.empty() ? 2 : demands.front().size());
  for (const auto& e : events) {
    const std::string name = std::to_string(e.vm);
    if (e.order == 1) {
      builder.add_create(name, demands[e.vm], e.time);
    } else {
      builder.add_delete(name, e.time);
    }
  }
  return std::move(builder).finish();
}

}  // namespace vmsched
