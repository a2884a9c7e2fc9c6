// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include "vmsched/policy.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "vmsched/error.hpp"
#include "vmsched/rng.hpp"

namespace vmsched {

using script::Value;

std::string_view to_string(PolicyKind kind) {
  return kind == PolicyKind::Priority ? "priority" : "selector";
}

std::string_view to_string(PolicyStatus status) {
  switch (status) {
    case PolicyStatus::Uncompiled: return "uncompiled";
    case PolicyStatus::Valid: return "valid";
    case PolicyStatus::Invalid: return "invalid";
  }
  return "uncompiled";
}

std::string content_id(std::string_view source) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : source) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

PolicyArtifact PolicyArtifact::make(PolicyKind kind, std::string source) {
  PolicyArtifact a;
  a.kind = kind;
  a.id = content_id(source);
  a.source = std::move(source);
  return a;
}

std::string entry_function(const script::Program& program, PolicyKind kind) {
  const std::string prefix = kind == PolicyKind::Priority ? "priority" : "heuristic_selector";
  const auto& fns = program.functions();
  if (fns.empty()) throw Error(ErrorCode::ParseError, "0:0: no top-level function definition");
  for (auto it = fns.rbegin(); it != fns.rend(); ++it) {
    if (it->rfind(prefix, 0) == 0) return *it;
  }
  return fns.back();
}

CompiledPolicy::CompiledPolicy(PolicyKind kind, std::string id, script::Program program,
                               std::string entry, script::Limits limits)
    : kind_(kind),
      id_(std::move(id)),
      program_(std::move(program)),
      entry_(std::move(entry)),
      limits_(limits) {}

std::shared_ptr<const CompiledPolicy> compile(const PolicyArtifact& artifact, const script::Limits& limits) {
  if (artifact.source.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw Error(ErrorCode::ParseError, "0:0: empty source");
  }
  script::CompileOptions opts;
  opts.allow_random = artifact.kind == PolicyKind::Priority;
  auto program = script::compile(artifact.source, opts);
  auto entry = entry_function(program, artifact.kind);
  const std::string id = artifact.id.empty() ? content_id(artifact.source) : artifact.id;
  return std::make_shared<const CompiledPolicy>(artifact.kind, id, std::move(program), std::move(entry), limits);
}

namespace {

Value int_tuple(std::span<const std::int64_t> xs) {
  std::vector<Value> items;
  items.reserve(xs.size());
  for (auto x : xs) items.emplace_back(x);
  return Value::tuple(std::move(items));
}

void require_kind(const CompiledPolicy& h, PolicyKind kind) {
  if (h.kind() != kind) {
    throw Error(ErrorCode::InvalidConfig, "policy " + h.id() + " is a " + std::string(to_string(h.kind())) +
                                              ", expected " + std::string(to_string(kind)));
  }
}

}  // namespace

double eval_priority(const CompiledPolicy& handle, std::span<const std::int64_t> bin,
                     std::span<const std::int64_t> item) {
  require_kind(handle, PolicyKind::Priority);
  if (bin.size() != item.size()) {
    throw Error(ErrorCode::DimensionMismatch, "bin has " + std::to_string(bin.size()) + " dimensions, item " +
                                                  std::to_string(item.size()));
  }
  const Value out = script::call(handle.program(), handle.entry(), {int_tuple(bin), int_tuple(item)},
                                 handle.limits());
  if (!out.is_number()) throw Error(ErrorCode::OutOfRange, "priority returned " + out.type_name());
  const double score = out.to_double();
  if (std::isnan(score)) throw Error(ErrorCode::OutOfRange, "priority returned nan");
  if (score == INFINITY) throw Error(ErrorCode::OutOfRange, "priority returned inf");
  return score;
}

Value SelectorContext::to_value() const {
  std::vector<Value> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    std::vector<std::pair<Value, Value>> items;
    for (std::size_t t = 0; t < kAllVmTypes.size(); ++t) {
      items.emplace_back(Value(std::string(vm_type_key(kAllVmTypes[t]))), Value(g[t]));
    }
    out.push_back(Value::dict(std::move(items)));
  }
  return Value::list(std::move(out));
}

SelectorContext SelectorContext::uniform(std::size_t n_groups) {
  SelectorContext ctx;
  std::array<double, kAllVmTypes.size()> u{};
  u.fill(1.0 / static_cast<double>(kAllVmTypes.size()));
  ctx.groups.assign(n_groups, u);
  return ctx;
}

std::size_t eval_selector(const CompiledPolicy& handle, const SelectorContext& ctx, std::size_t n_options) {
  require_kind(handle, PolicyKind::Selector);
  const Value out = script::call(handle.program(), handle.entry(), {ctx.to_value()}, handle.limits());
  if (out.type() != Value::Type::Int) {
    throw Error(ErrorCode::OutOfRange, "selector returned " + out.repr() + " (" + out.type_name() + ")");
  }
  const std::int64_t k = out.as_int();
  if (k < 1 || k > static_cast<std::int64_t>(n_options)) {
    throw Error(ErrorCode::OutOfRange,
                "selector returned " + std::to_string(k) + ", expected 1.." + std::to_string(n_options));
  }
  return static_cast<std::size_t>(k);
}

PriorityFn priority_fn(std::shared_ptr<const CompiledPolicy> handle) {
  return [h = std::move(handle)](std::span<const std::int64_t> bin, std::span<const std::int64_t> item) {
    return eval_priority(*h, bin, item);
  };
}

PlacementPolicy priority_policy(std::shared_ptr<const CompiledPolicy> handle) {
  return scored_policy(priority_fn(std::move(handle)));
}

ProbeSuite default_probes(const Resources& capacity, std::size_t n_options, std::size_t n_groups,
                          std::uint64_t seed) {
  ProbeSuite suite;
  suite.n_options = n_options;
  const std::size_t d = capacity.size();
  Resources zero(d, 0);
  Resources unit(d, 1);
  Resources half(d), quarter(d), over(d);
  for (std::size_t j = 0; j < d; ++j) {
    half[j] = capacity[j] / 2;
    quarter[j] = std::max<std::int64_t>(1, capacity[j] / 4);
    over[j] = capacity[j] + 1;
  }
  auto& p = suite.priority;
  p.emplace_back(capacity, zero);   // zero demand into an empty bin
  p.emplace_back(zero, unit);       // full bin
  p.emplace_back(capacity, unit);   // empty bin
  p.emplace_back(half, half);       // exact fit
  p.emplace_back(quarter, half);    // overfull
  p.emplace_back(capacity, over);   // larger than any bin
  p.emplace_back(half, quarter);
  Rng rng(Rng::mix(seed, 0x9b0be5));
  for (int i = 0; i < 8; ++i) {
    Resources bin(d), item(d);
    for (std::size_t j = 0; j < d; ++j) {
      bin[j] = 1 + static_cast<std::int64_t>(rng.index(static_cast<std::size_t>(capacity[j])));
      item[j] = 1 + static_cast<std::int64_t>(rng.index(static_cast<std::size_t>(std::max<std::int64_t>(1, capacity[j] / 2))));
    }
    p.emplace_back(std::move(bin), std::move(item));
  }

  auto& s = suite.selector;
  s.push_back(SelectorContext::uniform(n_groups));
  for (std::size_t t = 0; t < kAllVmTypes.size(); ++t) {
    SelectorContext ctx;
    std::array<double, kAllVmTypes.size()> g{};
    g[t] = 1.0;
    ctx.groups.assign(n_groups, g);
    s.push_back(std::move(ctx));
  }
  for (int i = 0; i < 6; ++i) {
    SelectorContext ctx;
    for (std::size_t k = 0; k < n_groups; ++k) {
      std::array<double, kAllVmTypes.size()> g{};
      double total = 0;
      for (auto& x : g) {
        x = rng.uniform() + 1e-3;
        total += x;
      }
      for (auto& x : g) x /= total;
      ctx.groups.push_back(g);
    }
    s.push_back(std::move(ctx));
  }
  return suite;
}

ValidityReport validate(PolicyArtifact& artifact, const ProbeSuite& probes, const script::Limits& limits) {
  ValidityReport report;
  auto finish = [&](std::string reason) {
    report.valid = report.compiled && report.deterministic && report.in_range &&
                   report.probes_passed == report.probes_total && report.probes_total > 0;
    if (!report.valid && reason.empty()) reason = "probe failures";
    report.reason = report.valid ? "" : std::move(reason);
    artifact.status = report.valid ? PolicyStatus::Valid : PolicyStatus::Invalid;
    artifact.reason = report.reason;
    return report;
  };
  if (artifact.id.empty()) artifact.id = content_id(artifact.source);

  std::shared_ptr<const CompiledPolicy> handle;
  try {
    handle = compile(artifact, limits);
    report.compiled = true;
  } catch (const Error& e) {
    report.probes_total = artifact.kind == PolicyKind::Priority ? probes.priority.size() : probes.selector.size();
    return finish(std::string("compile: ") + e.what());
  }

  std::string first_failure;
  auto note = [&](std::size_t i, const std::string& what) {
    if (first_failure.empty()) first_failure = "probe " + std::to_string(i) + ": " + what;
  };
  if (artifact.kind == PolicyKind::Priority) {
    report.probes_total = probes.priority.size();
    for (std::size_t i = 0; i < probes.priority.size(); ++i) {
      const auto& [bin, item] = probes.priority[i];
      try {
        const double a = eval_priority(*handle, bin, item);
        const double b = eval_priority(*handle, bin, item);
        if (a != b) {
          report.deterministic = false;
          note(i, "nondeterministic");
          continue;
        }
        ++report.probes_passed;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::OutOfRange) report.in_range = false;
        note(i, e.what());
      }
    }
  } else {
    report.probes_total = probes.selector.size();
    for (std::size_t i = 0; i < probes.selector.size(); ++i) {
      try {
        const auto a = eval_selector(*handle, probes.selector[i], probes.n_options);
        const auto b = eval_selector(*handle, probes.selector[i], probes.n_options);
        if (a != b) {
          report.deterministic = false;
          note(i, "nondeterministic");
          continue;
        }
        ++report.probes_passed;
      } catch (const Error& e) {
        if (e.code() == ErrorCode::OutOfRange) report.in_range = false;
        note(i, e.what());
      }
    }
  }
  return finish(first_failure);
}

// ---------------------------------------------------------------------------
// Artifact store

namespace {

nlohmann::ordered_json to_json(const PolicyArtifact& a) {
  nlohmann::ordered_json j;
  j["id"] = a.id;
  j["kind"] = to_string(a.kind);
  j["status"] = to_string(a.status);
  if (!a.reason.empty()) j["reason"] = a.reason;
  auto scores = nlohmann::ordered_json::array();
  for (const auto& s : a.scores) scores.push_back({{"context", s.context}, {"j", s.j}});
  j["scores"] = std::move(scores);
  return j;
}

PolicyStatus status_from(const std::string& s) {
  if (s == "valid") return PolicyStatus::Valid;
  if (s == "invalid") return PolicyStatus::Invalid;
  return PolicyStatus::Uncompiled;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

ArtifactStore::ArtifactStore(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::error_code ec;
  std::filesystem::create_directories(dir_, ec);
  if (ec) throw Error(ErrorCode::IoError, "cannot create " + dir_.string() + ": " + ec.message());
  load();
}

void ArtifactStore::load() {
  const auto manifest = dir_ / "manifest.jsonl";
  if (!std::filesystem::exists(manifest)) return;
  std::istringstream lines(read_file(manifest));
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::IoError, "corrupt manifest line: " + std::string(e.what()));
    }
    PolicyArtifact a;
    a.id = j.at("id").get<std::string>();
    a.kind = j.at("kind").get<std::string>() == "selector" ? PolicyKind::Selector : PolicyKind::Priority;
    a.status = status_from(j.at("status").get<std::string>());
    a.reason = j.value("reason", "");
    for (const auto& s : j.at("scores")) a.scores.push_back({s.at("context").get<std::string>(), s.at("j").get<double>()});
    a.source = read_file(dir_ / (a.id + ".py"));
    entries_[a.id] = std::move(a);
  }
}

void ArtifactStore::save() const {
  const auto tmp = dir_ / "manifest.jsonl.tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + tmp.string());
    for (const auto& [id, a] : entries_) out << to_json(a).dump() << '\n';
  }
  std::filesystem::rename(tmp, dir_ / "manifest.jsonl");
}

void ArtifactStore::put(const PolicyArtifact& artifact) {
  PolicyArtifact a = artifact;
  if (a.id.empty()) a.id = content_id(a.source);
  const auto path = dir_ / (a.id + ".py");
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out << a.source;
  }
  entries_[a.id] = std::move(a);
  save();
}

std::optional<PolicyArtifact> ArtifactStore::get(std::string_view id) const {
  auto it = entries_.find(id);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> ArtifactStore::ids() const {
  std::vector<std::string> out;
  for (const auto& [id, a] : entries_) out.push_back(id);
  return out;
}

}  // namespace vmsched
