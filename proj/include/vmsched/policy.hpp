// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "vmsched/heuristics.hpp"
#include "vmsched/script.hpp"
#include "vmsched/trace.hpp"

namespace vmsched {

enum class PolicyKind { Priority, Selector };
enum class PolicyStatus { Uncompiled, Valid, Invalid };

std::string_view to_string(PolicyKind kind);
std::string_view to_string(PolicyStatus status);

/// Hex FNV-1a 64 of the source text.
std::string content_id(std::string_view source);

struct ScoreEntry {
  std::string context;
  double j = 0.0;
  friend bool operator==(const ScoreEntry&, const ScoreEntry&) = default;
};

/// Generated policy source plus its bookkeeping.
struct PolicyArtifact {
  PolicyKind kind = PolicyKind::Priority;
  std::string source;
  std::string id;
  PolicyStatus status = PolicyStatus::Uncompiled;
  std::string reason;  // set when Invalid
  std::vector<ScoreEntry> scores;

  static PolicyArtifact make(PolicyKind kind, std::string source);
};

/// Entry point conventionally named `priority...` or `heuristic_selector...`;
/// the last matching top-level definition wins, else the last definition.
std::string entry_function(const script::Program& program, PolicyKind kind);

/// A compiled artifact. Immutable; calls may run concurrently.
class CompiledPolicy {
 public:
  CompiledPolicy(PolicyKind kind, std::string id, script::Program program, std::string entry,
                 script::Limits limits);

  PolicyKind kind() const { return kind_; }
  const std::string& id() const { return id_; }
  const std::string& entry() const { return entry_; }
  const script::Program& program() const { return program_; }
  const script::Limits& limits() const { return limits_; }

 private:
  PolicyKind kind_;
  std::string id_;
  script::Program program_;
  std::string entry_;
  script::Limits limits_;
};

/// Throws ParseError or ForbiddenConstruct. Randomness is rejected in
/// selectors and allowed (call-local, reseeded per call) in priorities.
std::shared_ptr<const CompiledPolicy> compile(const PolicyArtifact& artifact,
                                              const script::Limits& limits = {});

/// Score of placing `item` into a bin with residual `bin`. Returns a finite
/// value or -infinity; NaN, +infinity and non-numbers raise OutOfRange.
double eval_priority(const CompiledPolicy& handle, std::span<const std::int64_t> bin,
                     std::span<const std::int64_t> item);

/// Type proportions over consecutive request groups, oldest first.
struct SelectorContext {
  std::vector<std::array<double, kAllVmTypes.size()>> groups;

  /// List of dicts keyed by the five type names.
  script::Value to_value() const;
  static SelectorContext uniform(std::size_t n_groups);
};

/// Option index in 1..n_options; anything else raises OutOfRange.
std::size_t eval_selector(const CompiledPolicy& handle, const SelectorContext& ctx,
                          std::size_t n_options);

PriorityFn priority_fn(std::shared_ptr<const CompiledPolicy> handle);
PlacementPolicy priority_policy(std::shared_ptr<const CompiledPolicy> handle);

struct ProbeSuite {
  std::vector<std::pair<Resources, Resources>> priority;  // (bin residual, item)
  std::vector<SelectorContext> selector;
  std::size_t n_options = 4;
};

/// Deterministic probes: zero demand, full bins, exact fits, overfull items,
/// single-type and uniform contexts, plus seeded random cases.
ProbeSuite default_probes(const Resources& capacity = {64, 256}, std::size_t n_options = 4,
                          std::size_t n_groups = 4, std::uint64_t seed = 0);

struct ValidityReport {
  bool compiled = false;
  std::size_t probes_passed = 0;
  std::size_t probes_total = 0;
  bool deterministic = true;
  bool in_range = true;
  bool valid = false;
  std::string reason;
};

/// Compiles and runs every probe twice; updates the artifact status.
ValidityReport validate(PolicyArtifact& artifact, const ProbeSuite& probes,
                        const script::Limits& limits = {});

/// One line of the code-validity ledger.
struct ValidationRecord {
  std::string id;
  PolicyKind kind = PolicyKind::Priority;
  bool valid = false;
  std::string reason;
};

/// Directory of `<id>.py` sources plus `manifest.jsonl` (sorted by id).
class ArtifactStore {
 public:
  explicit ArtifactStore(std::filesystem::path dir);

  const std::filesystem::path& dir() const { return dir_; }
  /// Inserts or replaces the artifact and rewrites the manifest.
  void put(const PolicyArtifact& artifact);
  std::optional<PolicyArtifact> get(std::string_view id) const;
  std::vector<std::string> ids() const;

 private:
  void load();
  void save() const;

  std::filesystem::path dir_;
  std::map<std::string, PolicyArtifact, std::less<>> entries_;
};

}  // namespace vmsched
