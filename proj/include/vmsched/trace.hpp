// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace vmsched {

/// Per-dimension resource amounts (CPU, memory, ...).
using Resources = std::vector<std::int64_t>;

/// Dense index of a VM inside its RequestSequence; the original identifier
/// lives in RequestSequence::names.
struct VmId {
  std::uint32_t value = 0;
  friend bool operator==(VmId, VmId) = default;
  friend auto operator<=>(VmId, VmId) = default;
};

enum class Op : std::uint8_t { Create, Delete };

struct Request {
  VmId vm;
  Resources demand;
  Op op = Op::Create;
  std::int64_t time = 0;
};

/// An ordered, validated stream of VM events. Deletes always follow their
/// matching Create and carry the same demand.
struct RequestSequence {
  std::size_t dims = 2;
  std::vector<Request> requests;
  std::vector<std::string> names;

  std::size_t horizon() const { return requests.size(); }
  bool empty() const { return requests.empty(); }
  const std::string& name(VmId id) const { return names.at(id.value); }
  std::size_t vm_count() const { return names.size(); }
  std::size_t create_count() const;
};

/// Incrementally builds a RequestSequence, interning ids and enforcing the
/// create/delete pairing rules.
class SequenceBuilder {
 public:
  explicit SequenceBuilder(std::size_t dims = 2) { seq_.dims = dims; }

  /// `line` is only used for error messages (0 = unknown).
  void add_create(std::string_view vm, Resources demand, std::int64_t time, std::size_t line = 0);
  /// A missing demand inherits the matching Create's demand.
  void add_delete(std::string_view vm, std::int64_t time,
                  std::optional<Resources> demand = std::nullopt, std::size_t line = 0);

  /// Number of deletes dropped because their VM was never created
  /// (only populated when the builder tolerates unmatched deletes).
  std::size_t unmatched_deletes() const { return unmatched_; }
  void set_tolerate_unmatched(bool on) { tolerate_unmatched_ = on; }

  RequestSequence finish() &&;

 private:
  VmId intern(std::string_view vm);
  void check_time(std::int64_t time, std::size_t line);

  RequestSequence seq_;
  std::unordered_map<std::string, VmId> ids_;
  std::vector<bool> live_;
  std::vector<Resources> demand_of_;
  std::size_t unmatched_ = 0;
  bool tolerate_unmatched_ = false;
};

// ---------------------------------------------------------------------------
// Ingestion

/// Column mapping for delimited trace files. Columns can be addressed by
/// zero-based index or, when the file has a header row, by name.
struct ColumnMapping {
  char delimiter = ',';
  bool has_header = true;
  std::string vm_id = "vm_id";
  std::vector<std::string> demand = {"cpu", "memory"};
  std::string time = "time";
  std::string op = "type";
  std::string create_code = "1";
  std::string delete_code = "0";
  /// When set, deletes for never-created VMs are dropped and counted instead
  /// of failing the whole parse.
  bool skip_unmatched_deletes = false;

  static ColumnMapping canonical() { return {}; }
};

struct ParseReport {
  RequestSequence sequence;
  std::size_t unmatched_deletes = 0;
};

ParseReport parse_trace(const std::filesystem::path& path, const ColumnMapping& mapping);
ParseReport parse_trace_text(std::string_view text, const ColumnMapping& mapping);

/// Canonical text form: header `vm_id,cpu,memory,time,type` (for d=2;
/// `vm_id,r0,...,time,type` otherwise), type 1=create, 0=delete.
std::string serialize_trace(const RequestSequence& seq);
void write_trace(const std::filesystem::path& path, const RequestSequence& seq);

// ---------------------------------------------------------------------------
// VM types

enum class VmType : std::uint8_t { Small, MediumSmall, MediumMedium, MediumLarge, Large };

inline constexpr std::array<VmType, 5> kAllVmTypes = {
    VmType::Small, VmType::MediumSmall, VmType::MediumMedium, VmType::MediumLarge,
    VmType::Large};

/// Lower-case key used in selector contexts ("small", "medium_small", ...).
std::string_view vm_type_key(VmType t);
std::optional<VmType> vm_type_from_key(std::string_view key);

/// Two cut points per dimension split each axis into bands 0/1/2
/// (x <= lo, lo < x <= hi, x > hi). The 3x3 band-pair table maps
/// (cpu band, mem band) to a VmType.
struct ThresholdTable {
  std::array<std::int64_t, 2> cpu_cuts = {2, 8};
  std::array<std::int64_t, 2> mem_cuts = {4, 16};
  std::array<std::array<VmType, 3>, 3> band_table = {{
      {VmType::Small, VmType::MediumSmall, VmType::MediumLarge},
      {VmType::MediumSmall, VmType::MediumMedium, VmType::MediumLarge},
      {VmType::MediumLarge, VmType::MediumLarge, VmType::Large},
  }};

  void validate() const;
};

VmType classify_vm(const Resources& demand, const ThresholdTable& thresholds);

// ---------------------------------------------------------------------------
// Scenarios

/// Contiguous request range [begin, end) of a sequence; `index` is 1-based.
struct Scenario {
  std::size_t index = 1;
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const { return end - begin; }
  friend bool operator==(const Scenario&, const Scenario&) = default;
};

enum class WindowKind { RequestCount, TimeUnits };

struct Window {
  WindowKind kind = WindowKind::RequestCount;
  std::int64_t length = 1;
};

/// Count windows: K = ceil(T/W) slices. Time windows bucket by
/// (time - t0) / W; buckets without requests are skipped.
std::vector<Scenario> generate_scenarios(const RequestSequence& seq, Window window);

/// K equal request-count slices (W = ceil(T/K)).
std::vector<Scenario> equal_scenarios(const RequestSequence& seq, std::size_t k);

struct ClusterOptions {
  /// 0 = choose the cut at the largest gap in merge heights.
  std::size_t n_clusters = 0;
  std::uint64_t seed = 0;
};

struct ClusterResult {
  /// One representative slice per cluster, ordered by position.
  std::vector<Scenario> scenarios;
  /// cluster id (0-based, ordered by first member) for each trace.
  std::vector<std::size_t> membership;
};

/// Traces are the `rows` equal slices of `seq`; scores[i][j] is the score of
/// the policy learned on trace i evaluated on trace j. Average-linkage
/// agglomerative clustering over Euclidean row distance; each cluster is
/// represented by its medoid trace.
ClusterResult cluster_scenarios(const RequestSequence& seq,
                                const std::vector<std::vector<double>>& scores,
                                const ClusterOptions& options = {});

struct SplitSpec {
  std::size_t n_starts = 6;
};

/// Offsets are relative to the scenario begin.
struct StartSplit {
  std::vector<std::size_t> train;
  std::size_t test = 0;
};

StartSplit split_train_test(const Scenario& scenario, const SplitSpec& spec = {});

// ---------------------------------------------------------------------------
// Synthetic workloads

struct LifetimeDist {
  enum class Kind { Fixed, Uniform, Exponential } kind = Kind::Uniform;
  double a = 10.0;  // Fixed: value, Uniform: lo, Exponential: mean
  double b = 50.0;  // Uniform: hi
};

struct MixtureSegment {
  std::map<VmType, double> mixture;
  std::size_t creates = 0;
  LifetimeDist lifetime;
};

struct MixtureSchedule {
  std::vector<MixtureSegment> segments;
  /// Candidate demands for each type; one is drawn uniformly per create.
  std::map<VmType, std::vector<Resources>> demands = default_demands();

  static std::map<VmType, std::vector<Resources>> default_demands();
};

/// Creates arrive one per time unit; each VM departs `lifetime` units after
/// arrival. Deletes precede creates at equal timestamps.
RequestSequence synth_workload(const MixtureSchedule& spec, std::uint64_t seed);

}  // namespace vmsched
