// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include "vmsched/bench.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "vmsched/error.hpp"

namespace vmsched {

using nlohmann::json;
using nlohmann::ordered_json;

void RunConfig::validate() const {
  if (n_pms == 0) throw Error(ErrorCode::InvalidConfig, "n_pms must be positive");
  if (pm_capacity.empty()) throw Error(ErrorCode::InvalidConfig, "pm_capacity must be non-empty");
  if (k == 0) throw Error(ErrorCode::InvalidConfig, "k must be positive");
  if (n_starts < 2) throw Error(ErrorCode::InvalidConfig, "n_starts must be at least 2");
  if (backend != "mock" && backend != "remote") {
    throw Error(ErrorCode::InvalidConfig, "backend must be mock or remote");
  }
  term_mode_from_string(term_mode);
  cluster().validate();
  miner().validate();
  composer().validate();
  pruning().validate();
}

ClusterSpec RunConfig::cluster() const { return ClusterSpec::homogeneous(n_pms, pm_capacity); }

MinerConfig RunConfig::miner() const {
  MinerConfig c;
  c.iterations = miner_iterations;
  c.top_m = top_m;
  c.n_s = n_s;
  c.candidates_per_iteration = candidates_per_iteration;
  c.sampler.temperature = temperature;
  c.sampler.token_budget = miner_tokens;
  c.sampler.model = model;
  c.sampler.retries = retries;
  c.seed = seed;
  c.split.n_starts = n_starts;
  c.workers = workers;
  c.tau_max = tau_max;
  c.term_mode = term_mode_from_string(term_mode);
  c.geometric_p = geometric_p;
  return c;
}

ExecConfig RunConfig::exec() const {
  ExecConfig c;
  c.tau_max = tau_max;
  c.term_mode = term_mode_from_string(term_mode);
  c.geometric_p = geometric_p;
  c.history = history;
  c.group_size = group_size;
  c.seed = seed;
  return c;
}

ComposerConfig RunConfig::composer() const {
  ComposerConfig c;
  c.iterations = composer_iterations;
  c.top_m = top_m;
  c.n_s = n_s;
  c.candidates_per_iteration = candidates_per_iteration;
  c.sampler.temperature = temperature;
  c.sampler.token_budget = composer_tokens;
  c.sampler.model = model;
  c.sampler.retries = retries;
  c.seed = seed;
  c.split.n_starts = n_starts;
  c.exec = exec();
  return c;
}

PruneConfig RunConfig::pruning() const { return {q1, q2, q3}; }

OracleLimits RunConfig::oracle() const {
  OracleLimits l;
  l.max_nodes = oracle_nodes;
  l.max_time = std::chrono::milliseconds(oracle_ms);
  return l;
}

ordered_json RunConfig::to_json() const {
  ordered_json j;
  j["n_pms"] = n_pms;
  j["pm_capacity"] = pm_capacity;
  j["temperature"] = temperature;
  j["top_m"] = top_m;
  j["tau_max"] = tau_max;
  j["term_mode"] = term_mode;
  j["geometric_p"] = geometric_p;
  j["k"] = k;
  j["n_s"] = n_s;
  j["n_starts"] = n_starts;
  j["miner_iterations"] = miner_iterations;
  j["composer_iterations"] = composer_iterations;
  j["candidates_per_iteration"] = candidates_per_iteration;
  j["history"] = history;
  j["group_size"] = group_size;
  j["miner_tokens"] = miner_tokens;
  j["composer_tokens"] = composer_tokens;
  j["q1"] = q1;
  j["q2"] = q2;
  j["q3"] = q3;
  j["seed"] = seed;
  j["backend"] = backend;
  j["model"] = model;
  j["retries"] = retries;
  j["workers"] = workers;
  j["oracle_nodes"] = oracle_nodes;
  j["oracle_ms"] = oracle_ms;
  return j;
}

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "config must be a JSON object");
  ordered_json merged = RunConfig{}.to_json();
  for (const auto& [key, value] : j.items()) {
    if (!merged.contains(key)) throw Error(ErrorCode::InvalidConfig, "unknown config key: " + key);
    merged[key] = value;
  }
  RunConfig c;
  try {
    c.n_pms = merged["n_pms"].get<std::size_t>();
    c.pm_capacity = merged["pm_capacity"].get<Resources>();
    c.temperature = merged["temperature"].get<double>();
    c.top_m = merged["top_m"].get<std::size_t>();
    c.tau_max = merged["tau_max"].get<std::size_t>();
    c.term_mode = merged["term_mode"].get<std::string>();
    c.geometric_p = merged["geometric_p"].get<double>();
    c.k = merged["k"].get<std::size_t>();
    c.n_s = merged["n_s"].get<std::size_t>();
    c.n_starts = merged["n_starts"].get<std::size_t>();
    c.miner_iterations = merged["miner_iterations"].get<std::size_t>();
    c.composer_iterations = merged["composer_iterations"].get<std::size_t>();
    c.candidates_per_iteration = merged["candidates_per_iteration"].get<std::size_t>();
    c.history = merged["history"].get<std::size_t>();
    c.group_size = merged["group_size"].get<std::size_t>();
    c.miner_tokens = merged["miner_tokens"].get<std::size_t>();
    c.composer_tokens = merged["composer_tokens"].get<std::size_t>();
    c.q1 = merged["q1"].get<double>();
    c.q2 = merged["q2"].get<double>();
    c.q3 = merged["q3"].get<double>();
    c.seed = merged["seed"].get<std::uint64_t>();
    c.backend = merged["backend"].get<std::string>();
    c.model = merged["model"].get<std::string>();
    c.retries = merged["retries"].get<std::size_t>();
    c.workers = merged["workers"].get<std::size_t>();
    c.oracle_nodes = merged["oracle_nodes"].get<std::uint64_t>();
    c.oracle_ms = merged["oracle_ms"].get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  c.validate();
  return c;
}

double code_valid_ratio(const std::vector<ValidationRecord>& ledger) {
  if (ledger.empty()) throw Error(ErrorCode::EmptyLedger, "no validation records");
  const auto valid = std::count_if(ledger.begin(), ledger.end(), [](const auto& r) { return r.valid; });
  return 100.0 * static_cast<double>(valid) / static_cast<double>(ledger.size());
}

double PerformanceTable::ratio(std::size_t row, std::size_t col) const {
  return performance_ratio(rows.at(row).online.at(col), offline.at(col));
}

double PerformanceTable::mean(std::size_t row) const {
  double on = 0.0, off = 0.0;
  for (std::size_t c = 0; c < offline.size(); ++c) {
    on += rows.at(row).online.at(c);
    off += offline[c];
  }
  return performance_ratio(on, off);
}

std::string format_table(const PerformanceTable& table) {
  std::size_t name_w = 9;
  for (const auto& r : table.rows) name_w = std::max(name_w, r.name.size());
  std::ostringstream out;
  auto cell = [&](const std::string& s) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), " %7s", s.c_str());
    out << buf;
  };
  out << std::string("Algorithm") << std::string(name_w - 9, ' ') << " |";
  for (const auto& s : table.scenarios) cell(s);
  cell("Mean");
  out << '\n' << std::string(name_w, '-') << "-+" << std::string(8 * (table.scenarios.size() + 1), '-') << '\n';
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    out << table.rows[r].name << std::string(name_w - table.rows[r].name.size(), ' ') << " |";
    for (std::size_t c = 0; c < table.scenarios.size(); ++c) cell(format_percent(table.ratio(r, c)) + "%");
    cell(format_percent(table.mean(r)) + "%");
    out << '\n';
  }
  bool all_proven = std::all_of(table.offline_proven.begin(), table.offline_proven.end(), [](bool b) { return b; });
  if (!all_proven) {
    out << "offline lengths marked unproven are best-found bounds:";
    for (std::size_t c = 0; c < table.scenarios.size(); ++c) {
      if (c < table.offline_proven.size() && !table.offline_proven[c]) out << ' ' << table.scenarios[c];
    }
    out << '\n';
  }
  return out.str();
}

BoxStats box_stats(std::vector<double> v) {
  if (v.empty()) throw Error(ErrorCode::InvalidConfig, "box statistics of an empty sample");
  std::sort(v.begin(), v.end());
  auto q = [&](double p) {
    const double pos = p * static_cast<double>(v.size() - 1);
    const auto lo = static_cast<std::size_t>(pos);
    const auto hi = std::min(lo + 1, v.size() - 1);
    return v[lo] + (v[hi] - v[lo]) * (pos - static_cast<double>(lo));
  };
  return {v.front(), q(0.25), q(0.5), q(0.75), v.back()};
}

ordered_json ReportBundle::to_json() const {
  ordered_json j;
  j["scenarios"] = table.scenarios;
  j["offline"] = table.offline;
  j["offline_proven"] = table.offline_proven;
  ordered_json rows = ordered_json::array();
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    ordered_json row;
    row["name"] = table.rows[r].name;
    row["online"] = table.rows[r].online;
    std::vector<double> ratios;
    for (std::size_t c = 0; c < table.scenarios.size(); ++c) ratios.push_back(table.ratio(r, c));
    row["ratio"] = ratios;
    row["mean"] = table.mean(r);
    rows.push_back(row);
  }
  j["rows"] = rows;
  j["code_valid_ratio"] = code_valid_ratio ? ordered_json(*code_valid_ratio) : ordered_json(nullptr);
  ordered_json box = ordered_json::array();
  for (const auto& [name, values] : box_data) {
    ordered_json b;
    b["name"] = name;
    b["values"] = values;
    if (!values.empty()) {
      const auto s = box_stats(values);
      b["stats"] = {{"min", s.min}, {"q1", s.q1}, {"median", s.median}, {"q3", s.q3}, {"max", s.max}};
    }
    box.push_back(b);
  }
  j["box"] = box;
  ordered_json hs = ordered_json::array();
  for (const auto& h : hier) {
    hs.push_back({{"scenario", h.scenario},
                  {"segments", h.segments},
                  {"distinct_options", h.distinct_options},
                  {"max_duration", h.max_duration}});
  }
  j["hier"] = hs;
  return j;
}

ReportBundle ReportBundle::from_json(const json& j) {
  ReportBundle b;
  try {
    b.table.scenarios = j.at("scenarios").get<std::vector<std::string>>();
    b.table.offline = j.at("offline").get<std::vector<double>>();
    b.table.offline_proven = j.at("offline_proven").get<std::vector<bool>>();
    for (const auto& row : j.at("rows")) {
      b.table.rows.push_back({row.at("name").get<std::string>(), row.at("online").get<std::vector<double>>()});
    }
    if (!j.at("code_valid_ratio").is_null()) b.code_valid_ratio = j.at("code_valid_ratio").get<double>();
    for (const auto& box : j.at("box")) {
      b.box_data.emplace_back(box.at("name").get<std::string>(), box.at("values").get<std::vector<double>>());
    }
    for (const auto& h : j.at("hier")) {
      b.hier.push_back({h.at("scenario").get<std::string>(), h.at("segments").get<std::size_t>(),
                        h.at("distinct_options").get<std::size_t>(), h.at("max_duration").get<std::size_t>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed report: ") + e.what());
  }
  return b;
}

// ---------------------------------------------------------------------------

ordered_json to_json(const ScoreMatrix& m) {
  ordered_json j;
  j["entries"] = m.entries;
  std::vector<double> best, mean;
  for (std::size_t c = 0; c < m.size(); ++c) {
    best.push_back(m.best(c));
    mean.push_back(m.mean(c));
  }
  j["best"] = best;
  j["mean"] = mean;
  return j;
}

ScoreMatrix score_matrix_from_json(const json& j) {
  ScoreMatrix m;
  try {
    m.entries = (j.is_array() ? j : j.at("entries")).get<std::vector<std::vector<double>>>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed score matrix: ") + e.what());
  }
  m.validate();
  return m;
}

ordered_json to_json(const std::vector<Scenario>& scenarios) {
  ordered_json arr = ordered_json::array();
  for (const auto& s : scenarios) arr.push_back({{"index", s.index}, {"begin", s.begin}, {"end", s.end}});
  return arr;
}

std::vector<Scenario> scenarios_from_json(const json& j) {
  std::vector<Scenario> out;
  try {
    for (const auto& s : j) {
      out.push_back({s.at("index").get<std::size_t>(), s.at("begin").get<std::size_t>(), s.at("end").get<std::size_t>()});
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed scenarios: ") + e.what());
  }
  return out;
}

ordered_json to_json(const ValidationRecord& r) {
  return {{"id", r.id}, {"kind", to_string(r.kind)}, {"valid", r.valid}, {"reason", r.reason}};
}

ValidationRecord validation_record_from_json(const json& j) {
  ValidationRecord r;
  r.id = j.at("id").get<std::string>();
  r.kind = j.at("kind").get<std::string>() == "selector" ? PolicyKind::Selector : PolicyKind::Priority;
  r.valid = j.at("valid").get<bool>();
  r.reason = j.value("reason", "");
  return r;
}

ordered_json to_json(const OptionLibrary& lib) {
  ordered_json arr = ordered_json::array();
  for (const auto& o : lib.options) {
    arr.push_back({{"scenario", o.scenario},
                   {"policy", o.policy.id},
                   {"tau_max", o.tau_max},
                   {"term_mode", to_string(o.term_mode)},
                   {"geometric_p", o.geometric_p}});
  }
  return {{"options", arr}};
}

namespace {

PolicyArtifact load_artifact(const ArtifactStore& store, const std::string& id) {
  auto a = store.get(id);
  if (!a) throw Error(ErrorCode::IoError, "artifact " + id + " missing from " + store.dir().string());
  return *a;
}

}  // namespace

OptionLibrary library_from_json(const json& j, const ArtifactStore& store) {
  OptionLibrary lib;
  try {
    for (const auto& o : j.at("options")) {
      OptionDef d;
      d.scenario = o.at("scenario").get<std::size_t>();
      d.policy = load_artifact(store, o.at("policy").get<std::string>());
      d.tau_max = o.at("tau_max").get<std::size_t>();
      d.term_mode = term_mode_from_string(o.at("term_mode").get<std::string>());
      d.geometric_p = o.at("geometric_p").get<double>();
      lib.options.push_back(std::move(d));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed library: ") + e.what());
  }
  return lib;
}

ordered_json to_json(const MasterPolicy& m) {
  return {{"selector", m.selector.id},
          {"option_order", m.option_order},
          {"history", m.history},
          {"group_size", m.group_size}};
}

MasterPolicy master_from_json(const json& j, const ArtifactStore& store) {
  MasterPolicy m;
  try {
    m.selector = load_artifact(store, j.at("selector").get<std::string>());
    m.option_order = j.at("option_order").get<std::vector<std::size_t>>();
    m.history = j.at("history").get<std::size_t>();
    m.group_size = j.at("group_size").get<std::size_t>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("malformed master: ") + e.what());
  }
  return m;
}

ordered_json to_json(const EvolutionResult& e) {
  ordered_json j;
  j["best_j"] = e.best_j;
  ordered_json pop = ordered_json::array();
  for (const auto& s : e.evaluated) pop.push_back({{"id", s.artifact.id}, {"j", s.j}, {"seen", s.seen}});
  j["evaluated"] = pop;
  ordered_json kept = ordered_json::array();
  for (const auto& s : e.retained) kept.push_back({{"id", s.artifact.id}, {"j", s.j}});
  j["retained"] = kept;
  ordered_json ledger = ordered_json::array();
  for (const auto& r : e.ledger) ledger.push_back(to_json(r));
  j["ledger"] = ledger;
  j["halted"] = e.halted ? ordered_json(*e.halted) : ordered_json(nullptr);
  return j;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out << text;
}

}  // namespace vmsched
