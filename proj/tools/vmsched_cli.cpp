// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors
//
// Pipeline driver. Every stage reads and writes a working directory:
//
//   config.json            run configuration
//   trace.csv              canonical request trace
//   scenarios.json         scenario bounds and start offsets
//   store/                 policy sources and manifest
//   mining/S<k>.json       per-scenario population ledger
//   library.json           mined options
//   ledger.jsonl           code validity records
//   score_matrix.json      cross-scenario scores; retained.json
//   master.json            composed selector and option order
//   report.json            evaluation results; report.txt, plots/, logs/, hier/

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "vmsched/bench.hpp"
#include "vmsched/error.hpp"
#include "vmsched/heuristics.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;
using namespace vmsched;

namespace {

struct Workdir {
  fs::path root;

  fs::path config() const { return root / "config.json"; }
  fs::path trace() const { return root / "trace.csv"; }
  fs::path scenarios() const { return root / "scenarios.json"; }
  fs::path store() const { return root / "store"; }
  fs::path mining(std::size_t k) const { return root / "mining" / ("S" + std::to_string(k) + ".json"); }
  fs::path library() const { return root / "library.json"; }
  fs::path ledger() const { return root / "ledger.jsonl"; }
  fs::path matrix() const { return root / "score_matrix.json"; }
  fs::path retained() const { return root / "retained.json"; }
  fs::path master() const { return root / "master.json"; }
  fs::path report() const { return root / "report.json"; }
};

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::BackendUnavailable:
    case ErrorCode::BudgetExceeded:
    case ErrorCode::ExtractionFailed:
      return 3;
    case ErrorCode::IoError:
    case ErrorCode::BudgetExhausted:
      return 1;
    default:
      return 2;
  }
}

json load_json(const fs::path& p) {
  try {
    return json::parse(read_text(p));
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, p.string() + ": " + e.what());
  }
}

RunConfig load_config(const Workdir& wd, const std::map<std::string, std::string>& overrides) {
  json j = fs::exists(wd.config()) ? load_json(wd.config()) : json::object();
  for (const auto& [key, text] : overrides) {
    json value;
    try {
      value = json::parse(text);
    } catch (const json::exception&) {
      value = text;  // bare strings
    }
    j[key] = value;
  }
  RunConfig cfg = RunConfig::from_json(j);
  write_text(wd.config(), cfg.to_json().dump(2) + "\n");
  return cfg;
}

RequestSequence load_trace(const Workdir& wd) {
  ColumnMapping m = ColumnMapping::canonical();
  if (!fs::exists(wd.trace())) throw Error(ErrorCode::IoError, "no trace; run ingest first");
  return parse_trace(wd.trace(), m).sequence;
}

struct SplitFile {
  std::vector<Scenario> scenarios;
  std::vector<StartSplit> starts;
};

SplitFile load_split(const Workdir& wd) {
  if (!fs::exists(wd.scenarios())) throw Error(ErrorCode::IoError, "no scenarios; run split first");
  const json j = load_json(wd.scenarios());
  SplitFile s;
  s.scenarios = scenarios_from_json(j.at("scenarios"));
  for (const auto& st : j.at("starts")) {
    s.starts.push_back({st.at("train").get<std::vector<std::size_t>>(), st.at("test").get<std::size_t>()});
  }
  return s;
}

void append_ledger(const Workdir& wd, const std::vector<ValidationRecord>& records) {
  std::string text = fs::exists(wd.ledger()) ? read_text(wd.ledger()) : "";
  for (const auto& r : records) text += to_json(r).dump() + "\n";
  write_text(wd.ledger(), text);
}

std::vector<ValidationRecord> load_ledger(const Workdir& wd) {
  std::vector<ValidationRecord> out;
  if (!fs::exists(wd.ledger())) return out;
  std::istringstream in(read_text(wd.ledger()));
  for (std::string line; std::getline(in, line);) {
    if (!line.empty()) out.push_back(validation_record_from_json(json::parse(line)));
  }
  return out;
}

std::unique_ptr<Backend> make_backend(const RunConfig& cfg, const Workdir& wd, const std::string& tag,
                                      std::uint64_t salt) {
  if (cfg.backend == "mock") return std::make_unique<MockBackend>(Rng::mix(cfg.seed, salt));
  RemoteConfig rc = RemoteConfig::from_env();
  if (!cfg.model.empty()) rc.model = cfg.model;
  rc.transcript_dir = wd.root / "transcripts" / tag;
  return std::make_unique<RemoteBackend>(rc, make_http_transport());
}

// ---------------------------------------------------------------------------

RequestSequence synthetic_trace(std::size_t k, std::size_t creates, double lifetime, std::uint64_t seed) {
  // Rotating demand regimes so neighbouring scenarios differ.
  const std::vector<std::map<VmType, double>> regimes = {
      {{VmType::Small, 0.6}, {VmType::MediumSmall, 0.3}, {VmType::MediumMedium, 0.1}},
      {{VmType::MediumSmall, 0.5}, {VmType::MediumMedium, 0.3}, {VmType::Small, 0.2}},
      {{VmType::MediumMedium, 0.5}, {VmType::MediumLarge, 0.3}, {VmType::Small, 0.2}},
      {{VmType::MediumLarge, 0.5}, {VmType::Large, 0.2}, {VmType::MediumSmall, 0.3}},
      {{VmType::Large, 0.4}, {VmType::MediumLarge, 0.2}, {VmType::Small, 0.4}},
      {{VmType::Small, 0.3}, {VmType::MediumSmall, 0.3}, {VmType::MediumMedium, 0.2}, {VmType::Large, 0.2}},
  };
  MixtureSchedule ms;
  for (std::size_t i = 0; i < k; ++i) {
    ms.segments.push_back({regimes[i % regimes.size()], creates,
                           {LifetimeDist::Kind::Exponential, lifetime, 0.0}});
  }
  // Drop the trailing run of deletes so the last scenario still has creates.
  const auto full = synth_workload(ms, seed);
  std::size_t last = 0;
  for (std::size_t i = 0; i < full.requests.size(); ++i) {
    if (full.requests[i].op == Op::Create) last = i;
  }
  SequenceBuilder b(full.dims);
  for (std::size_t i = 0; i <= last; ++i) {
    const auto& r = full.requests[i];
    if (r.op == Op::Create) {
      b.add_create(full.name(r.vm), r.demand, r.time);
    } else {
      b.add_delete(full.name(r.vm), r.time, r.demand);
    }
  }
  return std::move(b).finish();
}

int cmd_ingest(const Workdir& wd, const std::map<std::string, std::string>& ov, const std::string& trace,
               ColumnMapping mapping, bool synthetic, std::size_t creates, double lifetime) {
  const RunConfig cfg = load_config(wd, ov);
  RequestSequence seq;
  std::size_t dropped = 0;
  if (synthetic) {
    seq = synthetic_trace(cfg.k, creates, lifetime, cfg.seed);
  } else {
    if (trace.empty()) throw Error(ErrorCode::InvalidConfig, "ingest needs --trace or --synthetic");
    auto report = parse_trace(trace, mapping);
    seq = std::move(report.sequence);
    dropped = report.unmatched_deletes;
  }
  write_trace(wd.trace(), seq);
  ordered_json out{{"requests", seq.requests.size()},
                   {"creates", seq.create_count()},
                   {"vms", seq.vm_count()},
                   {"dims", seq.dims},
                   {"unmatched_deletes", dropped}};
  std::cout << out.dump() << "\n";
  return 0;
}

int cmd_split(const Workdir& wd, const std::map<std::string, std::string>& ov) {
  const RunConfig cfg = load_config(wd, ov);
  const auto seq = load_trace(wd);
  const auto scenarios = equal_scenarios(seq, cfg.k);
  ordered_json starts = ordered_json::array();
  for (const auto& s : scenarios) {
    const auto st = split_train_test(s, SplitSpec{cfg.n_starts});
    starts.push_back({{"train", st.train}, {"test", st.test}});
  }
  ordered_json j{{"scenarios", to_json(scenarios)}, {"starts", starts}};
  write_text(wd.scenarios(), j.dump(2) + "\n");
  std::cout << j.dump() << "\n";
  return 0;
}

void rebuild_library(const Workdir& wd, const RunConfig& cfg, const SplitFile& split) {
  OptionLibrary lib;
  for (const auto& s : split.scenarios) {
    if (!fs::exists(wd.mining(s.index))) return;
    const json m = load_json(wd.mining(s.index));
    if (m.at("option").is_null()) return;
    ArtifactStore store(wd.store());
    OptionDef d;
    d.scenario = s.index;
    d.policy = *store.get(m.at("option").get<std::string>());
    d.tau_max = cfg.tau_max;
    d.term_mode = term_mode_from_string(cfg.term_mode);
    d.geometric_p = cfg.geometric_p;
    lib.options.push_back(std::move(d));
  }
  write_text(wd.library(), to_json(lib).dump(2) + "\n");
}

int cmd_mine(const Workdir& wd, const std::map<std::string, std::string>& ov, std::optional<std::size_t> only) {
  const RunConfig cfg = load_config(wd, ov);
  const auto seq = load_trace(wd);
  const auto split = load_split(wd);
  std::vector<Scenario> todo;
  for (const auto& s : split.scenarios) {
    if (!only || s.index == *only) todo.push_back(s);
  }
  if (todo.empty()) throw Error(ErrorCode::InvalidConfig, "no such scenario");
  ArtifactStore store(wd.store());
  const auto persist = [&](const ScenarioMining& r) {
    for (const auto& s : r.evolution.evaluated) store.put(s.artifact);
    ordered_json j;
    j["scenario"] = r.scenario.index;
    j["option"] = r.option ? ordered_json(r.option->policy.id) : ordered_json(nullptr);
    j["failure"] = r.failure ? ordered_json(*r.failure) : ordered_json(nullptr);
    j["evolution"] = to_json(r.evolution);
    write_text(wd.mining(r.scenario.index), j.dump(2) + "\n");
    append_ledger(wd, r.evolution.ledger);
    std::cout << ordered_json{{"scenario", r.scenario.index},
                              {"best_j", r.evolution.best_j.empty() ? 0.0 : r.evolution.best_j.back()},
                              {"samples", r.evolution.ledger.size()},
                              {"failure", j["failure"]}}
                     .dump()
              << "\n";
  };
  const BackendFactory factory = [&](std::size_t k) {
    return make_backend(cfg, wd, "S" + std::to_string(k), k);
  };
  try {
    mine_options(todo, cfg.cluster(), seq, factory, cfg.miner(), persist);
  } catch (const Error& e) {
    rebuild_library(wd, cfg, split);
    throw;
  }
  rebuild_library(wd, cfg, split);
  return 0;
}

int cmd_prune(const Workdir& wd, const std::map<std::string, std::string>& ov, const std::string& matrix_file) {
  if (!matrix_file.empty()) {
    PruneConfig pc;
    if (fs::exists(wd.config()) || !ov.empty()) pc = load_config(wd, ov).pruning();
    const auto m = score_matrix_from_json(load_json(matrix_file));
    auto kept = prune(m, pc);
    for (auto& k : kept) ++k;
    std::cout << ordered_json{{"retained", kept}}.dump() << "\n";
    return 0;
  }
  const RunConfig cfg = load_config(wd, ov);
  const auto seq = load_trace(wd);
  const auto split = load_split(wd);
  if (!fs::exists(wd.library())) throw Error(ErrorCode::PartialLibrary, "library incomplete; mine every scenario");
  const ArtifactStore store(wd.store());
  const auto lib = library_from_json(load_json(wd.library()), store);
  const auto m = build_score_matrix(lib, split.scenarios, cfg.cluster(), seq, cfg.miner());
  write_text(wd.matrix(), to_json(m).dump(2) + "\n");
  const auto kept = prune(m, cfg.pruning());
  write_text(wd.retained(), ordered_json{{"retained", kept}}.dump() + "\n");
  std::vector<std::size_t> one_based(kept);
  for (auto& k : one_based) ++k;
  std::cout << ordered_json{{"retained", one_based}}.dump() << "\n";
  return 0;
}

int cmd_compose(const Workdir& wd, const std::map<std::string, std::string>& ov) {
  const RunConfig cfg = load_config(wd, ov);
  const auto seq = load_trace(wd);
  const auto split = load_split(wd);
  ArtifactStore store(wd.store());
  const auto lib = library_from_json(load_json(wd.library()), store);
  if (!fs::exists(wd.retained())) throw Error(ErrorCode::InvalidConfig, "no retained set; run prune first");
  const auto kept = load_json(wd.retained()).at("retained").get<std::vector<std::size_t>>();
  auto backend = make_backend(cfg, wd, "composer", 0xc0);
  const auto result = learn_master(lib, kept, split.scenarios, cfg.cluster(), seq, *backend, cfg.composer());
  for (const auto& s : result.evolution.evaluated) store.put(s.artifact);
  append_ledger(wd, result.evolution.ledger);
  write_text(wd.master(), to_json(result.master).dump(2) + "\n");
  write_text(wd.root / "composition.json", to_json(result.evolution).dump(2) + "\n");
  std::cout << ordered_json{{"selector", result.master.selector.id},
                            {"best_j", result.evolution.best_j.back()},
                            {"samples", result.evolution.ledger.size()}}
                   .dump()
            << "\n";
  return 0;
}

int cmd_evaluate(const Workdir& wd, const std::map<std::string, std::string>& ov, bool hier) {
  const RunConfig cfg = load_config(wd, ov);
  const auto seq = load_trace(wd);
  const auto split = load_split(wd);
  const auto cluster = cfg.cluster();
  const ArtifactStore store(wd.store());

  std::vector<std::pair<std::string, PlacementPolicy>> algos = {
      {"First-Fit", first_fit_policy()},
      {"Best-Fit", best_fit_policy()},
      {"Hindsight", hindsight_policy(std::make_shared<HindsightTable>(HindsightTable::from_sequence(seq)))},
  };
  std::optional<OptionLibrary> lib;
  if (fs::exists(wd.library())) {
    lib = library_from_json(load_json(wd.library()), store);
    for (const auto& o : lib->options) {
      algos.emplace_back("Policy" + std::to_string(o.scenario), priority_policy(compile(o.policy)));
    }
  }
  std::optional<HierarchicalAgent> agent;
  if (hier) {
    if (!lib || !fs::exists(wd.master())) throw Error(ErrorCode::InvalidConfig, "--hier needs library and master");
    agent.emplace(master_from_json(load_json(wd.master()), store), *lib);
  }

  ReportBundle report;
  auto& table = report.table;
  for (const auto& [name, _] : algos) table.rows.push_back({name, {}});
  if (agent) table.rows.push_back({"MiCo", {}});
  const auto exec = cfg.exec();
  for (std::size_t i = 0; i < split.scenarios.size(); ++i) {
    const auto& s = split.scenarios[i];
    const std::size_t start = s.begin + split.starts[i].test;
    const std::string label = "S" + std::to_string(s.index);
    table.scenarios.push_back(label);
    const auto oracle = offline_bound(cluster, seq, start, s.end, cfg.oracle());
    if (oracle.optimal_length == 0) {
      throw Error(ErrorCode::ScenarioTooShort, label + " test window has no placeable create");
    }
    EpisodeOptions opts;
    opts.end = s.end;
    opts.record = true;
    std::size_t best_online = 0;
    for (std::size_t a = 0; a < algos.size(); ++a) {
      const auto r = run_episode(algos[a].second, cluster, seq, start, opts);
      table.rows[a].online.push_back(static_cast<double>(r.scheduled_length));
      best_online = std::max(best_online, r.scheduled_length);
      write_text(wd.root / "logs" / (algos[a].first + "-" + label + ".log"), format_replay_log(*r.trajectory));
    }
    if (agent) {
      const auto tr = agent->run(cluster, seq, start, exec, opts);
      table.rows.back().online.push_back(static_cast<double>(tr.result.scheduled_length));
      best_online = std::max(best_online, tr.result.scheduled_length);
      write_text(wd.root / "logs" / ("MiCo-" + label + ".log"), format_replay_log(*tr.result.trajectory));
      write_text(wd.root / "hier" / (label + ".tsv"), format_hier_trace(tr));
      std::size_t longest = 0;
      for (const auto& seg : tr.segments) longest = std::max(longest, seg.duration);
      report.hier.push_back({label, tr.segments.size(), tr.distinct_options(), longest});
    }
    // An unproven bound can fall below an online result; the online result
    // is then the better lower bound on the optimum.
    table.offline.push_back(static_cast<double>(std::max(oracle.optimal_length, best_online)));
    table.offline_proven.push_back(oracle.proven);
  }
  for (const auto& row : table.rows) report.box_data.emplace_back(row.name, row.online);
  const auto ledger = load_ledger(wd);
  if (!ledger.empty()) report.code_valid_ratio = code_valid_ratio(ledger);

  write_text(wd.report(), report.to_json().dump(2) + "\n");
  write_text(wd.root / "report.txt", format_table(table));
  std::string box = "algorithm\tmin\tq1\tmedian\tq3\tmax\n";
  for (const auto& [name, values] : report.box_data) {
    const auto b = box_stats(values);
    char line[256];
    std::snprintf(line, sizeof(line), "%s\t%g\t%g\t%g\t%g\t%g\n", name.c_str(), b.min, b.q1, b.median, b.q3, b.max);
    box += line;
  }
  write_text(wd.root / "plots" / "box.tsv", box);
  std::string bars = "algorithm";
  for (const auto& s : table.scenarios) bars += "\t" + s;
  bars += "\tMean\n";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    bars += table.rows[r].name;
    for (std::size_t c = 0; c < table.scenarios.size(); ++c) bars += "\t" + format_percent(table.ratio(r, c));
    bars += "\t" + format_percent(table.mean(r)) + "\n";
  }
  write_text(wd.root / "plots" / "bars.tsv", bars);
  std::cout << format_table(table);
  if (report.code_valid_ratio) std::cout << "code valid ratio: " << format_percent(*report.code_valid_ratio) << "%\n";
  return 0;
}

int cmd_oracle(const Workdir& wd, const std::map<std::string, std::string>& ov, const std::string& instance,
               std::uint64_t budget, bool allow_large) {
  const RunConfig cfg = load_config(wd, ov);
  const auto seq = parse_trace(instance, ColumnMapping::canonical()).sequence;
  OracleLimits limits = cfg.oracle();
  if (budget) limits.max_nodes = budget;
  limits.allow_large = allow_large;
  try {
    const auto r = offline_optimal(cfg.cluster(), seq, 0, Environment::npos, limits);
    std::cout << ordered_json{{"optimal_length", r.optimal_length}, {"nodes", r.nodes_explored}, {"proven", r.proven}}
                     .dump()
              << "\n";
  } catch (const BudgetExhaustedError& e) {
    std::cerr << ordered_json{{"error", "BudgetExhausted"},
                              {"message", e.what()},
                              {"best_found", e.best().optimal_length},
                              {"nodes", e.best().nodes_explored}}
                     .dump()
              << "\n";
    return 1;
  }
  return 0;
}

int cmd_replay(const Workdir& wd, const std::map<std::string, std::string>& ov, const std::string& log,
               std::size_t start, std::optional<std::size_t> end) {
  const RunConfig cfg = load_config(wd, ov);
  const auto seq = load_trace(wd);
  const auto records = parse_replay_log(read_text(log));
  const auto r = replay(cfg.cluster(), seq, start, records, end.value_or(Environment::npos));
  std::size_t logged = 0;
  for (const auto& rec : records) logged += static_cast<std::size_t>(rec.reward);
  if (r.scheduled_length != logged) {
    throw Error(ErrorCode::EpisodeAborted, "replayed length " + std::to_string(r.scheduled_length) +
                                               " differs from logged " + std::to_string(logged));
  }
  std::cout << ordered_json{{"scheduled_length", r.scheduled_length}, {"steps", r.steps}, {"identical", true}}.dump()
            << "\n";
  return 0;
}

int cmd_report(const Workdir& wd, const std::string& format) {
  const json j = load_json(wd.report());
  if (format == "json") {
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  const auto report = ReportBundle::from_json(j);
  std::cout << format_table(report.table);
  if (report.code_valid_ratio) std::cout << "code valid ratio: " << format_percent(*report.code_valid_ratio) << "%\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Option mining and composition for online VM placement"};
  app.require_subcommand(1);
  std::string workdir = "work";
  app.add_option("-w,--workdir", workdir, "Working directory")->capture_default_str();

  // Config flags mirror RunConfig keys; given values override config.json.
  std::map<std::string, std::string> overrides;
  const auto defaults = RunConfig{}.to_json();
  std::map<std::string, std::string> raw;
  for (const auto& [key, value] : defaults.items()) {
    std::string flag = "--" + key;
    std::replace(flag.begin(), flag.end(), '_', '-');
    app.add_option(flag, raw[key], "default " + value.dump())->group("Config");
  }

  auto* ingest = app.add_subcommand("ingest", "Parse a trace into the working directory");
  std::string trace_path;
  ColumnMapping mapping = ColumnMapping::canonical();
  bool synthetic = false, no_header = false;
  std::size_t creates = 1000;
  double lifetime = 400.0;
  std::string demand_cols;
  ingest->add_option("--trace", trace_path, "Delimited trace file");
  ingest->add_flag("--synthetic", synthetic, "Generate a k-regime synthetic trace instead");
  ingest->add_option("--creates", creates, "Creates per synthetic scenario")->capture_default_str();
  ingest->add_option("--lifetime", lifetime, "Mean synthetic VM lifetime")->capture_default_str();
  ingest->add_option("--delimiter", mapping.delimiter);
  ingest->add_flag("--no-header", no_header);
  ingest->add_option("--vm-col", mapping.vm_id);
  ingest->add_option("--demand-cols", demand_cols, "Comma-separated demand columns");
  ingest->add_option("--time-col", mapping.time);
  ingest->add_option("--op-col", mapping.op);
  ingest->add_option("--create-code", mapping.create_code);
  ingest->add_option("--delete-code", mapping.delete_code);
  ingest->add_flag("--skip-unmatched", mapping.skip_unmatched_deletes);

  auto* split = app.add_subcommand("split", "Cut scenarios and train/test starts");

  auto* mine = app.add_subcommand("mine", "Mine one option per scenario");
  std::size_t scenario = 0;
  bool all = false;
  auto* opt_scenario = mine->add_option("--scenario", scenario, "1-based scenario");
  auto* opt_all = mine->add_flag("--all", all, "Mine every scenario (default)");
  opt_scenario->excludes(opt_all);

  auto* prune_cmd = app.add_subcommand("prune", "Score options across scenarios and prune");
  std::string matrix_file;
  prune_cmd->add_option("--matrix", matrix_file, "Prune a given score matrix (JSON) instead");

  auto* compose = app.add_subcommand("compose", "Learn the master selector");

  auto* evaluate = app.add_subcommand("evaluate", "Evaluate baselines and options on test starts");
  bool hier = false;
  evaluate->add_flag("--hier", hier, "Include the hierarchical agent");

  auto* oracle = app.add_subcommand("oracle", "Exact offline optimum of a small instance");
  std::string instance;
  std::uint64_t budget = 0;
  bool allow_large = false;
  oracle->add_option("--instance", instance, "Trace file")->required();
  oracle->add_option("--budget", budget, "Node budget");
  oracle->add_flag("--allow-large", allow_large, "Lift the desk-scale guard");

  auto* replay_cmd = app.add_subcommand("replay", "Re-execute a logged episode");
  std::string log_file;
  std::size_t start = 0;
  std::optional<std::size_t> end;
  replay_cmd->add_option("--log", log_file)->required();
  replay_cmd->add_option("--start", start)->required();
  replay_cmd->add_option("--end", end);

  auto* report = app.add_subcommand("report", "Print the last evaluation");
  std::string format = "table";
  report->add_option("--format", format)->check(CLI::IsMember({"table", "json"}));

  CLI11_PARSE(app, argc, argv);
  for (const auto& [key, value] : raw) {
    if (!value.empty()) overrides[key] = value;
  }

  const Workdir wd{workdir};
  std::string stage;
  try {
    fs::create_directories(wd.root);
    if (*ingest) {
      stage = "ingest";
      mapping.has_header = !no_header;
      if (!demand_cols.empty()) {
        mapping.demand.clear();
        std::stringstream ss(demand_cols);
        for (std::string c; std::getline(ss, c, ',');) mapping.demand.push_back(c);
      }
      return cmd_ingest(wd, overrides, trace_path, mapping, synthetic, creates, lifetime);
    }
    if (*split) return stage = "split", cmd_split(wd, overrides);
    if (*mine) {
      stage = "mine";
      return cmd_mine(wd, overrides, *opt_scenario ? std::optional<std::size_t>(scenario) : std::nullopt);
    }
    if (*prune_cmd) return stage = "prune", cmd_prune(wd, overrides, matrix_file);
    if (*compose) return stage = "compose", cmd_compose(wd, overrides);
    if (*evaluate) return stage = "evaluate", cmd_evaluate(wd, overrides, hier);
    if (*oracle) return stage = "oracle", cmd_oracle(wd, overrides, instance, budget, allow_large);
    if (*replay_cmd) return stage = "replay", cmd_replay(wd, overrides, log_file, start, end);
    if (*report) return stage = "report", cmd_report(wd, format);
  } catch (const Error& e) {
    std::cerr << ordered_json{{"stage", stage}, {"error", to_string(e.code())}, {"message", e.what()}}.dump() << "\n";
    return exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << ordered_json{{"stage", stage}, {"error", "Internal"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 0;
}
