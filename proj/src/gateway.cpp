// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include "vmsched/gateway.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <regex>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "vmsched/error.hpp"
#include "vmsched/rng.hpp"

namespace vmsched {

namespace {

constexpr const char* kTypeKeys[] = {"small", "medium_small", "medium_medium", "medium_large", "large"};

std::string join_options(std::size_t n, const char* sep) {
  std::string out;
  for (std::size_t i = 1; i <= n; ++i) {
    if (i > 1) out += sep;
    out += std::to_string(i);
  }
  return out;
}

std::string fmt_number(double x) {
  x = std::round(x * 1000.0) / 1000.0;
  if (x == 0.0) x = 0.0;  // drop negative zero
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), x);
  std::string s(buf, ptr);
  if (s.find_first_of(".e") == std::string::npos) s += ".0";
  return s;
}

std::string trim_trailing(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == ' ' || s.back() == '\r' || s.back() == '\t')) s.pop_back();
  return s;
}

// Renames the entry function of an exemplar so exemplars read as a version
// sequence.
std::string relabel(const PolicyArtifact& a, const std::string& label) {
  std::string entry;
  try {
    entry = entry_function(script::compile(a.source, {a.kind == PolicyKind::Priority}), a.kind);
  } catch (const Error&) {
    return trim_trailing(a.source);
  }
  if (entry == label) return trim_trailing(a.source);
  const std::regex word("\\b" + entry + "\\b");
  return trim_trailing(std::regex_replace(a.source, word, label));
}

std::string common_dialect() {
  return "Policies run in a sandboxed subset of Python 3. Available: def (including nested functions and "
         "default arguments), lambda, if/elif/else, for and while loops, try/except, list and dict literals and "
         "comprehensions, tuple unpacking, slicing, and the builtins abs, min, max, sum, len, range, enumerate, "
         "zip, sorted, reversed, round, int, float, bool, str, list, tuple, dict, any, all, pow, divmod, map, "
         "filter and isinstance. `import math` and `import numpy as np` are available; numpy provides array, "
         "sum, mean, std, var, median, max, min, argmax, argmin, abs, sqrt, exp, log, square, clip, dot, "
         "maximum, minimum, zeros and ones over one-dimensional data. Classes, files, network access, clocks "
         "and other modules are unavailable, and every call runs under an instruction budget.";
}

std::string code_block(const std::vector<std::string>& parts) {
  std::string out = "```python\n";
  for (const auto& p : parts) out += p + "\n";
  return out + "```";
}

}  // namespace

const std::string& seed_priority_source() {
  static const std::string src =
      "def priority_v0(bin, item):\n"
      "    \"\"\" Calculate and return the priority score for adding a specific item to a bin based on available "
      "CPU and MEM resources.\n"
      "    Args:\n"
      "        bin (tuple): Tuple representing the bin's available resources, where bin[0] is CPU and bin[1] is "
      "memory.\n"
      "        item (tuple): Tuple representing the item's resource requirements, where item[0] is CPU and "
      "item[1] is memory needed.\n"
      "    Returns:\n"
      "        int: The total score for placing the item in the current bin. A higher score indicates a better "
      "fit based on current available resources. \"\"\"\n"
      "    score = -(bin[0] - item[0])\n"
      "    return score\n";
  return src;
}

std::string seed_selector_source(std::size_t n_options, const ContextLayout& layout) {
  const std::size_t groups = layout.group_size ? layout.history / layout.group_size : 0;
  std::string src =
      "def heuristic_selector_v0(condition):\n"
      "    \"\"\" This function selects the appropriate heuristic scheduling function based on the input "
      "condition.param condition: list of dicts, each representing the distribution of request types over the "
      "past " +
      std::to_string(layout.history) + " requests, divided into " + std::to_string(groups) + " groups of " +
      std::to_string(layout.group_size) +
      " requests each.Each dictionary contains keys \"small\", \"medium_small\", \"medium_medium\", "
      "\"medium_large\", and \"large\"  with their respective proportions.Example:\n";
  const std::string example =
      "{\"small\": 0.4, \"medium_small\": 0.3, \"medium_medium\": 0.1, \"medium_large\": 0.1, \"large\": 0.1}";
  for (std::size_t g = 0; g < groups; ++g) {
    src += "    ";
    if (g == 0) src += "[";
    src += example;
    src += g + 1 == groups ? "]\n" : ",\n";
  }
  src += "    :return: int, index of the selected heuristic function (only " + join_options(n_options, ",") +
         ")\"\"\"\n"
         "    return 1\n";
  return src;
}

const std::string& seed_selector_source() {
  static const std::string src = seed_selector_source(4, ContextLayout{});
  return src;
}

PromptBundle render_miner_prompt(const std::vector<PolicyArtifact>& top_m) {
  if (top_m.empty()) throw Error(ErrorCode::EmptyExemplars, "miner prompt needs at least one exemplar");
  PromptBundle b;
  b.kind = PolicyKind::Priority;
  b.role_des = common_dialect() +
               " `import random` is also available. The function receives bin (the bin's remaining resources) "
               "and item (the item's demand) as tuples of integers with one entry per resource and must return "
               "a number; returning float('-inf') refuses the bin.";
  const std::size_t m = top_m.size();
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& a = top_m[m - 1 - i];  // worst first
    b.exemplars.push_back(top_m[i].source);
    b.labels.push_back("priority_v" + std::to_string(i));
    parts.push_back(relabel(a, b.labels.back()));
  }
  parts.push_back("def priority_v" + std::to_string(m) + "(bin, item):\n    \"\"\"Improved version of `priority_v" +
                  std::to_string(m - 1) + "`.\"\"\"");
  b.task_des =
      "Given the existing priority_v0 function, please generate an optimized version named priority_v*. This new "
      "version should be more complex and efficient, incorporating multiple conditional logic and loops as "
      "necessary. The function should calculate priorities for items to be added to bins, considering the item "
      "size and bin capacities. Ensure the function is significantly different and more advanced than the prior "
      "versions. Only the Python code for the function is required, without any additional descriptions or "
      "annotations. Existing priority_v0 function for reference:\n\n" +
      code_block(parts) +
      "\n\nYour task is to create the optimized priority_v* function based on the guidelines above. Remember, "
      "only the Python function code is needed.";
  b.rendered = b.role_des + "\n\n" + b.task_des + "\n";
  return b;
}

PromptBundle render_composer_prompt(const std::vector<PolicyArtifact>& top_m, std::size_t n_options,
                                    const ContextLayout& layout) {
  if (top_m.empty()) throw Error(ErrorCode::EmptyExemplars, "composer prompt needs at least one exemplar");
  if (n_options == 0) throw Error(ErrorCode::InvalidConfig, "n_options must be positive");
  PromptBundle b;
  b.kind = PolicyKind::Selector;
  b.n_options = n_options;
  const std::size_t groups = layout.group_size ? layout.history / layout.group_size : 0;
  b.role_des = common_dialect() + " The function receives condition as a list of " + std::to_string(groups) +
               " dicts (oldest group first) mapping each request type to its proportion and must return an "
               "integer between 1 and " +
               std::to_string(n_options) + ".";
  const std::size_t m = top_m.size();
  std::vector<std::string> parts;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& a = top_m[m - 1 - i];
    b.exemplars.push_back(top_m[i].source);
    b.labels.push_back("heuristic_selector_v" + std::to_string(i));
    parts.push_back(relabel(a, b.labels.back()));
  }
  parts.push_back("def heuristic_selector_v" + std::to_string(m) +
                  "(condition):\n    \"\"\"Improved version of `heuristic_selector_v" + std::to_string(m - 1) +
                  "`.\"\"\"");
  b.task_des =
      "You are a leading expert on this topic. Given the existing heuristic_selector_v0 function, please generate "
      "an optimized version named heuristic_selector_v*. This new version should be more complex and efficient, "
      "incorporating multiple conditional logic and loops as necessary. Ensure the function is significantly "
      "different and more advanced than the prior versions. Existing heuristic_selector_v0 function for "
      "reference:\n\n" +
      code_block(parts) + "\n\nThe \"heuristic_selector\" function should only return " +
      join_options(n_options, " or ") +
      ". In order to ensure the result, do not use any \"random\" in \"heuristic_selector\" function. Your task "
      "is to create the optimized heuristic_selector_v* function based on the guidelines above. Remember, only "
      "the Python function code is needed.";
  b.rendered = b.role_des + "\n\n" + b.task_des + "\n";
  return b;
}

void SamplerConfig::validate() const {
  if (!(temperature >= 0.0 && temperature <= 2.0)) {
    throw Error(ErrorCode::InvalidConfig, "temperature must lie in [0, 2]");
  }
  if (token_budget == 0) throw Error(ErrorCode::InvalidConfig, "token_budget must be positive");
}

// ---------------------------------------------------------------------------
// Extraction

std::string extract_code(const std::string& response) {
  const auto fence = response.find("```");
  if (fence != std::string::npos) {
    const auto body = response.find('\n', fence);
    if (body != std::string::npos) {
      auto close = response.find("\n```", body);
      std::string code = response.substr(body + 1, close == std::string::npos ? std::string::npos : close - body);
      if (code.find_first_not_of(" \t\r\n") != std::string::npos) return trim_trailing(code) + "\n";
    }
  }
  std::vector<std::string> lines;
  std::istringstream in(response);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  if (lines.size() > 400) lines.resize(400);
  std::size_t best_begin = 0, best_len = 0;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].rfind("def ", 0) != 0 && lines[i].rfind("import ", 0) != 0) continue;
    for (std::size_t j = lines.size(); j > i + best_len; --j) {
      std::string region;
      bool has_def = false;
      for (std::size_t k = i; k < j; ++k) {
        region += lines[k] + "\n";
        has_def = has_def || lines[k].rfind("def ", 0) == 0;
      }
      if (has_def && script::parses(region)) {
        best_begin = i;
        best_len = j - i;
        break;
      }
    }
  }
  if (best_len == 0) throw Error(ErrorCode::ExtractionFailed, "no code block or parseable function in response");
  std::string out;
  for (std::size_t k = best_begin; k < best_begin + best_len; ++k) out += lines[k] + "\n";
  return out;
}

std::string sample(Backend& backend, const PromptBundle& prompt, const SamplerConfig& cfg) {
  cfg.validate();
  return extract_code(backend.complete(prompt, cfg));
}

// ---------------------------------------------------------------------------
// Mock backend

namespace {

constexpr std::size_t kFeatures = 6;

std::optional<std::vector<double>> parse_number_list(const std::string& source, const std::string& name) {
  const std::regex line("(^|\\n)\\s*" + name + " = \\[([^\\]\\n]*)\\]");
  std::smatch m;
  if (!std::regex_search(source, m, line)) return std::nullopt;
  std::vector<double> out;
  std::stringstream ss(m[2].str());
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      std::size_t used = 0;
      const auto b = tok.find_first_not_of(' ');
      if (b == std::string::npos) return std::nullopt;
      out.push_back(std::stod(tok.substr(b), &used));
    } catch (const std::exception&) {
      return std::nullopt;
    }
  }
  return out;
}

std::optional<double> parse_scalar(const std::string& source, const std::string& name) {
  const std::regex line("(^|\\n)\\s*" + name + " = ([-0-9.e]+)\\s*(\\n|$)");
  std::smatch m;
  if (!std::regex_search(source, m, line)) return std::nullopt;
  try {
    return std::stod(m[2].str());
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

double gaussian(Rng& rng) {
  const double u1 = 1.0 - rng.uniform();
  const double u2 = rng.uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::uint64_t hash_text(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::vector<double> mutate_weights(std::vector<double> w, Rng& rng) {
  const auto pick = [&] { return rng.index(w.size()); };
  switch (rng.index(4)) {
    case 0: {  // perturb one or two weights
      const std::size_t n = 1 + rng.index(2);
      for (std::size_t i = 0; i < n; ++i) w[pick()] += 0.6 * gaussian(rng);
      break;
    }
    case 1:  // swap two weights
      std::swap(w[pick()], w[pick()]);
      break;
    case 2: {  // add a penalty or bonus term
      const double mag = 0.2 + 1.8 * rng.uniform();
      w[pick()] = rng.bernoulli(0.5) ? mag : -mag;
      break;
    }
    default:  // drop a term
      w[pick()] = 0.0;
      break;
  }
  return w;
}

}  // namespace

std::size_t mock_feature_count() { return kFeatures; }

std::string mock_priority_source(const std::vector<double>& weights) {
  std::string w;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (i) w += ", ";
    w += fmt_number(weights[i]);
  }
  return "def priority(bin, item):\n"
         "    W = [" + w + "]\n"
         "    for d in range(len(item)):\n"
         "        if item[d] > bin[d]:\n"
         "            return float('-inf')\n"
         "    rem = [bin[d] - item[d] for d in range(len(item))]\n"
         "    frac = [rem[d] / bin[d] if bin[d] > 0 else 0.0 for d in range(len(item))]\n"
         "    features = [\n"
         "        -rem[0],\n"
         "        -rem[-1],\n"
         "        -sum(frac),\n"
         "        -abs(frac[0] - frac[-1]),\n"
         "        1.0 if min(rem) == 0 else 0.0,\n"
         "        -max(frac),\n"
         "    ]\n"
         "    score = 0.0\n"
         "    for w, f in zip(W, features):\n"
         "        score += w * f\n"
         "    return score\n";
}

std::string mock_selector_source(const std::array<std::int64_t, 5>& type_to_option, double blend) {
  std::string m;
  for (std::size_t i = 0; i < type_to_option.size(); ++i) {
    if (i) m += ", ";
    m += std::to_string(type_to_option[i]);
  }
  std::string keys;
  for (std::size_t i = 0; i < 5; ++i) {
    if (i) keys += ", ";
    keys += std::string("\"") + kTypeKeys[i] + "\"";
  }
  return "def heuristic_selector(condition):\n"
         "    M = [" + m + "]\n"
         "    blend = " + fmt_number(blend) + "\n"
         "    keys = [" + keys + "]\n"
         "    score = []\n"
         "    for k in keys:\n"
         "        mean = sum(g[k] for g in condition) / len(condition)\n"
         "        score.append((1 - blend) * mean + blend * condition[-1][k])\n"
         "    best = 0\n"
         "    for i in range(1, len(keys)):\n"
         "        if score[i] > score[best]:\n"
         "            best = i\n"
         "    return M[best]\n";
}

std::string MockBackend::complete(const PromptBundle& prompt, const SamplerConfig& cfg) {
  (void)cfg;
  if (prompt.exemplars.empty()) throw Error(ErrorCode::BackendUnavailable, "mock backend needs an exemplar");
  Rng rng(Rng::mix(Rng::mix(seed_, calls_++), hash_text(prompt.rendered)));
  const std::string& best = prompt.exemplars.front();
  std::string code;
  if (prompt.kind == PolicyKind::Priority) {
    auto w = parse_number_list(best, "W");
    std::vector<double> weights;
    if (w && w->size() == kFeatures) {
      weights = *w;
    } else {
      weights.assign(kFeatures, 0.0);
      weights[0] = 1.0;  // same ranking as the leftover-CPU seed
    }
    code = mock_priority_source(mutate_weights(std::move(weights), rng));
  } else {
    const auto n = static_cast<std::int64_t>(std::max<std::size_t>(1, prompt.n_options));
    std::array<std::int64_t, 5> map{1, 1, 1, 1, 1};
    double blend = 0.5;
    if (auto parsed = parse_number_list(best, "M"); parsed && parsed->size() == 5) {
      for (std::size_t i = 0; i < 5; ++i) map[i] = std::clamp<std::int64_t>(std::llround((*parsed)[i]), 1, n);
    }
    if (auto b = parse_scalar(best, "blend")) blend = std::clamp(*b, 0.0, 1.0);
    const std::size_t edits = 1 + rng.index(2);
    for (std::size_t i = 0; i < edits; ++i) {
      map[rng.index(5)] = 1 + static_cast<std::int64_t>(rng.index(static_cast<std::size_t>(n)));
    }
    if (rng.bernoulli(0.5)) blend = std::clamp(blend + 0.3 * gaussian(rng), 0.0, 1.0);
    code = mock_selector_source(map, blend);
  }
  return "Here is an improved version.\n\n```python\n" + code + "```\n";
}

// ---------------------------------------------------------------------------
// Remote backend

RemoteConfig RemoteConfig::from_env() {
  RemoteConfig c;
  auto get = [](const char* name) {
    const char* v = std::getenv(name);
    return v ? std::string(v) : std::string();
  };
  c.endpoint = get("VMSCHED_LLM_ENDPOINT");
  c.api_key = get("VMSCHED_LLM_API_KEY");
  c.model = get("VMSCHED_LLM_MODEL");
  return c;
}

RemoteBackend::RemoteBackend(RemoteConfig config, std::unique_ptr<ChatTransport> transport,
                             std::function<void(std::chrono::milliseconds)> sleeper)
    : config_(std::move(config)), transport_(std::move(transport)), sleeper_(std::move(sleeper)) {
  if (!sleeper_) sleeper_ = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  if (!transport_) throw Error(ErrorCode::InvalidConfig, "remote backend needs a transport");
}

void RemoteBackend::write_transcript(const std::string& request, const std::optional<HttpReply>& reply,
                                     std::size_t attempt) {
  if (!config_.transcript_dir) return;
  std::uint64_t n;
  {
    std::lock_guard lock(mu_);
    n = ++calls_;
  }
  std::filesystem::create_directories(*config_.transcript_dir);
  char name[64];
  std::snprintf(name, sizeof(name), "call-%06llu-attempt-%zu.json", static_cast<unsigned long long>(n), attempt);
  nlohmann::ordered_json j;
  j["request"] = nlohmann::json::parse(request);
  if (reply) {
    j["status"] = reply->status;
    j["response"] = reply->body;
  } else {
    j["status"] = nullptr;
    j["response"] = nullptr;
  }
  std::ofstream out(*config_.transcript_dir / name, std::ios::binary | std::ios::trunc);
  out << j.dump(2) << '\n';
}

std::string RemoteBackend::complete(const PromptBundle& prompt, const SamplerConfig& cfg) {
  if (config_.endpoint.empty()) throw Error(ErrorCode::BackendUnavailable, "no endpoint configured");
  nlohmann::ordered_json req;
  req["model"] = cfg.model.empty() ? config_.model : cfg.model;
  req["messages"] = nlohmann::ordered_json::array({{{"role", "user"}, {"content", prompt.rendered}}});
  req["temperature"] = cfg.temperature;
  req["max_tokens"] = cfg.token_budget;
  const std::string body = req.dump();
  std::map<std::string, std::string> headers{{"Content-Type", "application/json"}};
  if (!config_.api_key.empty()) headers["Authorization"] = "Bearer " + config_.api_key;

  std::string last_error = "no attempt made";
  for (std::size_t attempt = 0; attempt <= cfg.retries; ++attempt) {
    if (attempt > 0) sleeper_(config_.backoff * (1LL << std::min<std::size_t>(attempt - 1, 10)));
    auto reply = transport_->post(config_.endpoint, body, headers, cfg.timeout);
    write_transcript(body, reply, attempt + 1);
    if (!reply) {
      last_error = "connection failed or timed out";
      continue;
    }
    if (reply->status == 429 || reply->status >= 500) {
      last_error = "HTTP " + std::to_string(reply->status);
      continue;
    }
    if (reply->status != 200) {
      throw Error(ErrorCode::BackendUnavailable, "HTTP " + std::to_string(reply->status) + ": " + reply->body);
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(reply->body);
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::BackendUnavailable, "malformed response body");
    }
    if (j.contains("usage") && j["usage"].contains("completion_tokens") &&
        j["usage"]["completion_tokens"].is_number_integer() &&
        j["usage"]["completion_tokens"].get<std::int64_t>() > static_cast<std::int64_t>(cfg.token_budget)) {
      throw Error(ErrorCode::BudgetExceeded, "completion used " + j["usage"]["completion_tokens"].dump() +
                                                 " tokens, budget " + std::to_string(cfg.token_budget));
    }
    try {
      return j.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception&) {
      throw Error(ErrorCode::BackendUnavailable, "response has no message content");
    }
  }
  throw Error(ErrorCode::BackendUnavailable,
              "gave up after " + std::to_string(cfg.retries + 1) + " attempts: " + last_error);
}

}  // namespace vmsched
