// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "vmsched/policy.hpp"

namespace vmsched {

/// Seed priority exemplar (scores a bin by leftover CPU).
const std::string& seed_priority_source();
struct ContextLayout;

/// Seed selector exemplar (always option 1) for 4 options over 200/50.
const std::string& seed_selector_source();

struct PromptBundle {
  PolicyKind kind = PolicyKind::Priority;
  std::string role_des;  // sandbox dialect declaration
  std::string task_des;  // instructions with exemplars
  /// Exemplar sources, best first (descending J).
  std::vector<std::string> exemplars;
  /// Labels in render order (worst first), e.g. priority_v0, priority_v1.
  std::vector<std::string> labels;
  std::size_t n_options = 0;  // selectors only
  std::string rendered;
};

/// Context-window layout named in the selector prompt.
struct ContextLayout {
  std::size_t history = 200;
  std::size_t group_size = 50;
};

/// Seed selector whose docstring names `n_options` and `layout`.
std::string seed_selector_source(std::size_t n_options, const ContextLayout& layout);

/// `top_m` is ordered best first.
PromptBundle render_miner_prompt(const std::vector<PolicyArtifact>& top_m);
PromptBundle render_composer_prompt(const std::vector<PolicyArtifact>& top_m, std::size_t n_options,
                                    const ContextLayout& layout = {});

struct SamplerConfig {
  double temperature = 0.8;
  std::size_t token_budget = 1000;
  std::string model;
  std::size_t retries = 3;
  std::chrono::milliseconds timeout{60000};
  void validate() const;
};

/// Chat-completion boundary. Implementations return the raw completion text.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string complete(const PromptBundle& prompt, const SamplerConfig& cfg) = 0;
};

/// First fenced block, else the longest contiguous run of lines that parses
/// and defines a function. Throws ExtractionFailed.
std::string extract_code(const std::string& response);

/// complete() followed by extract_code().
std::string sample(Backend& backend, const PromptBundle& prompt, const SamplerConfig& cfg);

/// Offline backend. Proposes weighted-feature priorities and type-map
/// selectors, mutating the best exemplar when it is in that form. The output
/// stream is a pure function of the seed and the sequence of prompts.
class MockBackend : public Backend {
 public:
  explicit MockBackend(std::uint64_t seed) : seed_(seed) {}
  std::string complete(const PromptBundle& prompt, const SamplerConfig& cfg) override;

 private:
  std::uint64_t seed_;
  std::uint64_t calls_ = 0;
};

/// Renders a weighted-feature priority with the given weights.
std::string mock_priority_source(const std::vector<double>& weights);
/// Renders a type-map selector: dominant type of a blend of the window mean
/// and the newest group picks `type_to_option`.
std::string mock_selector_source(const std::array<std::int64_t, 5>& type_to_option, double blend);
std::size_t mock_feature_count();

struct HttpReply {
  int status = 0;
  std::string body;
};

/// Transport seam so tests never touch the network.
class ChatTransport {
 public:
  virtual ~ChatTransport() = default;
  /// Returns nullopt on connection failure or timeout.
  virtual std::optional<HttpReply> post(const std::string& url, const std::string& body,
                                        const std::map<std::string, std::string>& headers,
                                        std::chrono::milliseconds timeout) = 0;
};

std::unique_ptr<ChatTransport> make_http_transport();

struct RemoteConfig {
  std::string endpoint;  // full URL of the chat-completions route
  std::string api_key;
  std::string model;
  std::optional<std::filesystem::path> transcript_dir;
  std::chrono::milliseconds backoff{500};

  /// Reads VMSCHED_LLM_ENDPOINT, VMSCHED_LLM_API_KEY, VMSCHED_LLM_MODEL.
  static RemoteConfig from_env();
};

/// OpenAI-style chat-completion client with retries and per-call
/// transcripts. Throws BackendUnavailable or BudgetExceeded.
class RemoteBackend : public Backend {
 public:
  RemoteBackend(RemoteConfig config, std::unique_ptr<ChatTransport> transport,
                std::function<void(std::chrono::milliseconds)> sleeper = {});
  std::string complete(const PromptBundle& prompt, const SamplerConfig& cfg) override;

 private:
  void write_transcript(const std::string& request, const std::optional<HttpReply>& reply,
                        std::size_t attempt);

  RemoteConfig config_;
  std::unique_ptr<ChatTransport> transport_;
  std::function<void(std::chrono::milliseconds)> sleeper_;
  std::mutex mu_;
  std::uint64_t calls_ = 0;
};

}  // namespace vmsched
