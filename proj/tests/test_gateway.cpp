// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include <gtest/gtest.h>

#include <deque>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "vmsched/error.hpp"
#include "vmsched/gateway.hpp"
#include "workloads.hpp"

namespace vmsched {
namespace {

std::string golden(const std::string& name) {
  std::ifstream in(std::filesystem::path(VMSCHED_SOURCE_DIR) / "tests" / "golden" / name);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::EmptyLedger;
}

TEST(Prompts, MinerMatchesGolden) {
  const auto seed = PolicyArtifact::make(PolicyKind::Priority, seed_priority_source());
  const auto better = PolicyArtifact::make(PolicyKind::Priority, mock_priority_source({1, 0, 0, 0, 0, 0}));
  const auto p = render_miner_prompt({better, seed});
  EXPECT_EQ(p.rendered, golden("miner_prompt.txt"));
  EXPECT_EQ(p.labels, (std::vector<std::string>{"priority_v0", "priority_v1"}));
  EXPECT_EQ(p.rendered, p.role_des + "\n\n" + p.task_des + "\n");
}

TEST(Prompts, ComposerMatchesGolden) {
  const auto seed = PolicyArtifact::make(PolicyKind::Selector, seed_selector_source(3, {200, 50}));
  const auto p = render_composer_prompt({seed}, 3, {200, 50});
  EXPECT_EQ(p.rendered, golden("composer_prompt.txt"));
  EXPECT_EQ(p.n_options, 3u);
  EXPECT_NE(p.rendered.find("only return 1 or 2 or 3."), std::string::npos);
}

TEST(Prompts, EmptyExemplarsRejected) {
  EXPECT_EQ(code_of([] { render_miner_prompt({}); }), ErrorCode::EmptyExemplars);
  EXPECT_EQ(code_of([] { render_composer_prompt({}, 2); }), ErrorCode::EmptyExemplars);
}

TEST(Prompts, SeedsValidate) {
  auto p = PolicyArtifact::make(PolicyKind::Priority, seed_priority_source());
  EXPECT_TRUE(validate(p, default_probes()).valid);
  auto s = PolicyArtifact::make(PolicyKind::Selector, seed_selector_source());
  EXPECT_TRUE(validate(s, default_probes({64, 256}, 4, 4)).valid);
}

TEST(Extraction, PrefersFencedBlock) {
  const std::string reply = "Sure.\n```python\ndef priority(bin, item):\n    return 1\n```\nmore text";
  EXPECT_EQ(extract_code(reply), "def priority(bin, item):\n    return 1\n");
}

TEST(Extraction, FallsBackToParseableRegion) {
  const std::string reply = "Here you go:\ndef priority(bin, item):\n    return 2\nHope this helps.";
  const auto code = extract_code(reply);
  EXPECT_EQ(code.rfind("def priority", 0), 0u);
  EXPECT_EQ(code.find("Hope"), std::string::npos);
}

TEST(Extraction, FailsWithoutCode) {
  EXPECT_EQ(code_of([] { extract_code("I cannot help with that."); }), ErrorCode::ExtractionFailed);
}

TEST(MockBackend, DeterministicPerSeed) {
  const auto seed = PolicyArtifact::make(PolicyKind::Priority, seed_priority_source());
  const auto prompt = render_miner_prompt({seed});
  MockBackend a(7), b(7), c(8);
  const SamplerConfig cfg;
  for (int i = 0; i < 5; ++i) {
    const auto ra = a.complete(prompt, cfg);
    EXPECT_EQ(ra, b.complete(prompt, cfg));
    (void)c.complete(prompt, cfg);
  }
  MockBackend d(7), e(8);
  EXPECT_NE(d.complete(prompt, cfg), e.complete(prompt, cfg));
}

TEST(MockBackend, ProposalsCompileMostly) {
  const auto seed = PolicyArtifact::make(PolicyKind::Priority, seed_priority_source());
  const auto prompt = render_miner_prompt({seed});
  MockBackend m(1);
  std::size_t valid = 0;
  for (int i = 0; i < 20; ++i) {
    auto a = PolicyArtifact::make(PolicyKind::Priority, sample(m, prompt, {}));
    valid += validate(a, default_probes()).valid ? 1 : 0;
  }
  EXPECT_GE(valid, 15u);
}

TEST(MockBackend, SelectorProposalsInRange) {
  const auto seed = PolicyArtifact::make(PolicyKind::Selector, seed_selector_source(3, {200, 50}));
  const auto prompt = render_composer_prompt({seed}, 3);
  MockBackend m(2);
  for (int i = 0; i < 10; ++i) {
    auto a = PolicyArtifact::make(PolicyKind::Selector, sample(m, prompt, {}));
    const auto r = validate(a, default_probes({64, 256}, 3, 4));
    EXPECT_TRUE(r.valid) << a.reason;
  }
}

TEST(Sampler, ValidatesConfig) {
  SamplerConfig cfg;
  cfg.temperature = -1;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.token_budget = 0;
  EXPECT_THROW(cfg.validate(), Error);
}

class ScriptedTransport : public ChatTransport {
 public:
  std::deque<std::optional<HttpReply>> replies;
  std::vector<std::string> bodies;
  std::map<std::string, std::string> last_headers;

  std::optional<HttpReply> post(const std::string&, const std::string& body,
                                const std::map<std::string, std::string>& headers,
                                std::chrono::milliseconds) override {
    bodies.push_back(body);
    last_headers = headers;
    auto r = replies.front();
    replies.pop_front();
    return r;
  }
};

std::string ok_body(const std::string& content, int tokens = 10) {
  nlohmann::json j;
  j["choices"] = {{{"message", {{"role", "assistant"}, {"content", content}}}}};
  j["usage"] = {{"completion_tokens", tokens}};
  return j.dump();
}

struct Remote {
  ScriptedTransport* transport = nullptr;
  std::vector<std::chrono::milliseconds> sleeps;
  std::unique_ptr<RemoteBackend> backend;

  explicit Remote(std::deque<std::optional<HttpReply>> replies,
                  std::optional<std::filesystem::path> transcripts = std::nullopt) {
    auto t = std::make_unique<ScriptedTransport>();
    t->replies = std::move(replies);
    transport = t.get();
    RemoteConfig cfg;
    cfg.endpoint = "http://127.0.0.1:9/v1/chat/completions";
    cfg.api_key = "k";
    cfg.model = "m";
    cfg.transcript_dir = std::move(transcripts);
    backend = std::make_unique<RemoteBackend>(cfg, std::move(t),
                                              [this](std::chrono::milliseconds d) { sleeps.push_back(d); });
  }
};

PromptBundle any_prompt() {
  return render_miner_prompt({PolicyArtifact::make(PolicyKind::Priority, seed_priority_source())});
}

TEST(RemoteBackend, SendsChatRequest) {
  Remote r({HttpReply{200, ok_body("hello")}});
  SamplerConfig cfg;
  cfg.temperature = 0.8;
  cfg.token_budget = 1000;
  EXPECT_EQ(r.backend->complete(any_prompt(), cfg), "hello");
  const auto req = nlohmann::json::parse(r.transport->bodies.at(0));
  EXPECT_EQ(req["model"], "m");
  EXPECT_EQ(req["max_tokens"], 1000);
  EXPECT_DOUBLE_EQ(req["temperature"].get<double>(), 0.8);
  EXPECT_EQ(req["messages"][0]["content"], any_prompt().rendered);
  EXPECT_EQ(r.transport->last_headers.at("Authorization"), "Bearer k");
}

TEST(RemoteBackend, RetriesTransientFailures) {
  Remote r({std::nullopt, HttpReply{503, ""}, HttpReply{200, ok_body("x")}});
  EXPECT_EQ(r.backend->complete(any_prompt(), {}), "x");
  ASSERT_EQ(r.sleeps.size(), 2u);
  EXPECT_LT(r.sleeps[0], r.sleeps[1]);
}

TEST(RemoteBackend, GivesUpAfterRetries) {
  Remote r({HttpReply{429, ""}, HttpReply{429, ""}, HttpReply{429, ""}, HttpReply{429, ""}});
  SamplerConfig cfg;
  cfg.retries = 3;
  EXPECT_EQ(code_of([&] { r.backend->complete(any_prompt(), cfg); }), ErrorCode::BackendUnavailable);
}

TEST(RemoteBackend, ClientErrorIsFatal) {
  Remote r({HttpReply{401, "denied"}});
  EXPECT_EQ(code_of([&] { r.backend->complete(any_prompt(), {}); }), ErrorCode::BackendUnavailable);
  EXPECT_TRUE(r.sleeps.empty());
}

TEST(RemoteBackend, OverBudgetCompletion) {
  Remote r({HttpReply{200, ok_body("x", 2000)}});
  EXPECT_EQ(code_of([&] { r.backend->complete(any_prompt(), {}); }), ErrorCode::BudgetExceeded);
}

TEST(RemoteBackend, WritesTranscripts) {
  const auto dir = std::filesystem::temp_directory_path() / "vmsched_transcripts_test";
  std::filesystem::remove_all(dir);
  Remote r({HttpReply{500, ""}, HttpReply{200, ok_body("y")}}, dir);
  r.backend->complete(any_prompt(), {});
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    (void)e;
    ++files;
  }
  EXPECT_EQ(files, 2u);
  std::filesystem::remove_all(dir);
}

TEST(RemoteBackend, MissingEndpoint) {
  RemoteBackend b(RemoteConfig{}, std::make_unique<ScriptedTransport>(), [](std::chrono::milliseconds) {});
  EXPECT_EQ(code_of([&] { b.complete(any_prompt(), {}); }), ErrorCode::BackendUnavailable);
}

}  // namespace
}  // namespace vmsched
