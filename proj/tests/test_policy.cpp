// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "vmsched/error.hpp"
#include "vmsched/policy.hpp"
#include "vmsched/script.hpp"
#include "vmsched/script/value.hpp"
#include "workloads.hpp"

namespace vmsched {
namespace {

using script::Value;

double run_priority(const std::string& src, Resources bin, Resources item) {
  auto a = PolicyArtifact::make(PolicyKind::Priority, src);
  return eval_priority(*compile(a), bin, item);
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::EmptyLedger;
}

SelectorContext pure(VmType t, std::size_t groups = 4) {
  SelectorContext ctx;
  std::array<double, 5> g{};
  g[static_cast<std::size_t>(t)] = 1.0;
  ctx.groups.assign(groups, g);
  return ctx;
}

TEST(ScriptVm, EvaluatesPythonSubset) {
  const auto p = script::compile(
      "def f(xs):\n"
      "    total = 0\n"
      "    for i, x in enumerate(xs):\n"
      "        if x % 2 == 0:\n"
      "            total += x * i\n"
      "        elif x > 4:\n"
      "            continue\n"
      "    squares = [v * v for v in xs if v < 4]\n"
      "    d = {'a': 1}\n"
      "    d['b'] = sum(squares)\n"
      "    return total + d['b'] + max(xs, key=lambda v: -v)\n");
  const auto r = script::call(p, "f", {Value::list({1, 2, 3, 4, 5})});
  // total = 2*1 + 4*3 = 14, squares = 1+4+9 = 14, min = 1
  EXPECT_EQ(r.to_double(), 29.0);
}

TEST(ScriptVm, MathAndNumpy) {
  const auto p = script::compile(
      "import math\n"
      "import numpy as np\n"
      "def f(xs):\n"
      "    a = np.array(xs)\n"
      "    return math.sqrt(np.sum(a * 2)) + float(np.argmax(a))\n");
  EXPECT_DOUBLE_EQ(script::call(p, "f", {Value::list({1, 3, 4})}).to_double(), 6.0);
}

TEST(ScriptVm, RejectsForbiddenConstructs) {
  EXPECT_EQ(code_of([] { script::compile("class A:\n    pass\n"); }), ErrorCode::ForbiddenConstruct);
  EXPECT_EQ(code_of([] { script::compile("from os import path\n"); }), ErrorCode::ForbiddenConstruct);
  EXPECT_EQ(code_of([] { script::compile("def f():\n    return __import__\n"); }),
            ErrorCode::ForbiddenConstruct);
  EXPECT_EQ(code_of([] { script::compile("def f(:\n"); }), ErrorCode::ParseError);
}

TEST(ScriptVm, UnknownModuleFails) {
  EXPECT_NE(code_of([] {
              const auto p = script::compile("import os\ndef f():\n    return 1\n");
              script::call(p, "f", {});
            }),
            ErrorCode::EmptyLedger);
}

TEST(ScriptVm, InstructionBudget) {
  const auto p = script::compile("def f():\n    while True:\n        pass\n");
  script::Limits lim;
  lim.max_steps = 10'000;
  EXPECT_EQ(code_of([&] { script::call(p, "f", {}, lim); }), ErrorCode::Timeout);
}

TEST(ScriptVm, RecursionDepth) {
  const auto p = script::compile("def f(n):\n    return f(n + 1)\n");
  EXPECT_NE(code_of([&] { script::call(p, "f", {Value(0)}); }), ErrorCode::EmptyLedger);
}

TEST(ScriptVm, RuntimeFaultsSurface) {
  const auto p = script::compile("def f():\n    return 1 / 0\n");
  EXPECT_EQ(code_of([&] { script::call(p, "f", {}); }), ErrorCode::RuntimeFault);
  const auto q = script::compile(
      "def f():\n    try:\n        return 1 / 0\n    except ZeroDivisionError:\n        return 7\n");
  EXPECT_EQ(script::call(q, "f", {}).to_double(), 7.0);
}

TEST(Policy, ContentIdIsStable) {
  EXPECT_EQ(content_id("abc"), content_id("abc"));
  EXPECT_NE(content_id("abc"), content_id("abd"));
  EXPECT_EQ(content_id("").size(), 16u);
}

TEST(Policy, EntryFunctionPicksConventionalName) {
  const auto p = script::compile("def helper(x):\n    return x\ndef priority_v3(bin, item):\n    return 1\n");
  EXPECT_EQ(entry_function(p, PolicyKind::Priority), "priority_v3");
}

TEST(Policy, PriorityResultChecks) {
  EXPECT_EQ(run_priority("def priority(bin, item):\n    return bin[0] - item[0]\n", {5, 5}, {2, 2}), 3.0);
  EXPECT_EQ(run_priority("def priority(bin, item):\n    return float('-inf')\n", {5, 5}, {2, 2}),
            -std::numeric_limits<double>::infinity());
  EXPECT_EQ(code_of([] { run_priority("def priority(bin, item):\n    return float('nan')\n", {5, 5}, {2, 2}); }),
            ErrorCode::OutOfRange);
  EXPECT_EQ(code_of([] { run_priority("def priority(bin, item):\n    return 'x'\n", {5, 5}, {2, 2}); }),
            ErrorCode::OutOfRange);
}

TEST(Policy, SelectorRangeChecks) {
  auto ok = PolicyArtifact::make(PolicyKind::Selector, "def heuristic_selector(condition):\n    return 2\n");
  EXPECT_EQ(eval_selector(*compile(ok), SelectorContext::uniform(4), 3), 2u);
  auto bad = PolicyArtifact::make(PolicyKind::Selector, "def heuristic_selector(condition):\n    return 4\n");
  EXPECT_EQ(code_of([&] { eval_selector(*compile(bad), SelectorContext::uniform(4), 3); }),
            ErrorCode::OutOfRange);
}

TEST(Policy, SelectorRandomnessForbidden) {
  auto a = PolicyArtifact::make(PolicyKind::Selector,
                                "import random\ndef heuristic_selector(condition):\n    return 1\n");
  EXPECT_EQ(code_of([&] { compile(a); }), ErrorCode::ForbiddenConstruct);
}

TEST(Policy, RandomPriorityFailsDeterminism) {
  auto a = PolicyArtifact::make(PolicyKind::Priority,
                                "import random\ndef priority(bin, item):\n    return random.random()\n");
  const auto report = validate(a, default_probes());
  EXPECT_TRUE(report.compiled);
  EXPECT_FALSE(report.valid);
  EXPECT_EQ(a.status, PolicyStatus::Invalid);
}

TEST(Policy, ValidateMarksStatus) {
  auto good = PolicyArtifact::make(PolicyKind::Priority, "def priority(bin, item):\n    return -bin[0]\n");
  EXPECT_TRUE(validate(good, default_probes()).valid);
  EXPECT_EQ(good.status, PolicyStatus::Valid);
  auto broken = PolicyArtifact::make(PolicyKind::Priority, "def priority(bin, item):\n    return bin[5]\n");
  EXPECT_FALSE(validate(broken, default_probes()).valid);
  EXPECT_FALSE(broken.reason.empty());
}

TEST(Policy, ContextValueShape) {
  const auto v = SelectorContext::uniform(4).to_value();
  const auto p = script::compile("def f(c):\n    return len(c) * 10 + len(c[0]) + c[3]['large']\n");
  EXPECT_DOUBLE_EQ(script::call(p, "f", {v}).to_double(), 45.2);
}

TEST(Policy, StoreRoundTrip) {
  const auto dir = std::filesystem::temp_directory_path() / "vmsched_store_test";
  std::filesystem::remove_all(dir);
  auto a = PolicyArtifact::make(PolicyKind::Priority, "def priority(bin, item):\n    return 0\n");
  a.status = PolicyStatus::Valid;
  a.scores.push_back({"S1", 12.5});
  {
    ArtifactStore store(dir);
    store.put(a);
  }
  ArtifactStore again(dir);
  const auto got = again.get(a.id);
  ASSERT_TRUE(got.has_value());
  EXPECT_EQ(got->source, a.source);
  EXPECT_EQ(got->scores, a.scores);
  EXPECT_EQ(got->status, PolicyStatus::Valid);
  std::filesystem::remove_all(dir);
}

// Ported reference policies.

TEST(ReferenceFixtures, PriorityIsValidAndRefusesOverfull) {
  auto a = PolicyArtifact::make(PolicyKind::Priority, testing::fixture_text("policies/reference_priority.py"));
  ASSERT_TRUE(validate(a, default_probes()).valid) << a.reason;
  const auto h = compile(a);
  const double inf = std::numeric_limits<double>::infinity();
  EXPECT_EQ(eval_priority(*h, Resources{4, 16}, Resources{8, 8}), -inf);
  EXPECT_EQ(eval_priority(*h, Resources{16, 4}, Resources{8, 8}), -inf);
  EXPECT_TRUE(std::isfinite(eval_priority(*h, Resources{32, 64}, Resources{8, 8})));
  EXPECT_EQ(eval_priority(*h, Resources{8, 8}, Resources{8, 8}), 0.0);
}

TEST(ReferenceFixtures, SelectorIsValidAndMapsSmallToFirst) {
  auto a = PolicyArtifact::make(PolicyKind::Selector, testing::fixture_text("policies/reference_selector.py"));
  ASSERT_TRUE(validate(a, default_probes({64, 256}, 4, 4)).valid) << a.reason;
  const auto h = compile(a);
  EXPECT_EQ(eval_selector(*h, pure(VmType::Small), 4), 1u);
  EXPECT_EQ(eval_selector(*h, pure(VmType::MediumSmall), 4), 2u);
  EXPECT_EQ(eval_selector(*h, pure(VmType::MediumMedium), 4), 3u);
  EXPECT_EQ(eval_selector(*h, pure(VmType::Large), 4), 4u);
}

TEST(RegimeFixtures, CompileValid) {
  for (const char* name : {"policies/regime_spread.py", "policies/regime_reserve.py"}) {
    auto a = PolicyArtifact::make(PolicyKind::Priority, testing::fixture_text(name));
    EXPECT_TRUE(validate(a, default_probes()).valid) << name << ": " << a.reason;
  }
  auto s = PolicyArtifact::make(PolicyKind::Selector, testing::fixture_text("policies/regime_selector.py"));
  EXPECT_TRUE(validate(s, default_probes({40, 80}, 2, 4)).valid) << s.reason;
  EXPECT_EQ(eval_selector(*compile(s), pure(VmType::Small), 2), 1u);
  EXPECT_EQ(eval_selector(*compile(s), pure(VmType::Large), 2), 2u);
}

}  // namespace
}  // namespace vmsched
