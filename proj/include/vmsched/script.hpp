// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "vmsched/script/value.hpp"

/// Sandboxed interpreter for policy sources written in a restricted Python
/// subset ("policy dialect").
///
/// Supported: `def` (nested, with defaults and closures), `lambda`,
/// `if/elif/else`, `for`/`while` (with `else`), `break`, `continue`,
/// `return`, `pass`, `try/except/finally`, `raise`, `assert`, tuple
/// unpacking, augmented assignment, list/dict literals and comprehensions,
/// slicing, conditional expressions and chained comparisons.
///
/// Imports: `math`, a reduction-only subset of `numpy`, and (only when the
/// caller allows it) `random`. Anything touching files, the network, the
/// clock, reflection or classes is rejected at compile time. Every call runs
/// in a fresh global scope under a step budget and a wall-clock budget.
namespace vmsched::script {

struct Limits {
  std::uint64_t max_steps = 200'000;
  std::chrono::milliseconds max_wall{2000};
  std::size_t max_depth = 64;
  std::size_t max_collection = 100'000;
};

struct CompileOptions {
  bool allow_random = false;
};

struct ProgramImpl;

/// Parsed and checked source. Immutable and safe to call concurrently.
class Program {
 public:
  explicit Program(std::shared_ptr<const ProgramImpl> impl) : impl_(std::move(impl)) {}

  /// Top-level function names in definition order.
  const std::vector<std::string>& functions() const;
  bool has_function(std::string_view name) const;
  bool allow_random() const;
  const ProgramImpl& impl() const { return *impl_; }

 private:
  std::shared_ptr<const ProgramImpl> impl_;
};

/// Throws Error(ParseError) with "line:col" or Error(ForbiddenConstruct).
Program compile(std::string_view source, const CompileOptions& options = {});

/// True when `source` parses (forbidden constructs are not checked).
bool parses(std::string_view source);

/// Runs `function(args...)` in a fresh context. Script failures raise
/// Error(RuntimeFault); exhausted budgets raise Error(Timeout).
Value call(const Program& program, std::string_view function, std::vector<Value> args,
           const Limits& limits = {});

}  // namespace vmsched::script
