// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "script/ast.hpp"
#include "vmsched/rng.hpp"

namespace vmsched::script {

struct Scope {
  std::unordered_map<std::string, Value> vars;
  std::shared_ptr<Scope> parent;
};

struct FunctionObj {
  std::shared_ptr<const FunctionDef> def;
  std::shared_ptr<Scope> closure;  // null for module-level definitions
  std::vector<std::optional<Value>> defaults;
};

[[noreturn]] inline void raise(const std::string& kind, const std::string& message) {
  throw ScriptError(kind, message);
}

/// Python `str()` rendering.
std::string to_str(const Value& v);

/// Numeric view with Python's bool-is-int rule.
struct Num {
  bool is_int;
  std::int64_t i;
  double d;
};
std::optional<Num> as_num(const Value& v);

/// Integer (or bool) argument; raises TypeError otherwise.
std::int64_t index_of(const Value& v);

class Interpreter {
 public:
  Interpreter(std::shared_ptr<const ProgramImpl> program, const Limits& limits, std::uint64_t seed);
  ~Interpreter();
  Interpreter(const Interpreter&) = delete;
  Interpreter& operator=(const Interpreter&) = delete;

  /// Executes top-level statements into a fresh global scope.
  void load_module();
  Value call_global(std::string_view name, std::vector<Value> args);
  Value call_value(const Value& callee, std::vector<Value> args, Kwargs kwargs = {});

  void tick();
  void check_size(std::size_t n) const;
  Rng& rng() { return rng_; }
  bool allow_random() const { return program_->allow_random; }

  Value binary(BinOp op, const Value& a, const Value& b);
  Value compare(CmpOp op, const Value& a, const Value& b);
  /// Total order used by sorted/min/max; raises TypeError on mixed types.
  bool less(const Value& a, const Value& b);
  bool contains(const Value& container, const Value& item);
  Value get_item(const Value& obj, const Value& key);
  void set_item(const Value& obj, const Value& key, Value value);
  Value get_attr(const Value& obj, const std::string& name);

  /// Calls `f(item)` for each element; `f` returns false to stop early.
  template <typename F>
  void iterate(const Value& v, F&& f);
  std::vector<Value> collect(const Value& v);

 private:
  enum class Flow { Normal, Return, Break, Continue };

  Flow exec_block(const Block& block);
  Flow exec(const Stmt& s);
  Flow exec_try(const Stmt& s);
  Value eval(const Expr& e);
  Value eval_call(const Expr& e);
  Value eval_slice(const Value& obj, const Expr& slice);
  Value eval_comprehension(const Expr& e);
  void comprehension_loop(const Expr& e, std::size_t gen, const std::function<void()>& emit);
  void assign(const Expr& target, const Value& v);
  Value lookup(const std::string& name, const Expr& at);
  Value make_function(const std::shared_ptr<const FunctionDef>& def);
  Value call_function(const FunctionObj& fn, std::vector<Value>& args, Kwargs& kwargs);
  Value scalar_binary(BinOp op, const Value& a, const Value& b, bool numpy_mode);
  Value elementwise(BinOp op, const Value& a, const Value& b);
  bool cmp_scalar(CmpOp op, const Value& a, const Value& b);

  std::shared_ptr<const ProgramImpl> program_;
  Limits limits_;
  Rng rng_;
  std::shared_ptr<Scope> globals_;
  std::shared_ptr<Scope> scope_;
  std::vector<std::shared_ptr<Scope>> captured_;
  std::vector<ScriptError> handling_;
  Value ret_;
  std::uint64_t steps_ = 0;
  std::size_t depth_ = 0;
  std::chrono::steady_clock::time_point deadline_;
};

// Provided by builtins.cpp.
const std::unordered_map<std::string, Value>& builtin_table();
std::optional<Value> make_module(const std::string& name);
bool has_method(const Value& self, const std::string& name);
Value call_method(Interpreter& in, const Value& self, const std::string& name,
                  std::vector<Value>& args, Kwargs& kwargs);

template <typename F>
void Interpreter::iterate(const Value& v, F&& f) {
  using T = Value::Type;
  switch (v.type()) {
    case T::List: {
      const auto& items = v.as_list().items;
      for (std::size_t i = 0; i < items.size(); ++i) {
        tick();
        Value item = items[i];
        if (!f(item)) return;
      }
      return;
    }
    case T::Tuple: {
      for (const auto& item : v.as_tuple().items) {
        tick();
        if (!f(item)) return;
      }
      return;
    }
    case T::Dict: {
      std::vector<Value> keys;
      for (const auto& kv : v.as_dict().items) keys.push_back(kv.first);
      for (const auto& k : keys) {
        tick();
        if (!f(k)) return;
      }
      return;
    }
    case T::Str: {
      for (char c : v.as_str()) {
        tick();
        if (!f(Value(std::string(1, c)))) return;
      }
      return;
    }
    case T::Range: {
      const auto& r = v.as_range();
      const auto n = r.size();
      for (std::int64_t i = 0; i < n; ++i) {
        tick();
        if (!f(Value(r.at(i)))) return;
      }
      return;
    }
    default: raise("TypeError", "'" + v.type_name() + "' object is not iterable");
  }
}

}  // namespace vmsched::script
