// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace vmsched::script {

class Value;
class Interpreter;
struct FunctionObj;
struct BuiltinObj;
struct ModuleObj;
struct MethodObj;

struct RangeObj;

struct ListObj {
  std::vector<Value> items;
  bool array = false;  // numpy-style: arithmetic is element-wise
};
struct TupleObj {
  std::vector<Value> items;
};
struct RangeObj {
  std::int64_t start = 0;
  std::int64_t stop = 0;
  std::int64_t step = 1;

  std::int64_t size() const;
  std::int64_t at(std::int64_t i) const { return start + i * step; }
};

/// Exception raised inside a script (catchable by `try/except`).
class ScriptError : public std::runtime_error {
 public:
  ScriptError(std::string kind, const std::string& message)
      : std::runtime_error(kind + ": " + message), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

/// Insertion-ordered mapping; policies only ever hold a handful of keys.
struct DictObj {
  std::vector<std::pair<Value, Value>> items;

  Value* find(const Value& key);
  const Value* find(const Value& key) const;
  void set(const Value& key, Value value);
};

/// Dynamically typed script value with reference semantics for containers.
class Value {
 public:
  enum class Type { None, Bool, Int, Float, Str, List, Tuple, Dict, Function, Builtin, Module, Method, Range };

  Value() = default;
  Value(bool b) : v_(b) {}
  Value(int i) : v_(static_cast<std::int64_t>(i)) {}
  Value(std::int64_t i) : v_(i) {}
  Value(double d) : v_(d) {}
  Value(std::string s) : v_(std::make_shared<const std::string>(std::move(s))) {}
  Value(const char* s) : Value(std::string(s)) {}
  Value(std::shared_ptr<ListObj> l) : v_(std::move(l)) {}
  Value(std::shared_ptr<TupleObj> t) : v_(std::move(t)) {}
  Value(std::shared_ptr<DictObj> d) : v_(std::move(d)) {}
  Value(std::shared_ptr<FunctionObj> f) : v_(std::move(f)) {}
  Value(std::shared_ptr<BuiltinObj> b) : v_(std::move(b)) {}
  Value(std::shared_ptr<ModuleObj> m) : v_(std::move(m)) {}
  Value(std::shared_ptr<MethodObj> m) : v_(std::move(m)) {}
  Value(std::shared_ptr<RangeObj> r) : v_(std::move(r)) {}

  static Value list(std::vector<Value> items = {});
  static Value tuple(std::vector<Value> items = {});
  static Value dict(std::vector<std::pair<Value, Value>> items = {});

  Type type() const { return static_cast<Type>(v_.index()); }
  bool is_none() const { return type() == Type::None; }
  bool is_number() const {
    return type() == Type::Int || type() == Type::Float || type() == Type::Bool;
  }

  bool as_bool() const { return std::get<bool>(v_); }
  std::int64_t as_int() const { return std::get<std::int64_t>(v_); }
  double as_float() const { return std::get<double>(v_); }
  /// Int, Bool or Float as double.
  double to_double() const;
  const std::string& as_str() const { return *std::get<std::shared_ptr<const std::string>>(v_); }
  ListObj& as_list() const { return *std::get<std::shared_ptr<ListObj>>(v_); }
  TupleObj& as_tuple() const { return *std::get<std::shared_ptr<TupleObj>>(v_); }
  DictObj& as_dict() const { return *std::get<std::shared_ptr<DictObj>>(v_); }
  const std::shared_ptr<FunctionObj>& as_function() const {
    return std::get<std::shared_ptr<FunctionObj>>(v_);
  }
  const std::shared_ptr<BuiltinObj>& as_builtin() const {
    return std::get<std::shared_ptr<BuiltinObj>>(v_);
  }
  const std::shared_ptr<ModuleObj>& as_module() const {
    return std::get<std::shared_ptr<ModuleObj>>(v_);
  }
  const std::shared_ptr<MethodObj>& as_method() const {
    return std::get<std::shared_ptr<MethodObj>>(v_);
  }
  const RangeObj& as_range() const { return *std::get<std::shared_ptr<RangeObj>>(v_); }
  bool is_array() const { return type() == Type::List && as_list().array; }

  /// Identity for reference types, value identity for scalars.
  bool same_object(const Value& other) const;

  /// List or tuple element storage.
  const std::vector<Value>* sequence_items() const;

  /// Throws ScriptError for arrays with more than one element.
  bool truthy() const;
  std::string type_name() const;
  std::string repr() const;

  /// Python-style equality (1 == 1.0, containers compared element-wise).
  friend bool operator==(const Value& a, const Value& b);

 private:
  std::variant<std::monostate, bool, std::int64_t, double, std::shared_ptr<const std::string>,
               std::shared_ptr<ListObj>, std::shared_ptr<TupleObj>, std::shared_ptr<DictObj>,
               std::shared_ptr<FunctionObj>, std::shared_ptr<BuiltinObj>,
               std::shared_ptr<ModuleObj>, std::shared_ptr<MethodObj>, std::shared_ptr<RangeObj>>
      v_;
};

using Kwargs = std::vector<std::pair<std::string, Value>>;

struct BuiltinObj {
  std::string name;
  std::function<Value(Interpreter&, std::vector<Value>&, Kwargs&)> fn;
};

struct ModuleObj {
  std::string name;
  std::vector<std::pair<std::string, Value>> attrs;
  const Value* find(std::string_view attr) const;
};

/// `obj.method` bound for a later call.
struct MethodObj {
  Value self;
  std::string name;
};

}  // namespace vmsched::script
