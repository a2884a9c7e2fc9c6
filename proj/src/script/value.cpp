// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include "vmsched/script/value.hpp"

#include <charconv>
#include <cmath>

namespace vmsched::script {

std::int64_t RangeObj::size() const {
  if (step > 0 && start < stop) return (stop - start + step - 1) / step;
  if (step < 0 && start > stop) return (start - stop - step - 1) / (-step);
  return 0;
}

Value* DictObj::find(const Value& key) {
  for (auto& [k, v] : items) {
    if (k == key) return &v;
  }
  return nullptr;
}

const Value* DictObj::find(const Value& key) const {
  for (const auto& [k, v] : items) {
    if (k == key) return &v;
  }
  return nullptr;
}

void DictObj::set(const Value& key, Value value) {
  if (Value* slot = find(key)) {
    *slot = std::move(value);
    return;
  }
  items.emplace_back(key, std::move(value));
}

const Value* ModuleObj::find(std::string_view attr) const {
  for (const auto& [k, v] : attrs) {
    if (k == attr) return &v;
  }
  return nullptr;
}

Value Value::list(std::vector<Value> items) {
  auto l = std::make_shared<ListObj>();
  l->items = std::move(items);
  return Value(std::move(l));
}

Value Value::tuple(std::vector<Value> items) {
  auto t = std::make_shared<TupleObj>();
  t->items = std::move(items);
  return Value(std::move(t));
}

Value Value::dict(std::vector<std::pair<Value, Value>> items) {
  auto d = std::make_shared<DictObj>();
  for (auto& [k, v] : items) d->set(k, std::move(v));
  return Value(std::move(d));
}

double Value::to_double() const {
  switch (type()) {
    case Type::Bool: return as_bool() ? 1.0 : 0.0;
    case Type::Int: return static_cast<double>(as_int());
    case Type::Float: return as_float();
    default: throw ScriptError("TypeError", "expected a number, got " + type_name());
  }
}

const std::vector<Value>* Value::sequence_items() const {
  if (type() == Type::List) return &as_list().items;
  if (type() == Type::Tuple) return &as_tuple().items;
  return nullptr;
}

bool Value::truthy() const {
  switch (type()) {
    case Type::None: return false;
    case Type::Bool: return as_bool();
    case Type::Int: return as_int() != 0;
    case Type::Float: return as_float() != 0.0;
    case Type::Str: return !as_str().empty();
    case Type::List: {
      const auto& l = as_list();
      if (l.array && l.items.size() > 1) {
        throw ScriptError("ValueError", "truth value of an array with more than one element is ambiguous");
      }
      if (l.array) return !l.items.empty() && l.items.front().truthy();
      return !l.items.empty();
    }
    case Type::Tuple: return !as_tuple().items.empty();
    case Type::Dict: return !as_dict().items.empty();
    case Type::Range: return as_range().size() > 0;
    default: return true;
  }
}

std::string Value::type_name() const {
  switch (type()) {
    case Type::None: return "NoneType";
    case Type::Bool: return "bool";
    case Type::Int: return "int";
    case Type::Float: return "float";
    case Type::Str: return "str";
    case Type::List: return as_list().array ? "ndarray" : "list";
    case Type::Tuple: return "tuple";
    case Type::Dict: return "dict";
    case Type::Function: return "function";
    case Type::Builtin: return "builtin_function";
    case Type::Module: return "module";
    case Type::Method: return "method";
    case Type::Range: return "range";
  }
  return "object";
}

namespace {

std::string float_repr(double d) {
  if (std::isnan(d)) return "nan";
  if (std::isinf(d)) return d > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), d);
  std::string s(buf, ptr);
  if (s.find_first_of(".en") == std::string::npos) s += ".0";
  return s;
}

std::string str_repr(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    switch (c) {
      case '\'': out += "\\'"; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  return out + "'";
}

std::string join_repr(const std::vector<Value>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += ", ";
    out += items[i].repr();
  }
  return out;
}

}  // namespace

std::string Value::repr() const {
  switch (type()) {
    case Type::None: return "None";
    case Type::Bool: return as_bool() ? "True" : "False";
    case Type::Int: return std::to_string(as_int());
    case Type::Float: return float_repr(as_float());
    case Type::Str: return str_repr(as_str());
    case Type::List: {
      const auto& l = as_list();
      return l.array ? "array([" + join_repr(l.items) + "])" : "[" + join_repr(l.items) + "]";
    }
    case Type::Tuple: {
      const auto& t = as_tuple().items;
      return t.size() == 1 ? "(" + t[0].repr() + ",)" : "(" + join_repr(t) + ")";
    }
    case Type::Dict: {
      std::string out = "{";
      bool first = true;
      for (const auto& [k, v] : as_dict().items) {
        if (!first) out += ", ";
        first = false;
        out += k.repr() + ": " + v.repr();
      }
      return out + "}";
    }
    case Type::Range: {
      const auto& r = as_range();
      return "range(" + std::to_string(r.start) + ", " + std::to_string(r.stop) +
             (r.step != 1 ? ", " + std::to_string(r.step) : "") + ")";
    }
    case Type::Builtin: return "<built-in function " + as_builtin()->name + ">";
    case Type::Module: return "<module '" + as_module()->name + "'>";
    case Type::Method: return "<bound method " + as_method()->name + ">";
    case Type::Function: return "<function>";
  }
  return "<object>";
}

bool Value::same_object(const Value& other) const {
  if (type() != other.type()) return false;
  switch (type()) {
    case Type::None: return true;
    case Type::Bool:
    case Type::Int:
    case Type::Float:
    case Type::Str: return *this == other;
    default: return v_ == other.v_;
  }
}

bool operator==(const Value& a, const Value& b) {
  using T = Value::Type;
  if (a.is_number() && b.is_number()) {
    if (a.type() != T::Float && b.type() != T::Float) {
      const auto ai = a.type() == T::Bool ? std::int64_t{a.as_bool()} : a.as_int();
      const auto bi = b.type() == T::Bool ? std::int64_t{b.as_bool()} : b.as_int();
      return ai == bi;
    }
    return a.to_double() == b.to_double();
  }
  if (a.type() != b.type()) return false;
  switch (a.type()) {
    case T::None: return true;
    case T::Str: return a.as_str() == b.as_str();
    case T::List:
    case T::Tuple: {
      const auto& x = *a.sequence_items();
      const auto& y = *b.sequence_items();
      if (x.size() != y.size()) return false;
      for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] == y[i])) return false;
      }
      return true;
    }
    case T::Dict: {
      const auto& x = a.as_dict().items;
      const auto& y = b.as_dict();
      if (x.size() != y.items.size()) return false;
      for (const auto& [k, v] : x) {
        const Value* other = y.find(k);
        if (!other || !(*other == v)) return false;
      }
      return true;
    }
    case T::Range: {
      const auto& x = a.as_range();
      const auto& y = b.as_range();
      return x.start == y.start && x.stop == y.stop && x.step == y.step;
    }
    default: return a.same_object(b);
  }
}

}  // namespace vmsched::script
