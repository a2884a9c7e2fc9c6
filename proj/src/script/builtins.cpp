// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include <algorithm>
#include <cmath>
#include <numeric>

#include "script/interp.hpp"

namespace vmsched::script {

namespace {

using Args = std::vector<Value>;
using Fn = std::function<Value(Interpreter&, Args&, Kwargs&)>;

Value builtin(const std::string& name, Fn fn) {
  auto b = std::make_shared<BuiltinObj>();
  b->name = name;
  b->fn = std::move(fn);
  return Value(std::move(b));
}

void arity(const std::string& name, const Args& a, std::size_t lo, std::size_t hi) {
  if (a.size() < lo || a.size() > hi) {
    raise("TypeError", name + "() takes " +
                           (lo == hi ? std::to_string(lo) : std::to_string(lo) + " to " + std::to_string(hi)) +
                           " arguments (" + std::to_string(a.size()) + " given)");
  }
}

void no_kwargs(const std::string& name, const Kwargs& kw) {
  if (!kw.empty()) raise("TypeError", name + "() takes no keyword arguments");
}

std::optional<Value> take_kw(Kwargs& kw, const std::string& key) {
  for (auto it = kw.begin(); it != kw.end(); ++it) {
    if (it->first == key) {
      Value v = std::move(it->second);
      kw.erase(it);
      return v;
    }
  }
  return std::nullopt;
}

void no_more_kwargs(const std::string& name, const Kwargs& kw) {
  if (!kw.empty()) raise("TypeError", name + "() got an unexpected keyword argument '" + kw.front().first + "'");
}

double number(const Value& v, const std::string& fn) {
  auto n = as_num(v);
  if (!n) raise("TypeError", fn + "() argument must be a number, not '" + v.type_name() + "'");
  return n->d;
}

Value make_array(std::vector<Value> items) {
  auto l = std::make_shared<ListObj>();
  l->items = std::move(items);
  l->array = true;
  return Value(std::move(l));
}

// Flattens nested sequences into doubles for numpy reductions.
void flatten(Interpreter& in, const Value& v, std::vector<double>& out) {
  if (auto n = as_num(v)) {
    out.push_back(n->d);
    return;
  }
  if (v.type() == Value::Type::Dict || v.type() == Value::Type::Str) {
    raise("TypeError", "unsupported operand for numpy reduction: '" + v.type_name() + "'");
  }
  in.iterate(v, [&](const Value& x) {
    flatten(in, x, out);
    return true;
  });
}

std::vector<double> flat(Interpreter& in, const Value& v) {
  std::vector<double> out;
  flatten(in, v, out);
  return out;
}

bool all_ints(Interpreter& in, const Value& v) {
  if (auto n = as_num(v)) return n->is_int;
  bool ok = true;
  in.iterate(v, [&](const Value& x) {
    ok = all_ints(in, x);
    return ok;
  });
  return ok;
}

Value min_max(Interpreter& in, Args& a, Kwargs& kw, bool want_max) {
  const std::string name = want_max ? "max" : "min";
  auto key = take_kw(kw, "key");
  auto dflt = take_kw(kw, "default");
  no_more_kwargs(name, kw);
  if (a.empty()) raise("TypeError", name + "() expected at least 1 argument");
  std::vector<Value> items = a.size() == 1 ? in.collect(a[0]) : a;
  if (items.empty()) {
    if (dflt) return *dflt;
    raise("ValueError", name + "() arg is an empty sequence");
  }
  std::size_t best = 0;
  Value best_key = key && !key->is_none() ? in.call_value(*key, {items[0]}) : items[0];
  for (std::size_t i = 1; i < items.size(); ++i) {
    Value k = key && !key->is_none() ? in.call_value(*key, {items[i]}) : items[i];
    if (want_max ? in.less(best_key, k) : in.less(k, best_key)) {
      best = i;
      best_key = std::move(k);
    }
  }
  return items[best];
}

Value sorted_values(Interpreter& in, std::vector<Value> items, Kwargs& kw) {
  auto key = take_kw(kw, "key");
  auto reverse = take_kw(kw, "reverse");
  no_more_kwargs("sorted", kw);
  std::vector<Value> keys;
  keys.reserve(items.size());
  for (const auto& x : items) keys.push_back(key && !key->is_none() ? in.call_value(*key, {x}) : x);
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  const bool rev = reverse && reverse->truthy();
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
    in.tick();
    return rev ? in.less(keys[y], keys[x]) : in.less(keys[x], keys[y]);
  });
  std::vector<Value> out;
  out.reserve(items.size());
  for (auto i : order) out.push_back(items[i]);
  return Value::list(std::move(out));
}

Value to_int(const Value& v) {
  switch (v.type()) {
    case Value::Type::Bool: return Value(std::int64_t{v.as_bool()});
    case Value::Type::Int: return v;
    case Value::Type::Float: {
      const double d = v.as_float();
      if (std::isnan(d)) raise("ValueError", "cannot convert float NaN to integer");
      if (!std::isfinite(d) || std::fabs(d) >= 9.2e18) raise("OverflowError", "cannot convert float to integer");
      return Value(static_cast<std::int64_t>(std::trunc(d)));
    }
    case Value::Type::Str: {
      try {
        std::size_t used = 0;
        const auto i = std::stoll(v.as_str(), &used);
        if (used != v.as_str().size()) throw std::invalid_argument("trailing");
        return Value(static_cast<std::int64_t>(i));
      } catch (const std::exception&) {
        raise("ValueError", "invalid literal for int(): " + v.repr());
      }
    }
    default: raise("TypeError", "int() argument must be a number, not '" + v.type_name() + "'");
  }
}

Value to_float(const Value& v) {
  if (auto n = as_num(v)) return Value(n->d);
  if (v.type() == Value::Type::Str) {
    std::string s = v.as_str();
    s.erase(0, s.find_first_not_of(" \t\n"));
    s.erase(s.find_last_not_of(" \t\n") + 1);
    std::string lower;
    for (char c : s) lower += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (lower == "inf" || lower == "+inf" || lower == "infinity" || lower == "+infinity") return Value(INFINITY);
    if (lower == "-inf" || lower == "-infinity") return Value(-INFINITY);
    if (lower == "nan" || lower == "+nan" || lower == "-nan") return Value(std::nan(""));
    try {
      std::size_t used = 0;
      const double d = std::stod(s, &used);
      if (used == s.size()) return Value(d);
    } catch (const std::exception&) {
    }
    raise("ValueError", "could not convert string to float: " + v.repr());
  }
  raise("TypeError", "float() argument must be a string or a number, not '" + v.type_name() + "'");
}

bool isinstance_of(const Value& v, const std::string& type) {
  using T = Value::Type;
  if (type == "int") return v.type() == T::Int || v.type() == T::Bool;
  if (type == "float") return v.type() == T::Float;
  if (type == "bool") return v.type() == T::Bool;
  if (type == "str") return v.type() == T::Str;
  if (type == "list") return v.type() == T::List;
  if (type == "tuple") return v.type() == T::Tuple;
  if (type == "dict") return v.type() == T::Dict;
  return false;
}

Value exception_ctor(const std::string& name) {
  return builtin(name, [name](Interpreter&, Args& a, Kwargs&) {
    return Value(a.empty() ? name : name + ": " + to_str(a[0]));
  });
}

std::unordered_map<std::string, Value> build_builtins() {
  std::unordered_map<std::string, Value> t;
  t["abs"] = builtin("abs", [](Interpreter& in, Args& a, Kwargs& kw) -> Value {
    no_kwargs("abs", kw);
    arity("abs", a, 1, 1);
    if (a[0].is_array()) {
      std::vector<Value> out;
      for (const auto& x : a[0].as_list().items) {
        auto n = as_num(x);
        if (!n) raise("TypeError", "bad operand type for abs()");
        out.push_back(n->is_int ? Value(n->i < 0 ? -n->i : n->i) : Value(std::fabs(n->d)));
      }
      return make_array(std::move(out));
    }
    (void)in;
    auto n = as_num(a[0]);
    if (!n) raise("TypeError", "bad operand type for abs(): '" + a[0].type_name() + "'");
    if (n->is_int) {
      if (n->i == std::numeric_limits<std::int64_t>::min()) raise("OverflowError", "integer overflow");
      return Value(n->i < 0 ? -n->i : n->i);
    }
    return Value(std::fabs(n->d));
  });
  t["min"] = builtin("min", [](Interpreter& in, Args& a, Kwargs& kw) { return min_max(in, a, kw, false); });
  t["max"] = builtin("max", [](Interpreter& in, Args& a, Kwargs& kw) { return min_max(in, a, kw, true); });
  t["sum"] = builtin("sum", [](Interpreter& in, Args& a, Kwargs& kw) {
    auto start = take_kw(kw, "start");
    no_more_kwargs("sum", kw);
    arity("sum", a, 1, 2);
    Value acc = a.size() == 2 ? a[1] : start.value_or(Value(0));
    in.iterate(a[0], [&](const Value& x) {
      acc = in.binary(BinOp::Add, acc, x);
      return true;
    });
    return acc;
  });
  t["len"] = builtin("len", [](Interpreter&, Args& a, Kwargs& kw) -> Value {
    no_kwargs("len", kw);
    arity("len", a, 1, 1);
    const Value& v = a[0];
    if (const auto* items = v.sequence_items()) return Value(static_cast<std::int64_t>(items->size()));
    if (v.type() == Value::Type::Str) return Value(static_cast<std::int64_t>(v.as_str().size()));
    if (v.type() == Value::Type::Dict) return Value(static_cast<std::int64_t>(v.as_dict().items.size()));
    if (v.type() == Value::Type::Range) return Value(v.as_range().size());
    raise("TypeError", "object of type '" + v.type_name() + "' has no len()");
  });
  t["range"] = builtin("range", [](Interpreter&, Args& a, Kwargs& kw) {
    no_kwargs("range", kw);
    arity("range", a, 1, 3);
    auto r = std::make_shared<RangeObj>();
    auto idx = [](const Value& v) {
      if (v.type() != Value::Type::Int && v.type() != Value::Type::Bool) {
        raise("TypeError", "'" + v.type_name() + "' object cannot be interpreted as an integer");
      }
      return v.type() == Value::Type::Bool ? std::int64_t{v.as_bool()} : v.as_int();
    };
    if (a.size() == 1) {
      r->stop = idx(a[0]);
    } else {
      r->start = idx(a[0]);
      r->stop = idx(a[1]);
      if (a.size() == 3) r->step = idx(a[2]);
    }
    if (r->step == 0) raise("ValueError", "range() arg 3 must not be zero");
    return Value(std::move(r));
  });
  t["float"] = builtin("float", [](Interpreter&, Args& a, Kwargs& kw) {
    no_kwargs("float", kw);
    arity("float", a, 0, 1);
    return a.empty() ? Value(0.0) : to_float(a[0]);
  });
  t["int"] = builtin("int", [](Interpreter&, Args& a, Kwargs& kw) {
    no_kwargs("int", kw);
    arity("int", a, 0, 1);
    return a.empty() ? Value(0) : to_int(a[0]);
  });
  t["bool"] = builtin("bool", [](Interpreter&, Args& a, Kwargs& kw) {
    no_kwargs("bool", kw);
    arity("bool", a, 0, 1);
    return Value(!a.empty() && a[0].truthy());
  });
  t["str"] = builtin("str", [](Interpreter&, Args& a, Kwargs& kw) {
    no_kwargs("str", kw);
    arity("str", a, 0, 1);
    return Value(a.empty() ? std::string() : to_str(a[0]));
  });
  t["round"] = builtin("round", [](Interpreter&, Args& a, Kwargs& kw) -> Value {
    auto nd = take_kw(kw, "ndigits");
    no_more_kwargs("round", kw);
    arity("round", a, 1, 2);
    if (a.size() == 2) nd = a[1];
    auto n = as_num(a[0]);
    if (!n) raise("TypeError", "type " + a[0].type_name() + " doesn't define __round__");
    if (!nd || nd->is_none()) {
      if (n->is_int) return Value(n->i);
      return to_int(Value(std::nearbyint(n->d)));
    }
    const auto digits = as_num(*nd);
    if (!digits || !digits->is_int) raise("TypeError", "ndigits must be an integer");
    if (n->is_int && digits->i >= 0) return Value(n->i);
    const double scale = std::pow(10.0, static_cast<double>(digits->i));
    const double r = std::nearbyint(n->d * scale) / scale;
    return std::isfinite(r) ? Value(r) : Value(n->d);
  });
  t["sorted"] = builtin("sorted", [](Interpreter& in, Args& a, Kwargs& kw) {
    arity("sorted", a, 1, 1);
    return sorted_values(in, in.collect(a[0]), kw);
  });
  t["reversed"] = builtin("reversed", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("reversed", kw);
    arity("reversed", a, 1, 1);
    auto items = in.collect(a[0]);
    std::reverse(items.begin(), items.end());
    return Value::list(std::move(items));
  });
  t["enumerate"] = builtin("enumerate", [](Interpreter& in, Args& a, Kwargs& kw) {
    auto start = take_kw(kw, "start");
    no_more_kwargs("enumerate", kw);
    arity("enumerate", a, 1, 2);
    if (a.size() == 2) start = a[1];
    std::int64_t i = start ? index_of(*start) : 0;
    std::vector<Value> out;
    in.iterate(a[0], [&](const Value& x) {
      out.push_back(Value::tuple({Value(i++), x}));
      in.check_size(out.size());
      return true;
    });
    return Value::list(std::move(out));
  });
  t["zip"] = builtin("zip", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("zip", kw);
    std::vector<std::vector<Value>> cols;
    std::size_t n = a.empty() ? 0 : SIZE_MAX;
    for (const auto& x : a) {
      cols.push_back(in.collect(x));
      n = std::min(n, cols.back().size());
    }
    std::vector<Value> out;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<Value> row;
      for (const auto& c : cols) row.push_back(c[i]);
      out.push_back(Value::tuple(std::move(row)));
    }
    return Value::list(std::move(out));
  });
  t["list"] = builtin("list", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("list", kw);
    arity("list", a, 0, 1);
    return Value::list(a.empty() ? std::vector<Value>{} : in.collect(a[0]));
  });
  t["tuple"] = builtin("tuple", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("tuple", kw);
    arity("tuple", a, 0, 1);
    return Value::tuple(a.empty() ? std::vector<Value>{} : in.collect(a[0]));
  });
  t["dict"] = builtin("dict", [](Interpreter& in, Args& a, Kwargs& kw) {
    arity("dict", a, 0, 1);
    auto d = std::make_shared<DictObj>();
    if (!a.empty()) {
      if (a[0].type() == Value::Type::Dict) {
        d->items = a[0].as_dict().items;
      } else {
        in.iterate(a[0], [&](const Value& pair) {
          auto kv = in.collect(pair);
          if (kv.size() != 2) raise("ValueError", "dictionary update sequence element has wrong length");
          d->set(kv[0], kv[1]);
          return true;
        });
      }
    }
    for (auto& [k, v] : kw) d->set(Value(k), v);
    return Value(std::move(d));
  });
  t["any"] = builtin("any", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("any", kw);
    arity("any", a, 1, 1);
    bool found = false;
    in.iterate(a[0], [&](const Value& x) {
      found = x.truthy();
      return !found;
    });
    return Value(found);
  });
  t["all"] = builtin("all", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("all", kw);
    arity("all", a, 1, 1);
    bool ok = true;
    in.iterate(a[0], [&](const Value& x) {
      ok = x.truthy();
      return ok;
    });
    return Value(ok);
  });
  t["pow"] = builtin("pow", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("pow", kw);
    arity("pow", a, 2, 2);
    return in.binary(BinOp::Pow, a[0], a[1]);
  });
  t["divmod"] = builtin("divmod", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("divmod", kw);
    arity("divmod", a, 2, 2);
    return Value::tuple({in.binary(BinOp::FloorDiv, a[0], a[1]), in.binary(BinOp::Mod, a[0], a[1])});
  });
  t["map"] = builtin("map", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("map", kw);
    arity("map", a, 2, 2);
    std::vector<Value> out;
    in.iterate(a[1], [&](const Value& x) {
      out.push_back(in.call_value(a[0], {x}));
      return true;
    });
    return Value::list(std::move(out));
  });
  t["filter"] = builtin("filter", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("filter", kw);
    arity("filter", a, 2, 2);
    std::vector<Value> out;
    in.iterate(a[1], [&](const Value& x) {
      const bool keep = a[0].is_none() ? x.truthy() : in.call_value(a[0], {x}).truthy();
      if (keep) out.push_back(x);
      return true;
    });
    return Value::list(std::move(out));
  });
  t["isinstance"] = builtin("isinstance", [](Interpreter&, Args& a, Kwargs& kw) {
    no_kwargs("isinstance", kw);
    arity("isinstance", a, 2, 2);
    auto check = [&](const Value& t) {
      if (t.type() != Value::Type::Builtin) raise("TypeError", "isinstance() arg 2 must be a type");
      return isinstance_of(a[0], t.as_builtin()->name);
    };
    if (a[1].type() == Value::Type::Tuple) {
      for (const auto& t : a[1].as_tuple().items) {
        if (check(t)) return Value(true);
      }
      return Value(false);
    }
    return Value(check(a[1]));
  });
  t["print"] = builtin("print", [](Interpreter&, Args&, Kwargs&) { return Value(); });
  for (const char* name : {"Exception", "ValueError", "TypeError", "ZeroDivisionError", "IndexError",
                           "KeyError", "RuntimeError", "ArithmeticError", "OverflowError", "AssertionError"}) {
    t[name] = exception_ctor(name);
  }
  return t;
}

// -- math -------------------------------------------------------------------

Value unary_math(const std::string& name, double (*fn)(double), bool (*domain)(double)) {
  return builtin(name, [name, fn, domain](Interpreter&, Args& a, Kwargs& kw) {
    no_kwargs(name, kw);
    arity(name, a, 1, 1);
    const double x = number(a[0], name);
    if (domain && !domain(x)) raise("ValueError", "math domain error");
    const double r = fn(x);
    if (std::isinf(r) && std::isfinite(x)) raise("OverflowError", "math range error");
    return Value(r);
  });
}

Value math_module() {
  auto m = std::make_shared<ModuleObj>();
  m->name = "math";
  auto& at = m->attrs;
  at.emplace_back("pi", Value(M_PI));
  at.emplace_back("e", Value(M_E));
  at.emplace_back("inf", Value(INFINITY));
  at.emplace_back("nan", Value(std::nan("")));
  at.emplace_back("sqrt", unary_math("sqrt", [](double x) { return std::sqrt(x); }, [](double x) { return x >= 0; }));
  at.emplace_back("exp", unary_math("exp", [](double x) { return std::exp(x); }, nullptr));
  at.emplace_back("log2", unary_math("log2", [](double x) { return std::log2(x); }, [](double x) { return x > 0; }));
  at.emplace_back("log10", unary_math("log10", [](double x) { return std::log10(x); }, [](double x) { return x > 0; }));
  at.emplace_back("log1p", unary_math("log1p", [](double x) { return std::log1p(x); }, [](double x) { return x > -1; }));
  at.emplace_back("fabs", unary_math("fabs", [](double x) { return std::fabs(x); }, nullptr));
  at.emplace_back("tanh", unary_math("tanh", [](double x) { return std::tanh(x); }, nullptr));
  at.emplace_back("sin", unary_math("sin", [](double x) { return std::sin(x); }, nullptr));
  at.emplace_back("cos", unary_math("cos", [](double x) { return std::cos(x); }, nullptr));
  at.emplace_back("atan", unary_math("atan", [](double x) { return std::atan(x); }, nullptr));
  at.emplace_back("log", builtin("log", [](Interpreter&, Args& a, Kwargs& kw) {
    no_kwargs("log", kw);
    arity("log", a, 1, 2);
    const double x = number(a[0], "log");
    if (x <= 0) raise("ValueError", "math domain error");
    if (a.size() == 1) return Value(std::log(x));
    const double b = number(a[1], "log");
    if (b <= 0 || b == 1) raise("ValueError", "math domain error");
    return Value(std::log(x) / std::log(b));
  }));
  auto rounding = [](const std::string& name, double (*fn)(double)) {
    return builtin(name, [name, fn](Interpreter&, Args& a, Kwargs& kw) {
      no_kwargs(name, kw);
      arity(name, a, 1, 1);
      auto n = as_num(a[0]);
      if (!n) raise("TypeError", "must be real number");
      if (n->is_int) return Value(n->i);
      return to_int(Value(fn(n->d)));
    });
  };
  at.emplace_back("floor", rounding("floor", [](double x) { return std::floor(x); }));
  at.emplace_back("ceil", rounding("ceil", [](double x) { return std::ceil(x); }));
  at.emplace_back("pow", builtin("pow", [](Interpreter&, Args& a, Kwargs& kw) {
    no_kwargs("pow", kw);
    arity("pow", a, 2, 2);
    const double x = number(a[0], "pow"), y = number(a[1], "pow");
    if (x < 0 && std::floor(y) != y) raise("ValueError", "math domain error");
    if (x == 0 && y < 0) raise("ValueError", "math domain error");
    return Value(std::pow(x, y));
  }));
  at.emplace_back("hypot", builtin("hypot", [](Interpreter&, Args& a, Kwargs& kw) {
    no_kwargs("hypot", kw);
    double s = 0;
    for (const auto& x : a) s += number(x, "hypot") * number(x, "hypot");
    return Value(std::sqrt(s));
  }));
  auto predicate = [](const std::string& name, bool (*fn)(double)) {
    return builtin(name, [name, fn](Interpreter&, Args& a, Kwargs& kw) {
      no_kwargs(name, kw);
      arity(name, a, 1, 1);
      return Value(fn(number(a[0], name)));
    });
  };
  at.emplace_back("isfinite", predicate("isfinite", [](double x) { return std::isfinite(x); }));
  at.emplace_back("isinf", predicate("isinf", [](double x) { return std::isinf(x); }));
  at.emplace_back("isnan", predicate("isnan", [](double x) { return std::isnan(x); }));
  return Value(std::move(m));
}

// -- numpy subset -----------------------------------------------------------

Value reduction(const std::string& name, std::function<Value(Interpreter&, const Value&)> fn) {
  return builtin(name, [name, fn](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs(name, kw);
    arity(name, a, 1, 1);
    return fn(in, a[0]);
  });
}

double mean_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nan("");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double var_of(const std::vector<double>& xs) {
  if (xs.empty()) return std::nan("");
  const double m = mean_of(xs);
  double s = 0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size());
}

Value np_map(Interpreter& in, const Value& v, const std::function<double(double)>& f) {
  if (auto n = as_num(v)) return Value(f(n->d));
  std::vector<Value> out;
  in.iterate(v, [&](const Value& x) {
    out.push_back(np_map(in, x, f));
    return true;
  });
  return make_array(std::move(out));
}

Value np_elementwise(const std::string& name, double (*fn)(double)) {
  return builtin(name, [name, fn](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs(name, kw);
    arity(name, a, 1, 1);
    return np_map(in, a[0], fn);
  });
}

Value to_array(Interpreter& in, const Value& v) {
  if (as_num(v)) return v;
  std::vector<Value> out;
  in.iterate(v, [&](const Value& x) {
    out.push_back(x.sequence_items() ? to_array(in, x) : x);
    return true;
  });
  in.check_size(out.size());
  return make_array(std::move(out));
}

Value numpy_module() {
  auto m = std::make_shared<ModuleObj>();
  m->name = "numpy";
  auto& at = m->attrs;
  at.emplace_back("pi", Value(M_PI));
  at.emplace_back("e", Value(M_E));
  at.emplace_back("inf", Value(INFINITY));
  at.emplace_back("nan", Value(std::nan("")));
  auto array = builtin("array", [](Interpreter& in, Args& a, Kwargs& kw) {
    take_kw(kw, "dtype");
    no_more_kwargs("array", kw);
    arity("array", a, 1, 1);
    return to_array(in, a[0]);
  });
  at.emplace_back("array", array);
  at.emplace_back("asarray", array);
  at.emplace_back("sum", reduction("sum", [](Interpreter& in, const Value& v) {
    const auto xs = flat(in, v);
    if (all_ints(in, v)) {
      std::int64_t s = 0;
      for (double x : xs) s += static_cast<std::int64_t>(x);
      return Value(s);
    }
    return Value(std::accumulate(xs.begin(), xs.end(), 0.0));
  }));
  at.emplace_back("prod", reduction("prod", [](Interpreter& in, const Value& v) {
    const auto xs = flat(in, v);
    return Value(std::accumulate(xs.begin(), xs.end(), 1.0, std::multiplies<>()));
  }));
  at.emplace_back("mean", reduction("mean", [](Interpreter& in, const Value& v) { return Value(mean_of(flat(in, v))); }));
  at.emplace_back("average", reduction("average", [](Interpreter& in, const Value& v) { return Value(mean_of(flat(in, v))); }));
  at.emplace_back("var", reduction("var", [](Interpreter& in, const Value& v) { return Value(var_of(flat(in, v))); }));
  at.emplace_back("std", reduction("std", [](Interpreter& in, const Value& v) { return Value(std::sqrt(var_of(flat(in, v)))); }));
  at.emplace_back("median", reduction("median", [](Interpreter& in, const Value& v) {
    auto xs = flat(in, v);
    if (xs.empty()) return Value(std::nan(""));
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return Value(n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]));
  }));
  auto extreme = [](const std::string& name, bool want_max, bool want_index) {
    return reduction(name, [name, want_max, want_index](Interpreter& in, const Value& v) {
      const auto xs = flat(in, v);
      if (xs.empty()) raise("ValueError", "zero-size array to reduction operation " + name);
      std::size_t best = 0;
      for (std::size_t i = 1; i < xs.size(); ++i) {
        if (std::isnan(xs[best])) break;
        if (std::isnan(xs[i]) || (want_max ? xs[i] > xs[best] : xs[i] < xs[best])) best = i;
      }
      if (want_index) return Value(static_cast<std::int64_t>(best));
      if (all_ints(in, v)) return Value(static_cast<std::int64_t>(xs[best]));
      return Value(xs[best]);
    });
  };
  at.emplace_back("max", extreme("max", true, false));
  at.emplace_back("amax", extreme("amax", true, false));
  at.emplace_back("min", extreme("min", false, false));
  at.emplace_back("amin", extreme("amin", false, false));
  at.emplace_back("argmax", extreme("argmax", true, true));
  at.emplace_back("argmin", extreme("argmin", false, true));
  at.emplace_back("abs", np_elementwise("abs", [](double x) { return std::fabs(x); }));
  at.emplace_back("sqrt", np_elementwise("sqrt", [](double x) { return std::sqrt(x); }));
  at.emplace_back("exp", np_elementwise("exp", [](double x) { return std::exp(x); }));
  at.emplace_back("log", np_elementwise("log", [](double x) { return std::log(x); }));
  at.emplace_back("log1p", np_elementwise("log1p", [](double x) { return std::log1p(x); }));
  at.emplace_back("square", np_elementwise("square", [](double x) { return x * x; }));
  at.emplace_back("tanh", np_elementwise("tanh", [](double x) { return std::tanh(x); }));
  at.emplace_back("floor", np_elementwise("floor", [](double x) { return std::floor(x); }));
  at.emplace_back("ceil", np_elementwise("ceil", [](double x) { return std::ceil(x); }));
  at.emplace_back("isfinite", reduction("isfinite", [](Interpreter& in, const Value& v) {
    return np_map(in, v, [](double x) { return std::isfinite(x) ? 1.0 : 0.0; });
  }));
  at.emplace_back("clip", builtin("clip", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("clip", kw);
    arity("clip", a, 3, 3);
    const double lo = number(a[1], "clip"), hi = number(a[2], "clip");
    return np_map(in, a[0], [lo, hi](double x) { return std::min(std::max(x, lo), hi); });
  }));
  auto pairwise = [](const std::string& name, bool want_max) {
    return builtin(name, [name, want_max](Interpreter& in, Args& a, Kwargs& kw) -> Value {
      no_kwargs(name, kw);
      arity(name, a, 2, 2);
      if (as_num(a[0]) && as_num(a[1])) {
        const double x = as_num(a[0])->d, y = as_num(a[1])->d;
        return Value(want_max ? std::max(x, y) : std::min(x, y));
      }
      const Value picked = in.compare(want_max ? CmpOp::Ge : CmpOp::Le, to_array(in, a[0]), to_array(in, a[1]));
      const auto xa = flat(in, a[0]);
      const auto xb = flat(in, a[1]);
      std::vector<Value> out;
      const auto& mask = picked.as_list().items;
      for (std::size_t i = 0; i < mask.size(); ++i) {
        out.push_back(Value(mask[i].truthy() ? xa[xa.size() == 1 ? 0 : i] : xb[xb.size() == 1 ? 0 : i]));
      }
      return make_array(std::move(out));
    });
  };
  at.emplace_back("maximum", pairwise("maximum", true));
  at.emplace_back("minimum", pairwise("minimum", false));
  at.emplace_back("dot", builtin("dot", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("dot", kw);
    arity("dot", a, 2, 2);
    const auto x = flat(in, a[0]);
    const auto y = flat(in, a[1]);
    if (x.size() != y.size()) raise("ValueError", "shapes not aligned");
    return Value(std::inner_product(x.begin(), x.end(), y.begin(), 0.0));
  }));
  auto filled = [](const std::string& name, double v) {
    return builtin(name, [name, v](Interpreter& in, Args& a, Kwargs& kw) {
      take_kw(kw, "dtype");
      no_more_kwargs(name, kw);
      arity(name, a, 1, 1);
      auto n = as_num(a[0]);
      if (!n || !n->is_int || n->i < 0) raise("TypeError", name + "() expects a non-negative integer size");
      in.check_size(static_cast<std::size_t>(n->i));
      return make_array(std::vector<Value>(static_cast<std::size_t>(n->i), Value(v)));
    });
  };
  at.emplace_back("zeros", filled("zeros", 0.0));
  at.emplace_back("ones", filled("ones", 1.0));
  return Value(std::move(m));
}

// -- random (priority policies only) -----------------------------------------

Value random_module() {
  auto m = std::make_shared<ModuleObj>();
  m->name = "random";
  auto& at = m->attrs;
  at.emplace_back("random", builtin("random", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("random", kw);
    arity("random", a, 0, 0);
    return Value(in.rng().uniform());
  }));
  at.emplace_back("uniform", builtin("uniform", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("uniform", kw);
    arity("uniform", a, 2, 2);
    const double lo = number(a[0], "uniform"), hi = number(a[1], "uniform");
    return Value(lo + (hi - lo) * in.rng().uniform());
  }));
  at.emplace_back("randint", builtin("randint", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("randint", kw);
    arity("randint", a, 2, 2);
    auto lo = as_num(a[0]), hi = as_num(a[1]);
    if (!lo || !hi || !lo->is_int || !hi->is_int || hi->i < lo->i) raise("ValueError", "empty range for randint()");
    return Value(lo->i + static_cast<std::int64_t>(in.rng().index(static_cast<std::size_t>(hi->i - lo->i + 1))));
  }));
  at.emplace_back("choice", builtin("choice", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("choice", kw);
    arity("choice", a, 1, 1);
    auto items = in.collect(a[0]);
    if (items.empty()) raise("IndexError", "cannot choose from an empty sequence");
    return items[in.rng().index(items.size())];
  }));
  at.emplace_back("gauss", builtin("gauss", [](Interpreter& in, Args& a, Kwargs& kw) {
    no_kwargs("gauss", kw);
    arity("gauss", a, 2, 2);
    const double mu = number(a[0], "gauss"), sigma = number(a[1], "gauss");
    const double u1 = 1.0 - in.rng().uniform(), u2 = in.rng().uniform();
    return Value(mu + sigma * std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2));
  }));
  return Value(std::move(m));
}

// -- methods ----------------------------------------------------------------

const std::vector<std::string>& methods_for(Value::Type t, bool array) {
  static const std::vector<std::string> list = {"append", "extend", "pop", "index", "count",
                                                "insert", "sort", "copy", "reverse", "remove"};
  static const std::vector<std::string> arr = {"sum", "mean", "max", "min", "std", "var",
                                               "argmax", "argmin", "tolist", "copy"};
  static const std::vector<std::string> tuple = {"index", "count"};
  static const std::vector<std::string> dict = {"get", "keys", "values", "items", "copy",
                                                "update", "setdefault", "pop"};
  static const std::vector<std::string> str = {"join", "split", "lower", "upper", "strip",
                                               "startswith", "endswith", "replace"};
  static const std::vector<std::string> none;
  switch (t) {
    case Value::Type::List: return array ? arr : list;
    case Value::Type::Tuple: return tuple;
    case Value::Type::Dict: return dict;
    case Value::Type::Str: return str;
    default: return none;
  }
}

}  // namespace

const std::unordered_map<std::string, Value>& builtin_table() {
  static const auto table = build_builtins();
  return table;
}

std::optional<Value> make_module(const std::string& name) {
  static const Value math = math_module();
  static const Value numpy = numpy_module();
  static const Value random = random_module();
  if (name == "math") return math;
  if (name == "numpy") return numpy;
  if (name == "random") return random;
  return std::nullopt;
}

bool has_method(const Value& self, const std::string& name) {
  const auto& ms = methods_for(self.type(), self.is_array());
  return std::find(ms.begin(), ms.end(), name) != ms.end();
}

Value call_method(Interpreter& in, const Value& self, const std::string& name, Args& a, Kwargs& kw) {
  using T = Value::Type;
  const std::string qual = self.type_name() + "." + name;
  if (self.is_array()) {
    if (name == "tolist") {
      std::vector<Value> out;
      for (const auto& x : self.as_list().items) {
        out.push_back(x.is_array() ? call_method(in, x, "tolist", a, kw) : x);
      }
      return Value::list(std::move(out));
    }
    if (name == "copy") return make_array(self.as_list().items);
    no_kwargs(qual, kw);
    arity(qual, a, 0, 0);
    const Value* fn = make_module("numpy")->as_module()->find(name);
    Args args{self};
    Kwargs none;
    return fn->as_builtin()->fn(in, args, none);
  }
  if (self.type() == T::List) {
    auto& items = self.as_list().items;
    if (name == "sort") {
      arity(qual, a, 0, 0);
      Value sorted = sorted_values(in, items, kw);
      items = sorted.as_list().items;
      return Value();
    }
    no_kwargs(qual, kw);
    if (name == "append") {
      arity(qual, a, 1, 1);
      items.push_back(a[0]);
      in.check_size(items.size());
      return Value();
    }
    if (name == "extend") {
      arity(qual, a, 1, 1);
      auto more = in.collect(a[0]);
      in.check_size(items.size() + more.size());
      items.insert(items.end(), more.begin(), more.end());
      return Value();
    }
    if (name == "pop") {
      arity(qual, a, 0, 1);
      if (items.empty()) raise("IndexError", "pop from empty list");
      std::int64_t i = a.empty() ? -1 : index_of(a[0]);
      if (i < 0) i += static_cast<std::int64_t>(items.size());
      if (i < 0 || i >= static_cast<std::int64_t>(items.size())) raise("IndexError", "pop index out of range");
      Value v = items[static_cast<std::size_t>(i)];
      items.erase(items.begin() + i);
      return v;
    }
    if (name == "insert") {
      arity(qual, a, 2, 2);
      std::int64_t i = index_of(a[0]);
      const auto n = static_cast<std::int64_t>(items.size());
      if (i < 0) i = std::max<std::int64_t>(0, i + n);
      i = std::min(i, n);
      items.insert(items.begin() + i, a[1]);
      in.check_size(items.size());
      return Value();
    }
    if (name == "remove") {
      arity(qual, a, 1, 1);
      for (auto it = items.begin(); it != items.end(); ++it) {
        if (*it == a[0]) {
          items.erase(it);
          return Value();
        }
      }
      raise("ValueError", "list.remove(x): x not in list");
    }
    if (name == "reverse") {
      arity(qual, a, 0, 0);
      std::reverse(items.begin(), items.end());
      return Value();
    }
    if (name == "copy") {
      arity(qual, a, 0, 0);
      return Value::list(items);
    }
  }
  if (self.type() == T::List || self.type() == T::Tuple) {
    no_kwargs(qual, kw);
    const auto& items = *self.sequence_items();
    if (name == "index") {
      arity(qual, a, 1, 1);
      for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i] == a[0]) return Value(static_cast<std::int64_t>(i));
      }
      raise("ValueError", a[0].repr() + " is not in list");
    }
    if (name == "count") {
      arity(qual, a, 1, 1);
      std::int64_t c = 0;
      for (const auto& x : items) c += x == a[0] ? 1 : 0;
      return Value(c);
    }
  }
  if (self.type() == T::Dict) {
    auto& d = self.as_dict();
    if (name == "update") {
      arity(qual, a, 0, 1);
      if (!a.empty()) {
        if (a[0].type() != T::Dict) raise("TypeError", "dict.update() expects a dict");
        for (const auto& [k, v] : a[0].as_dict().items) d.set(k, v);
      }
      for (auto& [k, v] : kw) d.set(Value(k), v);
      return Value();
    }
    no_kwargs(qual, kw);
    if (name == "get") {
      arity(qual, a, 1, 2);
      const Value* v = d.find(a[0]);
      return v ? *v : (a.size() == 2 ? a[1] : Value());
    }
    if (name == "keys" || name == "values" || name == "items") {
      arity(qual, a, 0, 0);
      std::vector<Value> out;
      for (const auto& [k, v] : d.items) {
        out.push_back(name == "keys" ? k : name == "values" ? v : Value::tuple({k, v}));
      }
      return Value::list(std::move(out));
    }
    if (name == "copy") {
      arity(qual, a, 0, 0);
      auto c = std::make_shared<DictObj>(d);
      return Value(std::move(c));
    }
    if (name == "setdefault") {
      arity(qual, a, 1, 2);
      if (const Value* v = d.find(a[0])) return *v;
      Value dflt = a.size() == 2 ? a[1] : Value();
      d.set(a[0], dflt);
      return dflt;
    }
    if (name == "pop") {
      arity(qual, a, 1, 2);
      for (auto it = d.items.begin(); it != d.items.end(); ++it) {
        if (it->first == a[0]) {
          Value v = it->second;
          d.items.erase(it);
          return v;
        }
      }
      if (a.size() == 2) return a[1];
      raise("KeyError", a[0].repr());
    }
  }
  if (self.type() == T::Str) {
    no_kwargs(qual, kw);
    const std::string& s = self.as_str();
    if (name == "join") {
      arity(qual, a, 1, 1);
      std::string out;
      bool first = true;
      in.iterate(a[0], [&](const Value& x) {
        if (x.type() != T::Str) raise("TypeError", "sequence item: expected str instance");
        if (!first) out += s;
        first = false;
        out += x.as_str();
        in.check_size(out.size());
        return true;
      });
      return Value(std::move(out));
    }
    if (name == "lower" || name == "upper") {
      std::string out = s;
      for (auto& c : out) {
        c = static_cast<char>(name == "lower" ? std::tolower(static_cast<unsigned char>(c))
                                              : std::toupper(static_cast<unsigned char>(c)));
      }
      return Value(std::move(out));
    }
    if (name == "strip") {
      const auto b = s.find_first_not_of(" \t\n\r");
      if (b == std::string::npos) return Value(std::string());
      return Value(s.substr(b, s.find_last_not_of(" \t\n\r") - b + 1));
    }
    if (name == "startswith" || name == "endswith") {
      arity(qual, a, 1, 1);
      if (a[0].type() != T::Str) raise("TypeError", name + " arg must be str");
      const auto& p = a[0].as_str();
      if (p.size() > s.size()) return Value(false);
      return Value(name == "startswith" ? s.compare(0, p.size(), p) == 0
                                        : s.compare(s.size() - p.size(), p.size(), p) == 0);
    }
    if (name == "replace") {
      arity(qual, a, 2, 2);
      if (a[0].type() != T::Str || a[1].type() != T::Str) raise("TypeError", "replace() args must be str");
      const auto& from = a[0].as_str();
      const auto& to = a[1].as_str();
      if (from.empty()) return self;
      std::string out;
      std::size_t pos = 0;
      while (true) {
        const auto hit = s.find(from, pos);
        if (hit == std::string::npos) break;
        out += s.substr(pos, hit - pos) + to;
        pos = hit + from.size();
        in.check_size(out.size());
      }
      return Value(out + s.substr(pos));
    }
    if (name == "split") {
      arity(qual, a, 0, 1);
      std::vector<Value> out;
      if (a.empty() || a[0].is_none()) {
        std::size_t i = 0;
        while (i < s.size()) {
          while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
          std::size_t j = i;
          while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
          if (j > i) out.push_back(Value(s.substr(i, j - i)));
          i = j;
        }
      } else {
        if (a[0].type() != T::Str || a[0].as_str().empty()) raise("ValueError", "empty separator");
        const auto& sep = a[0].as_str();
        std::size_t pos = 0;
        while (true) {
          const auto hit = s.find(sep, pos);
          out.push_back(Value(s.substr(pos, hit == std::string::npos ? std::string::npos : hit - pos)));
          if (hit == std::string::npos) break;
          pos = hit + sep.size();
        }
      }
      return Value::list(std::move(out));
    }
  }
  raise("AttributeError", "'" + self.type_name() + "' object has no attribute '" + name + "'");
}

std::int64_t index_of(const Value& v) {
  if (v.type() == Value::Type::Int) return v.as_int();
  if (v.type() == Value::Type::Bool) return v.as_bool() ? 1 : 0;
  raise("TypeError", "'" + v.type_name() + "' object cannot be interpreted as an integer");
}

}  // namespace vmsched::script
