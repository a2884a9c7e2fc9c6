// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include "script/interp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <new>
#include <set>

#include "vmsched/error.hpp"

namespace vmsched::script {

namespace {

std::int64_t normalize_index(std::int64_t i, std::size_t size) {
  const auto n = static_cast<std::int64_t>(size);
  if (i < 0) i += n;
  if (i < 0 || i >= n) raise("IndexError", "index out of range");
  return i;
}

std::int64_t index_value(const Value& v) {
  if (v.type() == Value::Type::Int) return v.as_int();
  if (v.type() == Value::Type::Bool) return v.as_bool() ? 1 : 0;
  raise("TypeError", "indices must be integers, not " + v.type_name());
}

Value make_list(std::vector<Value> items, bool array) {
  auto l = std::make_shared<ListObj>();
  l->items = std::move(items);
  l->array = array;
  return Value(std::move(l));
}

double py_fmod(double a, double b) {
  double m = std::fmod(a, b);
  if (m != 0.0 && ((m < 0) != (b < 0))) m += b;
  return m;
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  std::int64_t q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
  return q;
}

}  // namespace

std::optional<Num> as_num(const Value& v) {
  switch (v.type()) {
    case Value::Type::Bool: return Num{true, v.as_bool() ? 1 : 0, v.as_bool() ? 1.0 : 0.0};
    case Value::Type::Int: return Num{true, v.as_int(), static_cast<double>(v.as_int())};
    case Value::Type::Float: return Num{false, 0, v.as_float()};
    default: return std::nullopt;
  }
}

std::string to_str(const Value& v) {
  if (v.type() == Value::Type::Str) return v.as_str();
  return v.repr();
}

// ---------------------------------------------------------------------------
// Lifecycle

Interpreter::Interpreter(std::shared_ptr<const ProgramImpl> program, const Limits& limits,
                         std::uint64_t seed)
    : program_(std::move(program)), limits_(limits), rng_(seed) {
  globals_ = std::make_shared<Scope>();
  scope_ = globals_;
  deadline_ = std::chrono::steady_clock::now() + limits_.max_wall;
}

Interpreter::~Interpreter() {
  // Closures can hold their defining scope; clearing breaks the cycles.
  for (auto& s : captured_) s->vars.clear();
  globals_->vars.clear();
}

void Interpreter::tick() {
  ++steps_;
  if (steps_ > limits_.max_steps) {
    throw Error(ErrorCode::Timeout, "step budget of " + std::to_string(limits_.max_steps) + " exhausted");
  }
  if ((steps_ & 1023) == 0 && std::chrono::steady_clock::now() > deadline_) {
    throw Error(ErrorCode::Timeout, "wall-clock budget of " + std::to_string(limits_.max_wall.count()) +
                                        " ms exhausted");
  }
}

void Interpreter::check_size(std::size_t n) const {
  if (n > limits_.max_collection) {
    throw Error(ErrorCode::RuntimeFault, "collection of " + std::to_string(n) + " elements exceeds the limit");
  }
}

void Interpreter::load_module() {
  scope_ = globals_;
  const Flow f = exec_block(program_->body);
  if (f != Flow::Normal) raise("SyntaxError", "'return', 'break' or 'continue' outside function");
}

Value Interpreter::call_global(std::string_view name, std::vector<Value> args) {
  auto it = globals_->vars.find(std::string(name));
  if (it == globals_->vars.end()) raise("NameError", "function '" + std::string(name) + "' is not defined");
  return call_value(it->second, std::move(args));
}

// ---------------------------------------------------------------------------
// Calls

Value Interpreter::make_function(const std::shared_ptr<const FunctionDef>& def) {
  auto fn = std::make_shared<FunctionObj>();
  fn->def = def;
  if (scope_ != globals_) {
    fn->closure = scope_;
    captured_.push_back(scope_);
  }
  for (const auto& p : def->params) {
    if (p.default_value) {
      fn->defaults.emplace_back(eval(*p.default_value));
    } else {
      fn->defaults.emplace_back(std::nullopt);
    }
  }
  return Value(std::move(fn));
}

Value Interpreter::call_value(const Value& callee, std::vector<Value> args, Kwargs kwargs) {
  tick();
  switch (callee.type()) {
    case Value::Type::Function: return call_function(*callee.as_function(), args, kwargs);
    case Value::Type::Builtin: return callee.as_builtin()->fn(*this, args, kwargs);
    case Value::Type::Method: {
      const auto& m = *callee.as_method();
      return call_method(*this, m.self, m.name, args, kwargs);
    }
    default: raise("TypeError", "'" + callee.type_name() + "' object is not callable");
  }
}

Value Interpreter::call_function(const FunctionObj& fn, std::vector<Value>& args, Kwargs& kwargs) {
  const auto& def = *fn.def;
  if (depth_ >= limits_.max_depth) {
    throw Error(ErrorCode::RuntimeFault, "maximum call depth of " + std::to_string(limits_.max_depth) +
                                             " exceeded");
  }
  if (args.size() > def.params.size()) {
    raise("TypeError", def.name + "() takes " + std::to_string(def.params.size()) + " positional arguments but " +
                           std::to_string(args.size()) + " were given");
  }
  auto local = std::make_shared<Scope>();
  local->parent = fn.closure;
  std::vector<bool> bound(def.params.size(), false);
  for (std::size_t i = 0; i < args.size(); ++i) {
    local->vars[def.params[i].name] = std::move(args[i]);
    bound[i] = true;
  }
  for (auto& [name, value] : kwargs) {
    std::size_t i = 0;
    while (i < def.params.size() && def.params[i].name != name) ++i;
    if (i == def.params.size()) raise("TypeError", def.name + "() got an unexpected keyword argument '" + name + "'");
    if (bound[i]) raise("TypeError", def.name + "() got multiple values for argument '" + name + "'");
    local->vars[name] = std::move(value);
    bound[i] = true;
  }
  for (std::size_t i = 0; i < def.params.size(); ++i) {
    if (bound[i]) continue;
    if (!fn.defaults[i]) raise("TypeError", def.name + "() missing required argument '" + def.params[i].name + "'");
    local->vars[def.params[i].name] = *fn.defaults[i];
  }

  auto saved = scope_;
  scope_ = local;
  ++depth_;
  struct Restore {
    Interpreter* self;
    std::shared_ptr<Scope> saved;
    ~Restore() {
      self->scope_ = std::move(saved);
      --self->depth_;
    }
  } restore{this, std::move(saved)};

  if (def.lambda_body) return eval(*def.lambda_body);
  ret_ = Value();
  const Flow f = exec_block(def.body);
  if (f == Flow::Return) {
    Value out = std::move(ret_);
    ret_ = Value();
    return out;
  }
  if (f != Flow::Normal) raise("SyntaxError", "'break' or 'continue' outside loop");
  return Value();
}

// ---------------------------------------------------------------------------
// Statements

Interpreter::Flow Interpreter::exec_block(const Block& block) {
  for (const auto& s : block) {
    const Flow f = exec(*s);
    if (f != Flow::Normal) return f;
  }
  return Flow::Normal;
}

Interpreter::Flow Interpreter::exec(const Stmt& s) {
  tick();
  switch (s.kind) {
    case Stmt::Kind::ExprStmt: eval(*s.value); return Flow::Normal;
    case Stmt::Kind::Assign: {
      Value v = eval(*s.value);
      for (const auto& t : s.targets) assign(*t, v);
      return Flow::Normal;
    }
    case Stmt::Kind::AugAssign: {
      const Expr& t = *s.targets.front();
      if (t.kind == Expr::Kind::Name) {
        Value cur = lookup(t.name, t);
        Value rhs = eval(*s.value);
        if (s.aug_op == BinOp::Add && cur.type() == Value::Type::List && !cur.is_array()) {
          auto items = collect(rhs);
          auto& dst = cur.as_list().items;
          check_size(dst.size() + items.size());
          dst.insert(dst.end(), items.begin(), items.end());
          scope_->vars[t.name] = cur;
        } else {
          scope_->vars[t.name] = binary(s.aug_op, cur, rhs);
        }
        return Flow::Normal;
      }
      Value obj = eval(*t.children[0]);
      Value key = eval(*t.children[1]);
      Value cur = get_item(obj, key);
      set_item(obj, key, binary(s.aug_op, cur, eval(*s.value)));
      return Flow::Normal;
    }
    case Stmt::Kind::Return:
      ret_ = s.value ? eval(*s.value) : Value();
      return Flow::Return;
    case Stmt::Kind::If:
      if (eval(*s.value).truthy()) return exec_block(s.body);
      return exec_block(s.orelse);
    case Stmt::Kind::While: {
      while (true) {
        tick();
        if (!eval(*s.value).truthy()) return exec_block(s.orelse);
        const Flow f = exec_block(s.body);
        if (f == Flow::Break) return Flow::Normal;
        if (f == Flow::Return) return f;
      }
    }
    case Stmt::Kind::For: {
      Value iterable = eval(*s.value);
      Flow result = Flow::Normal;
      bool broke = false;
      iterate(iterable, [&](const Value& item) {
        assign(*s.targets.front(), item);
        const Flow f = exec_block(s.body);
        if (f == Flow::Break) {
          broke = true;
          return false;
        }
        if (f == Flow::Return) {
          result = f;
          return false;
        }
        return true;
      });
      if (result == Flow::Return) return result;
      if (!broke) return exec_block(s.orelse);
      return Flow::Normal;
    }
    case Stmt::Kind::Break: return Flow::Break;
    case Stmt::Kind::Continue: return Flow::Continue;
    case Stmt::Kind::Pass: return Flow::Normal;
    case Stmt::Kind::FunctionDef:
      scope_->vars[s.function->name] = make_function(s.function);
      return Flow::Normal;
    case Stmt::Kind::Import: {
      auto mod = make_module(s.module);
      if (!mod || (s.module == "random" && !allow_random())) {
        raise("ImportError", "module '" + s.module + "' is not available");
      }
      scope_->vars[s.alias] = *mod;
      return Flow::Normal;
    }
    case Stmt::Kind::Try: return exec_try(s);
    case Stmt::Kind::Raise: {
      if (!s.value) {
        if (handling_.empty()) raise("RuntimeError", "no active exception to re-raise");
        throw handling_.back();
      }
      Value v = eval(*s.value);
      if (v.type() == Value::Type::Builtin) raise(v.as_builtin()->name, "");
      const std::string text = to_str(v);
      const auto colon = text.find(": ");
      if (colon != std::string::npos) raise(text.substr(0, colon), text.substr(colon + 2));
      raise("Exception", text);
    }
    case Stmt::Kind::Assert:
      if (!eval(*s.value).truthy()) raise("AssertionError", s.message ? to_str(eval(*s.message)) : "");
      return Flow::Normal;
  }
  return Flow::Normal;
}

Interpreter::Flow Interpreter::exec_try(const Stmt& s) {
  auto run_main = [&]() -> Flow {
    Flow f;
    try {
      f = exec_block(s.body);
    } catch (const ScriptError& e) {
      if (s.handlers.empty()) throw;
      const auto& h = s.handlers.front();
      if (!h.alias.empty()) scope_->vars[h.alias] = Value(std::string(e.what()));
      handling_.push_back(e);
      struct Pop {
        std::vector<ScriptError>& v;
        ~Pop() { v.pop_back(); }
      } pop{handling_};
      return exec_block(h.body);
    }
    if (f == Flow::Normal) return exec_block(s.orelse);
    return f;
  };
  if (s.finally_body.empty()) return run_main();
  Flow f;
  try {
    f = run_main();
  } catch (const ScriptError&) {
    Value saved = ret_;
    const Flow ff = exec_block(s.finally_body);
    if (ff != Flow::Normal) return ff;
    ret_ = saved;
    throw;
  }
  Value saved = ret_;
  const Flow ff = exec_block(s.finally_body);
  if (ff != Flow::Normal) return ff;
  ret_ = saved;
  return f;
}

void Interpreter::assign(const Expr& target, const Value& v) {
  switch (target.kind) {
    case Expr::Kind::Name: scope_->vars[target.name] = v; return;
    case Expr::Kind::Subscript: {
      Value obj = eval(*target.children[0]);
      if (target.children[1]->kind == Expr::Kind::Slice) raise("TypeError", "slice assignment is not supported");
      set_item(obj, eval(*target.children[1]), v);
      return;
    }
    case Expr::Kind::Tuple:
    case Expr::Kind::List: {
      auto items = collect(v);
      if (items.size() != target.children.size()) {
        raise("ValueError", "expected " + std::to_string(target.children.size()) + " values to unpack, got " +
                                std::to_string(items.size()));
      }
      for (std::size_t i = 0; i < items.size(); ++i) assign(*target.children[i], items[i]);
      return;
    }
    default: raise("SyntaxError", "cannot assign to expression");
  }
}

Value Interpreter::lookup(const std::string& name, const Expr& at) {
  for (Scope* s = scope_.get(); s; s = s->parent.get()) {
    auto it = s->vars.find(name);
    if (it != s->vars.end()) return it->second;
  }
  auto it = globals_->vars.find(name);
  if (it != globals_->vars.end()) return it->second;
  const auto& builtins = builtin_table();
  auto b = builtins.find(name);
  if (b != builtins.end()) return b->second;
  raise("NameError", "name '" + name + "' is not defined (line " + std::to_string(at.line) + ")");
}

// ---------------------------------------------------------------------------
// Expressions

Value Interpreter::eval(const Expr& e) {
  switch (e.kind) {
    case Expr::Kind::Const: return e.constant;
    case Expr::Kind::Name: return lookup(e.name, e);
    case Expr::Kind::Attr: return get_attr(eval(*e.children[0]), e.name);
    case Expr::Kind::Subscript: {
      Value obj = eval(*e.children[0]);
      if (e.children[1]->kind == Expr::Kind::Slice) return eval_slice(obj, *e.children[1]);
      return get_item(obj, eval(*e.children[1]));
    }
    case Expr::Kind::Slice: raise("SyntaxError", "slice outside subscript");
    case Expr::Kind::Call: return eval_call(e);
    case Expr::Kind::Binary: {
      Value l = eval(*e.children[0]);
      Value r = eval(*e.children[1]);
      return binary(e.bin_op, l, r);
    }
    case Expr::Kind::Unary: {
      Value v = eval(*e.children[0]);
      if (e.unary_op == UnaryOp::Not) return Value(!v.truthy());
      if (v.is_array()) {
        std::vector<Value> out;
        for (const auto& x : v.as_list().items) {
          out.push_back(e.unary_op == UnaryOp::Neg ? binary(BinOp::Sub, Value(0), x) : x);
        }
        return make_list(std::move(out), true);
      }
      auto n = as_num(v);
      if (!n) raise("TypeError", "bad operand type for unary operator: '" + v.type_name() + "'");
      if (e.unary_op == UnaryOp::Pos) return n->is_int ? Value(n->i) : Value(n->d);
      if (n->is_int) {
        if (n->i == std::numeric_limits<std::int64_t>::min()) raise("OverflowError", "integer overflow");
        return Value(-n->i);
      }
      return Value(-n->d);
    }
    case Expr::Kind::And: {
      Value v;
      for (const auto& c : e.children) {
        v = eval(*c);
        if (!v.truthy()) return v;
      }
      return v;
    }
    case Expr::Kind::Or: {
      Value v;
      for (const auto& c : e.children) {
        v = eval(*c);
        if (v.truthy()) return v;
      }
      return v;
    }
    case Expr::Kind::Compare: {
      Value left = eval(*e.children[0]);
      Value result(true);
      for (std::size_t i = 0; i < e.cmp_ops.size(); ++i) {
        Value right = eval(*e.children[i + 1]);
        result = compare(e.cmp_ops[i], left, right);
        if (e.cmp_ops.size() > 1 && !result.truthy()) return result;
        left = std::move(right);
      }
      return result;
    }
    case Expr::Kind::IfExp:
      return eval(*e.children[0]).truthy() ? eval(*e.children[1]) : eval(*e.children[2]);
    case Expr::Kind::List:
    case Expr::Kind::Tuple: {
      std::vector<Value> items;
      items.reserve(e.children.size());
      for (const auto& c : e.children) items.push_back(eval(*c));
      return e.kind == Expr::Kind::List ? Value::list(std::move(items)) : Value::tuple(std::move(items));
    }
    case Expr::Kind::Dict: {
      auto d = std::make_shared<DictObj>();
      for (std::size_t i = 0; i + 1 < e.children.size(); i += 2) {
        Value k = eval(*e.children[i]);
        d->set(k, eval(*e.children[i + 1]));
      }
      return Value(std::move(d));
    }
    case Expr::Kind::ListComp:
    case Expr::Kind::DictComp: return eval_comprehension(e);
    case Expr::Kind::Lambda: return make_function(e.lambda);
  }
  raise("SyntaxError", "unsupported expression");
}

Value Interpreter::eval_call(const Expr& e) {
  Value callee = eval(*e.children[0]);
  std::vector<Value> args;
  args.reserve(e.children.size() - 1);
  for (std::size_t i = 1; i < e.children.size(); ++i) args.push_back(eval(*e.children[i]));
  Kwargs kwargs;
  for (std::size_t i = 0; i < e.kw_names.size(); ++i) kwargs.emplace_back(e.kw_names[i], eval(*e.kw_values[i]));
  return call_value(callee, std::move(args), std::move(kwargs));
}

Value Interpreter::eval_slice(const Value& obj, const Expr& slice) {
  auto part = [&](std::size_t i) -> std::optional<std::int64_t> {
    const auto& c = slice.children[i];
    if (!c) return std::nullopt;
    Value v = eval(*c);
    if (v.is_none()) return std::nullopt;
    return index_value(v);
  };
  const auto lo = part(0), hi = part(1), st = part(2);
  const std::int64_t step = st.value_or(1);
  if (step == 0) raise("ValueError", "slice step cannot be zero");

  std::size_t size = 0;
  if (obj.type() == Value::Type::Str) {
    size = obj.as_str().size();
  } else if (const auto* items = obj.sequence_items()) {
    size = items->size();
  } else {
    raise("TypeError", "'" + obj.type_name() + "' object is not subscriptable");
  }
  const auto n = static_cast<std::int64_t>(size);
  auto clamp = [&](std::optional<std::int64_t> v, std::int64_t dflt) {
    if (!v) return dflt;
    std::int64_t x = *v;
    if (x < 0) x += n;
    if (step > 0) return std::clamp<std::int64_t>(x, 0, n);
    return std::clamp<std::int64_t>(x, -1, n - 1);
  };
  const std::int64_t start = clamp(lo, step > 0 ? 0 : n - 1);
  const std::int64_t stop = clamp(hi, step > 0 ? n : -1);
  std::vector<std::int64_t> idx;
  for (std::int64_t i = start; step > 0 ? i < stop : i > stop; i += step) idx.push_back(i);

  if (obj.type() == Value::Type::Str) {
    std::string out;
    for (auto i : idx) out += obj.as_str()[static_cast<std::size_t>(i)];
    return Value(std::move(out));
  }
  const auto& items = *obj.sequence_items();
  std::vector<Value> out;
  out.reserve(idx.size());
  for (auto i : idx) out.push_back(items[static_cast<std::size_t>(i)]);
  if (obj.type() == Value::Type::Tuple) return Value::tuple(std::move(out));
  return make_list(std::move(out), obj.is_array());
}

void Interpreter::comprehension_loop(const Expr& e, std::size_t gen, const std::function<void()>& emit) {
  if (gen == e.generators.size()) {
    emit();
    return;
  }
  const auto& g = e.generators[gen];
  Value iterable = eval(*g.iter);
  iterate(iterable, [&](const Value& item) {
    assign(*g.target, item);
    for (const auto& cond : g.conditions) {
      if (!eval(*cond).truthy()) return true;
    }
    comprehension_loop(e, gen + 1, emit);
    return true;
  });
}

Value Interpreter::eval_comprehension(const Expr& e) {
  auto local = std::make_shared<Scope>();
  local->parent = scope_;
  auto saved = scope_;
  scope_ = local;
  struct Restore {
    Interpreter* self;
    std::shared_ptr<Scope> saved;
    ~Restore() { self->scope_ = std::move(saved); }
  } restore{this, std::move(saved)};

  if (e.kind == Expr::Kind::ListComp) {
    std::vector<Value> out;
    comprehension_loop(e, 0, [&] {
      out.push_back(eval(*e.children[0]));
      check_size(out.size());
    });
    return Value::list(std::move(out));
  }
  auto d = std::make_shared<DictObj>();
  comprehension_loop(e, 0, [&] {
    Value k = eval(*e.children[0]);
    d->set(k, eval(*e.children[1]));
    check_size(d->items.size());
  });
  return Value(std::move(d));
}

// ---------------------------------------------------------------------------
// Operators

std::vector<Value> Interpreter::collect(const Value& v) {
  if (const auto* items = v.sequence_items()) return *items;
  std::vector<Value> out;
  if (v.type() == Value::Type::Range) check_size(static_cast<std::size_t>(v.as_range().size()));
  iterate(v, [&](const Value& item) {
    out.push_back(item);
    check_size(out.size());
    return true;
  });
  return out;
}

Value Interpreter::elementwise(BinOp op, const Value& a, const Value& b) {
  const auto* xa = a.sequence_items();
  const auto* xb = b.sequence_items();
  std::vector<Value> out;
  if (xa && xb) {
    if (xa->size() != xb->size() && xa->size() != 1 && xb->size() != 1) {
      raise("ValueError", "operands could not be broadcast together with shapes (" + std::to_string(xa->size()) +
                              ",) (" + std::to_string(xb->size()) + ",)");
    }
    const std::size_t n = std::max(xa->size(), xb->size());
    for (std::size_t i = 0; i < n; ++i) {
      const Value& l = (*xa)[xa->size() == 1 ? 0 : i];
      const Value& r = (*xb)[xb->size() == 1 ? 0 : i];
      out.push_back(l.sequence_items() || r.sequence_items() ? elementwise(op, l, r) : scalar_binary(op, l, r, true));
    }
  } else if (xa) {
    for (const auto& l : *xa) out.push_back(l.sequence_items() ? elementwise(op, l, b) : scalar_binary(op, l, b, true));
  } else {
    for (const auto& r : *xb) out.push_back(r.sequence_items() ? elementwise(op, a, r) : scalar_binary(op, a, r, true));
  }
  return make_list(std::move(out), true);
}

Value Interpreter::binary(BinOp op, const Value& a, const Value& b) {
  if (a.is_array() || b.is_array()) return elementwise(op, a, b);
  return scalar_binary(op, a, b, false);
}

Value Interpreter::scalar_binary(BinOp op, const Value& a, const Value& b, bool numpy_mode) {
  using T = Value::Type;
  const auto na = as_num(a);
  const auto nb = as_num(b);
  if (na && nb) {
    const bool ints = na->is_int && nb->is_int;
    const double x = na->d, y = nb->d;
    std::int64_t r = 0;
    switch (op) {
      case BinOp::Add:
        if (ints) {
          if (__builtin_add_overflow(na->i, nb->i, &r)) raise("OverflowError", "integer overflow");
          return Value(r);
        }
        return Value(x + y);
      case BinOp::Sub:
        if (ints) {
          if (__builtin_sub_overflow(na->i, nb->i, &r)) raise("OverflowError", "integer overflow");
          return Value(r);
        }
        return Value(x - y);
      case BinOp::Mul:
        if (ints) {
          if (__builtin_mul_overflow(na->i, nb->i, &r)) raise("OverflowError", "integer overflow");
          return Value(r);
        }
        return Value(x * y);
      case BinOp::Div:
        if (y == 0.0) {
          if (numpy_mode) return Value(x == 0.0 || std::isnan(x) ? std::nan("") : std::copysign(INFINITY, x) * std::copysign(1.0, y));
          raise("ZeroDivisionError", "division by zero");
        }
        return Value(x / y);
      case BinOp::FloorDiv:
        if (y == 0.0) {
          if (numpy_mode) return Value(x == 0.0 ? std::nan("") : std::copysign(INFINITY, x));
          raise("ZeroDivisionError", "integer division or modulo by zero");
        }
        if (ints) {
          if (na->i == std::numeric_limits<std::int64_t>::min() && nb->i == -1) raise("OverflowError", "integer overflow");
          return Value(floor_div(na->i, nb->i));
        }
        return Value(std::floor(x / y));
      case BinOp::Mod:
        if (y == 0.0) {
          if (numpy_mode) return Value(std::nan(""));
          raise("ZeroDivisionError", "integer division or modulo by zero");
        }
        if (ints) {
          if (nb->i == -1) return Value(std::int64_t{0});
          return Value(na->i - floor_div(na->i, nb->i) * nb->i);
        }
        return Value(py_fmod(x, y));
      case BinOp::Pow: {
        if (ints && nb->i >= 0) {
          std::int64_t result = 1, base = na->i, e = nb->i;
          while (e > 0) {
            tick();
            if (e & 1) {
              if (__builtin_mul_overflow(result, base, &result)) raise("OverflowError", "integer overflow");
            }
            e >>= 1;
            if (e > 0 && __builtin_mul_overflow(base, base, &base)) raise("OverflowError", "integer overflow");
          }
          return Value(result);
        }
        if (x == 0.0 && y < 0) {
          if (numpy_mode) return Value(INFINITY);
          raise("ZeroDivisionError", "0.0 cannot be raised to a negative power");
        }
        if (x < 0 && std::floor(y) != y) {
          if (numpy_mode) return Value(std::nan(""));
          raise("ValueError", "negative number cannot be raised to a fractional power");
        }
        const double p = std::pow(x, y);
        if (std::isinf(p) && std::isfinite(x) && std::isfinite(y) && !numpy_mode) {
          raise("OverflowError", "numerical result out of range");
        }
        return Value(p);
      }
    }
  }
  if (op == BinOp::Add) {
    if (a.type() == T::Str && b.type() == T::Str) {
      check_size(a.as_str().size() + b.as_str().size());
      return Value(a.as_str() + b.as_str());
    }
    if (a.type() == b.type() && (a.type() == T::List || a.type() == T::Tuple)) {
      std::vector<Value> out = *a.sequence_items();
      const auto& rhs = *b.sequence_items();
      check_size(out.size() + rhs.size());
      out.insert(out.end(), rhs.begin(), rhs.end());
      return a.type() == T::List ? Value::list(std::move(out)) : Value::tuple(std::move(out));
    }
  }
  if (op == BinOp::Mul) {
    const Value* seq = nullptr;
    std::optional<Num> count;
    if (nb && nb->is_int) {
      seq = &a;
      count = nb;
    } else if (na && na->is_int) {
      seq = &b;
      count = na;
    }
    if (seq && (seq->type() == T::Str || seq->type() == T::List || seq->type() == T::Tuple)) {
      const std::int64_t n = std::max<std::int64_t>(0, count->i);
      if (seq->type() == T::Str) {
        check_size(seq->as_str().size() * static_cast<std::size_t>(n));
        std::string out;
        for (std::int64_t i = 0; i < n; ++i) out += seq->as_str();
        return Value(std::move(out));
      }
      const auto& items = *seq->sequence_items();
      check_size(items.size() * static_cast<std::size_t>(n));
      std::vector<Value> out;
      for (std::int64_t i = 0; i < n; ++i) out.insert(out.end(), items.begin(), items.end());
      return seq->type() == T::List ? Value::list(std::move(out)) : Value::tuple(std::move(out));
    }
  }
  static const char* kNames[] = {"+", "-", "*", "/", "//", "%", "**"};
  raise("TypeError", std::string("unsupported operand type(s) for ") + kNames[static_cast<int>(op)] + ": '" +
                         a.type_name() + "' and '" + b.type_name() + "'");
}

bool Interpreter::less(const Value& a, const Value& b) {
  using T = Value::Type;
  const auto na = as_num(a);
  const auto nb = as_num(b);
  if (na && nb) {
    if (na->is_int && nb->is_int) return na->i < nb->i;
    return na->d < nb->d;
  }
  if (a.type() == T::Str && b.type() == T::Str) return a.as_str() < b.as_str();
  if (a.type() == b.type() && (a.type() == T::List || a.type() == T::Tuple)) {
    const auto& x = *a.sequence_items();
    const auto& y = *b.sequence_items();
    for (std::size_t i = 0; i < std::min(x.size(), y.size()); ++i) {
      if (x[i] == y[i]) continue;
      return less(x[i], y[i]);
    }
    return x.size() < y.size();
  }
  raise("TypeError", "'<' not supported between instances of '" + a.type_name() + "' and '" + b.type_name() + "'");
}

bool Interpreter::contains(const Value& container, const Value& item) {
  using T = Value::Type;
  switch (container.type()) {
    case T::List:
    case T::Tuple:
      for (const auto& x : *container.sequence_items()) {
        if (x == item) return true;
      }
      return false;
    case T::Dict: return container.as_dict().find(item) != nullptr;
    case T::Str:
      if (item.type() != T::Str) raise("TypeError", "'in <string>' requires string as left operand");
      return container.as_str().find(item.as_str()) != std::string::npos;
    case T::Range: {
      auto n = as_num(item);
      if (!n || (!n->is_int && std::floor(n->d) != n->d)) return false;
      const auto& r = container.as_range();
      const std::int64_t v = n->is_int ? n->i : static_cast<std::int64_t>(n->d);
      if (r.step > 0 ? (v < r.start || v >= r.stop) : (v > r.start || v <= r.stop)) return false;
      return (v - r.start) % r.step == 0;
    }
    default: raise("TypeError", "argument of type '" + container.type_name() + "' is not iterable");
  }
}

bool Interpreter::cmp_scalar(CmpOp op, const Value& a, const Value& b) {
  switch (op) {
    case CmpOp::Eq: return a == b;
    case CmpOp::Ne: return !(a == b);
    case CmpOp::Lt: return less(a, b);
    case CmpOp::Gt: return less(b, a);
    case CmpOp::Le: {
      // NaN compares false both ways, so `<=` is not `!(b < a)` for floats.
      auto na = as_num(a), nb = as_num(b);
      if (na && nb) return na->is_int && nb->is_int ? na->i <= nb->i : na->d <= nb->d;
      return less(a, b) || a == b;
    }
    case CmpOp::Ge: {
      auto na = as_num(a), nb = as_num(b);
      if (na && nb) return na->is_int && nb->is_int ? na->i >= nb->i : na->d >= nb->d;
      return less(b, a) || a == b;
    }
    case CmpOp::In: return contains(b, a);
    case CmpOp::NotIn: return !contains(b, a);
    case CmpOp::Is: return a.same_object(b);
    case CmpOp::IsNot: return !a.same_object(b);
  }
  return false;
}

Value Interpreter::compare(CmpOp op, const Value& a, const Value& b) {
  const bool elementwise_op = op != CmpOp::In && op != CmpOp::NotIn && op != CmpOp::Is && op != CmpOp::IsNot;
  if (elementwise_op && (a.is_array() || b.is_array())) {
    const auto* xa = a.sequence_items();
    const auto* xb = b.sequence_items();
    std::vector<Value> out;
    if (xa && xb) {
      if (xa->size() != xb->size()) raise("ValueError", "operands could not be broadcast together");
      for (std::size_t i = 0; i < xa->size(); ++i) out.push_back(compare(op, (*xa)[i], (*xb)[i]));
    } else if (xa) {
      for (const auto& x : *xa) out.push_back(compare(op, x, b));
    } else {
      for (const auto& y : *xb) out.push_back(compare(op, a, y));
    }
    return make_list(std::move(out), true);
  }
  return Value(cmp_scalar(op, a, b));
}

Value Interpreter::get_item(const Value& obj, const Value& key) {
  using T = Value::Type;
  switch (obj.type()) {
    case T::List:
    case T::Tuple: {
      if (key.type() == T::Tuple) {
        Value cur = obj;
        for (const auto& k : key.as_tuple().items) cur = get_item(cur, k);
        return cur;
      }
      const auto& items = *obj.sequence_items();
      return items[static_cast<std::size_t>(normalize_index(index_value(key), items.size()))];
    }
    case T::Str: {
      const auto& s = obj.as_str();
      return Value(std::string(1, s[static_cast<std::size_t>(normalize_index(index_value(key), s.size()))]));
    }
    case T::Dict: {
      const Value* v = obj.as_dict().find(key);
      if (!v) raise("KeyError", key.repr());
      return *v;
    }
    case T::Range: {
      const auto& r = obj.as_range();
      return Value(r.at(normalize_index(index_value(key), static_cast<std::size_t>(r.size()))));
    }
    default: raise("TypeError", "'" + obj.type_name() + "' object is not subscriptable");
  }
}

void Interpreter::set_item(const Value& obj, const Value& key, Value value) {
  using T = Value::Type;
  switch (obj.type()) {
    case T::List: {
      auto& items = obj.as_list().items;
      items[static_cast<std::size_t>(normalize_index(index_value(key), items.size()))] = std::move(value);
      return;
    }
    case T::Dict:
      obj.as_dict().set(key, std::move(value));
      check_size(obj.as_dict().items.size());
      return;
    default: raise("TypeError", "'" + obj.type_name() + "' object does not support item assignment");
  }
}

Value Interpreter::get_attr(const Value& obj, const std::string& name) {
  if (obj.type() == Value::Type::Module) {
    const Value* v = obj.as_module()->find(name);
    if (!v) raise("AttributeError", "module '" + obj.as_module()->name + "' has no attribute '" + name + "'");
    return *v;
  }
  if (obj.is_array()) {
    const auto n = static_cast<std::int64_t>(obj.as_list().items.size());
    if (name == "size") return Value(n);
    if (name == "shape") return Value::tuple({Value(n)});
    if (name == "ndim") return Value(1);
  }
  if (!has_method(obj, name)) {
    raise("AttributeError", "'" + obj.type_name() + "' object has no attribute '" + name + "'");
  }
  auto m = std::make_shared<MethodObj>();
  m->self = obj;
  m->name = name;
  return Value(std::move(m));
}

// ---------------------------------------------------------------------------
// Public entry points

namespace {

const std::set<std::string>& forbidden_names() {
  static const std::set<std::string> names = {
      "open", "eval", "exec", "compile", "getattr", "setattr", "delattr", "hasattr", "globals",
      "locals", "vars", "input", "exit", "quit", "breakpoint", "memoryview", "type", "object",
      "super", "dir", "help", "id", "classmethod", "staticmethod", "property", "bytearray", "bytes"};
  return names;
}

class Checker {
 public:
  explicit Checker(bool allow_random) : allow_random_(allow_random) {}

  void block(const Block& b) {
    for (const auto& s : b) stmt(*s);
  }

 private:
  void stmt(const Stmt& s) {
    for (const auto& t : s.targets) expr(t.get());
    expr(s.value.get());
    expr(s.message.get());
    block(s.body);
    block(s.orelse);
    for (const auto& h : s.handlers) block(h.body);
    block(s.finally_body);
    if (s.function) function(*s.function);
    if (s.kind == Stmt::Kind::Import) {
      if (s.module == "random") {
        if (!allow_random_) forbid("randomness ('import random')", s.line);
      } else if (s.module != "math" && s.module != "numpy") {
        forbid("import of module '" + s.module + "'", s.line);
      }
    }
  }

  void function(const FunctionDef& f) {
    for (const auto& p : f.params) expr(p.default_value.get());
    block(f.body);
    expr(f.lambda_body.get());
  }

  void expr(const Expr* e) {
    if (!e) return;
    if (e->kind == Expr::Kind::Name) {
      if (forbidden_names().count(e->name)) forbid("builtin '" + e->name + "'", e->line);
      if (!allow_random_ && e->name == "random") forbid("randomness ('random')", e->line);
    }
    if (e->kind == Expr::Kind::Attr && !allow_random_ && e->name == "random") {
      forbid("randomness ('.random')", e->line);
    }
    for (const auto& c : e->children) expr(c.get());
    for (const auto& c : e->kw_values) expr(c.get());
    for (const auto& g : e->generators) {
      expr(g.target.get());
      expr(g.iter.get());
      for (const auto& c : g.conditions) expr(c.get());
    }
    if (e->lambda) function(*e->lambda);
  }

  [[noreturn]] static void forbid(const std::string& what, int line) {
    throw Error(ErrorCode::ForbiddenConstruct, what + " (line " + std::to_string(line) + ")");
  }

  bool allow_random_;
};

}  // namespace

const std::vector<std::string>& Program::functions() const { return impl_->functions; }

bool Program::has_function(std::string_view name) const {
  const auto& f = impl_->functions;
  return std::find(f.begin(), f.end(), name) != f.end();
}

bool Program::allow_random() const { return impl_->allow_random; }

Program compile(std::string_view source, const CompileOptions& options) {
  auto impl = parse_program(source);
  impl->allow_random = options.allow_random;
  Checker(options.allow_random).block(impl->body);
  return Program(std::move(impl));
}

bool parses(std::string_view source) {
  try {
    parse_program(source);
    return true;
  } catch (const Error& e) {
    return e.code() == ErrorCode::ForbiddenConstruct;
  }
}

Value call(const Program& program, std::string_view function, std::vector<Value> args, const Limits& limits) {
  const auto& impl = program.impl();
  const std::uint64_t n = impl.calls.fetch_add(1, std::memory_order_relaxed);
  std::shared_ptr<const ProgramImpl> keep(std::shared_ptr<const ProgramImpl>{}, &impl);
  try {
    Interpreter in(keep, limits, Rng::mix(0x51a7e5eedULL, n));
    in.load_module();
    return in.call_global(function, std::move(args));
  } catch (const ScriptError& e) {
    throw Error(ErrorCode::RuntimeFault, e.what());
  } catch (const std::bad_alloc&) {
    throw Error(ErrorCode::RuntimeFault, "out of memory");
  }
}

}  // namespace vmsched::script
