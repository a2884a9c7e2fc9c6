// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#include <cctype>
#include <charconv>
#include <cmath>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "script/ast.hpp"
#include "vmsched/error.hpp"

namespace vmsched::script {

namespace {

enum class Tok { Name, Number, String, Op, Newline, Indent, Dedent, End };

struct Token {
  Tok kind;
  std::string text;
  int line;
  int col;
  Value number;  // Number tokens
};

[[noreturn]] void parse_error(int line, int col, const std::string& what) {
  throw Error(ErrorCode::ParseError, std::to_string(line) + ":" + std::to_string(col) + ": " + what);
}

[[noreturn]] void forbidden(const std::string& what, int line) {
  throw Error(ErrorCode::ForbiddenConstruct, what + " (line " + std::to_string(line) + ")");
}

// ---------------------------------------------------------------------------
// Lexer

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    indents_.push_back(0);
    while (pos_ < src_.size()) {
      if (at_line_start_ && depth_ == 0) {
        if (handle_indentation()) continue;
      }
      const char c = src_[pos_];
      if (c == '\n') {
        if (depth_ == 0 && !last_is_newline()) emit(Tok::Newline, "\n");
        advance();
        at_line_start_ = depth_ == 0;
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r' || c == '\f') {
        advance();
        continue;
      }
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        continue;
      }
      if (c == '\\' && pos_ + 1 < src_.size() &&
          (src_[pos_ + 1] == '\n' || src_[pos_ + 1] == '\r')) {
        advance();
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
        advance();
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && pos_ + 1 < src_.size() && std::isdigit(static_cast<unsigned char>(src_[pos_ + 1])))) {
        lex_number();
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        if (string_prefix()) continue;
        const int l = line_, co = col_;
        std::string name;
        while (pos_ < src_.size() &&
               (std::isalnum(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
          name += src_[pos_];
          advance();
        }
        tokens_.push_back(Token{Tok::Name, name, l, co, {}});
        continue;
      }
      if (c == '"' || c == '\'') {
        lex_string(false);
        continue;
      }
      lex_op();
    }
    if (!last_is_newline() && !tokens_.empty()) emit(Tok::Newline, "\n");
    while (indents_.size() > 1) {
      indents_.pop_back();
      emit(Tok::Dedent, "");
    }
    emit(Tok::End, "");
    return std::move(tokens_);
  }

 private:
  bool last_is_newline() const {
    return tokens_.empty() || tokens_.back().kind == Tok::Newline ||
           tokens_.back().kind == Tok::Indent || tokens_.back().kind == Tok::Dedent;
  }

  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }

  void emit(Tok kind, std::string text) { tokens_.push_back(Token{kind, std::move(text), line_, col_, {}}); }

  // Returns true when the whole line was consumed (blank or comment).
  bool handle_indentation() {
    int width = 0;
    std::size_t p = pos_;
    while (p < src_.size() && (src_[p] == ' ' || src_[p] == '\t' || src_[p] == '\f')) {
      width = src_[p] == '\t' ? (width / 8 + 1) * 8 : width + 1;
      ++p;
    }
    if (p >= src_.size() || src_[p] == '\n' || src_[p] == '#' || src_[p] == '\r') {
      while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      if (pos_ < src_.size()) advance();
      return true;
    }
    while (pos_ < p) advance();
    at_line_start_ = false;
    if (width > indents_.back()) {
      indents_.push_back(width);
      emit(Tok::Indent, "");
    } else {
      while (width < indents_.back()) {
        indents_.pop_back();
        emit(Tok::Dedent, "");
      }
      if (width != indents_.back()) parse_error(line_, col_, "inconsistent dedent");
    }
    return false;
  }

  bool string_prefix() {
    std::size_t p = pos_;
    std::string prefix;
    while (p < src_.size() && prefix.size() < 2 && std::isalpha(static_cast<unsigned char>(src_[p]))) {
      prefix += static_cast<char>(std::tolower(static_cast<unsigned char>(src_[p])));
      ++p;
    }
    if (p >= src_.size() || (src_[p] != '"' && src_[p] != '\'')) return false;
    static const std::set<std::string> kPrefixes = {"r", "u", "b", "f", "rb", "br", "fr", "rf"};
    if (!kPrefixes.count(prefix)) return false;
    if (prefix.find('f') != std::string::npos) parse_error(line_, col_, "f-strings are not supported");
    while (pos_ < p) advance();
    lex_string(prefix.find('r') != std::string::npos);
    return true;
  }

  void lex_string(bool raw) {
    const int l = line_, co = col_;
    const char q = src_[pos_];
    const bool triple = pos_ + 2 < src_.size() && src_[pos_ + 1] == q && src_[pos_ + 2] == q;
    for (int i = 0; i < (triple ? 3 : 1); ++i) advance();
    std::string out;
    while (true) {
      if (pos_ >= src_.size()) parse_error(l, co, "unterminated string");
      const char c = src_[pos_];
      if (triple) {
        if (c == q && pos_ + 2 < src_.size() && src_[pos_ + 1] == q && src_[pos_ + 2] == q) {
          advance();
          advance();
          advance();
          break;
        }
      } else {
        if (c == q) {
          advance();
          break;
        }
        if (c == '\n') parse_error(l, co, "unterminated string");
      }
      if (c == '\\' && pos_ + 1 < src_.size()) {
        const char n = src_[pos_ + 1];
        if (raw) {
          out += c;
          out += n;
        } else {
          switch (n) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            case '0': out += '\0'; break;
            case '\\': out += '\\'; break;
            case '\'': out += '\''; break;
            case '"': out += '"'; break;
            case '\n': break;
            default:
              out += '\\';
              out += n;
          }
        }
        advance();
        advance();
        continue;
      }
      out += c;
      advance();
    }
    Token t{Tok::String, out, l, co, {}};
    tokens_.push_back(std::move(t));
  }

  void lex_number() {
    const int l = line_, co = col_;
    std::string text;
    bool is_float = false;
    if (src_[pos_] == '0' && pos_ + 1 < src_.size() && (src_[pos_ + 1] == 'x' || src_[pos_ + 1] == 'X')) {
      advance();
      advance();
      while (pos_ < src_.size() && (std::isxdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        if (src_[pos_] != '_') text += src_[pos_];
        advance();
      }
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v, 16);
      if (ec != std::errc() || text.empty()) parse_error(l, co, "bad hex literal");
      tokens_.push_back(Token{Tok::Number, "0x" + text, l, co, Value(v)});
      return;
    }
    auto digits = [&]() {
      while (pos_ < src_.size() && (std::isdigit(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
        if (src_[pos_] != '_') text += src_[pos_];
        advance();
      }
    };
    digits();
    if (pos_ < src_.size() && src_[pos_] == '.') {
      is_float = true;
      text += '.';
      advance();
      digits();
    }
    if (pos_ < src_.size() && (src_[pos_] == 'e' || src_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < src_.size() && (src_[p] == '+' || src_[p] == '-')) ++p;
      if (p < src_.size() && std::isdigit(static_cast<unsigned char>(src_[p]))) {
        is_float = true;
        text += 'e';
        advance();
        if (src_[pos_] == '+' || src_[pos_] == '-') {
          text += src_[pos_];
          advance();
        }
        digits();
      }
    }
    if (pos_ < src_.size() && (std::isalpha(static_cast<unsigned char>(src_[pos_])) || src_[pos_] == '_')) {
      parse_error(line_, col_, "invalid number literal");
    }
    Value v;
    if (is_float) {
      v = Value(std::strtod(text.c_str(), nullptr));
    } else {
      std::int64_t i = 0;
      auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), i);
      if (ec != std::errc()) parse_error(l, co, "integer literal out of range");
      v = Value(i);
    }
    tokens_.push_back(Token{Tok::Number, text, l, co, v});
  }

  void lex_op() {
    static const char* kThree[] = {"**=", "//=", "...", nullptr};
    static const char* kTwo[] = {"**", "//", "==", "!=", "<=", ">=", "+=", "-=", "*=", "/=",
                                 "%=", "->", "<<", ">>", nullptr};
    const int l = line_, co = col_;
    auto try_ops = [&](const char** ops, std::size_t n) {
      for (int i = 0; ops[i]; ++i) {
        if (src_.substr(pos_, n) == ops[i]) {
          for (std::size_t k = 0; k < n; ++k) advance();
          tokens_.push_back(Token{Tok::Op, ops[i], l, co, {}});
          return true;
        }
      }
      return false;
    };
    if (try_ops(kThree, 3) || try_ops(kTwo, 2)) return;
    const char c = src_[pos_];
    static const std::string kSingle = "()[]{}:,.;+-*/%<>=~@&|^";
    if (kSingle.find(c) == std::string::npos) {
      parse_error(l, co, std::string("unexpected character '") + c + "'");
    }
    if (c == '(' || c == '[' || c == '{') ++depth_;
    if ((c == ')' || c == ']' || c == '}') && depth_ > 0) --depth_;
    advance();
    tokens_.push_back(Token{Tok::Op, std::string(1, c), l, co, {}});
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
  int depth_ = 0;
  bool at_line_start_ = true;
  std::vector<int> indents_;
  std::vector<Token> tokens_;
};

// ---------------------------------------------------------------------------
// Parser

class Parser {
 public:
  explicit Parser(std::vector<Token> tokens) : toks_(std::move(tokens)) {}

  Block parse_file() {
    Block body;
    while (peek().kind != Tok::End) {
      if (peek().kind == Tok::Newline) {
        next();
        continue;
      }
      parse_statement(body);
    }
    return body;
  }

 private:
  const Token& peek(std::size_t ahead = 0) const {
    return toks_[std::min(pos_ + ahead, toks_.size() - 1)];
  }
  const Token& next() { return toks_[std::min(pos_++, toks_.size() - 1)]; }

  bool is_op(const char* op, std::size_t ahead = 0) const {
    const auto& t = peek(ahead);
    return t.kind == Tok::Op && t.text == op;
  }
  bool is_kw(const char* kw, std::size_t ahead = 0) const {
    const auto& t = peek(ahead);
    return t.kind == Tok::Name && t.text == kw;
  }
  bool accept_op(const char* op) {
    if (is_op(op)) {
      ++pos_;
      return true;
    }
    return false;
  }
  bool accept_kw(const char* kw) {
    if (is_kw(kw)) {
      ++pos_;
      return true;
    }
    return false;
  }
  [[noreturn]] void fail(const std::string& what) const {
    const auto& t = peek();
    std::string got = t.kind == Tok::End       ? "end of input"
                      : t.kind == Tok::Newline ? "newline"
                      : t.kind == Tok::Indent  ? "indent"
                      : t.kind == Tok::Dedent  ? "dedent"
                                               : "'" + t.text + "'";
    parse_error(t.line, t.col, what + ", got " + got);
  }
  void expect_op(const char* op) {
    if (!accept_op(op)) fail(std::string("expected '") + op + "'");
  }
  std::string expect_name() {
    if (peek().kind != Tok::Name || is_keyword(peek().text)) fail("expected identifier");
    return next().text;
  }

  static bool is_keyword(const std::string& s) {
    static const std::set<std::string> kKeywords = {
        "def", "return", "if", "elif", "else", "for", "in", "while", "break", "continue",
        "pass", "and", "or", "not", "is", "None", "True", "False", "lambda", "import",
        "from", "as", "try", "except", "finally", "raise", "assert", "global", "nonlocal",
        "class", "with", "yield", "async", "await", "del"};
    return kKeywords.count(s) > 0;
  }

  ExprPtr make(Expr::Kind k, const Token& at) { return std::make_unique<Expr>(k, at.line, at.col); }

  // -- statements ----------------------------------------------------------

  void parse_statement(Block& out) {
    const Token& t = peek();
    if (t.kind == Tok::Indent) parse_error(t.line, t.col, "unexpected indent");
    if (t.kind == Tok::Name) {
      static const std::set<std::string> kForbidden = {"class", "with", "yield", "global",
                                                       "nonlocal", "async", "await", "del"};
      if (kForbidden.count(t.text)) forbidden("'" + t.text + "' statement", t.line);
      if (t.text == "def") return out.push_back(parse_def());
      if (t.text == "if") return out.push_back(parse_if());
      if (t.text == "for") return out.push_back(parse_for());
      if (t.text == "while") return out.push_back(parse_while());
      if (t.text == "try") return out.push_back(parse_try());
    }
    if (t.kind == Tok::Op && t.text == "@") forbidden("decorators", t.line);
    parse_simple_line(out);
  }

  void parse_simple_line(Block& out) {
    out.push_back(parse_simple());
    while (accept_op(";")) {
      if (peek().kind == Tok::Newline || peek().kind == Tok::End) break;
      out.push_back(parse_simple());
    }
    if (peek().kind == Tok::End) return;
    if (peek().kind != Tok::Newline) fail("expected end of statement");
    next();
  }

  StmtPtr parse_simple() {
    const Token& t = peek();
    const int line = t.line;
    if (accept_kw("pass")) return std::make_unique<Stmt>(Stmt::Kind::Pass, line);
    if (accept_kw("break")) return std::make_unique<Stmt>(Stmt::Kind::Break, line);
    if (accept_kw("continue")) return std::make_unique<Stmt>(Stmt::Kind::Continue, line);
    if (accept_kw("return")) {
      auto s = std::make_unique<Stmt>(Stmt::Kind::Return, line);
      if (peek().kind != Tok::Newline && peek().kind != Tok::End && !is_op(";")) s->value = parse_testlist();
      return s;
    }
    if (accept_kw("raise")) {
      auto s = std::make_unique<Stmt>(Stmt::Kind::Raise, line);
      if (peek().kind != Tok::Newline && peek().kind != Tok::End) s->value = parse_test();
      if (accept_kw("from")) parse_test();
      return s;
    }
    if (accept_kw("assert")) {
      auto s = std::make_unique<Stmt>(Stmt::Kind::Assert, line);
      s->value = parse_test();
      if (accept_op(",")) s->message = parse_test();
      return s;
    }
    if (accept_kw("import")) {
      auto s = std::make_unique<Stmt>(Stmt::Kind::Import, line);
      s->module = parse_dotted();
      s->alias = s->module;
      if (accept_kw("as")) s->alias = expect_name();
      if (is_op(",")) forbidden("multiple imports in one statement", line);
      return s;
    }
    if (accept_kw("from")) {
      const std::string mod = parse_dotted();
      forbidden("'from " + mod + " import'", line);
    }

    ExprPtr first = parse_testlist();
    if (is_op("=")) {
      auto s = std::make_unique<Stmt>(Stmt::Kind::Assign, line);
      check_target(*first);
      s->targets.push_back(std::move(first));
      while (accept_op("=")) {
        ExprPtr rhs = parse_testlist();
        if (is_op("=")) {
          check_target(*rhs);
          s->targets.push_back(std::move(rhs));
        } else {
          s->value = std::move(rhs);
        }
      }
      return s;
    }
    static const std::pair<const char*, BinOp> kAug[] = {
        {"+=", BinOp::Add}, {"-=", BinOp::Sub}, {"*=", BinOp::Mul}, {"/=", BinOp::Div},
        {"//=", BinOp::FloorDiv}, {"%=", BinOp::Mod}, {"**=", BinOp::Pow}};
    for (const auto& [op, kind] : kAug) {
      if (accept_op(op)) {
        if (first->kind != Expr::Kind::Name && first->kind != Expr::Kind::Subscript) {
          parse_error(first->line, first->col, "invalid augmented assignment target");
        }
        auto s = std::make_unique<Stmt>(Stmt::Kind::AugAssign, line);
        s->aug_op = kind;
        s->targets.push_back(std::move(first));
        s->value = parse_testlist();
        return s;
      }
    }
    if (is_op(":")) fail("annotations are not supported");
    auto s = std::make_unique<Stmt>(Stmt::Kind::ExprStmt, line);
    s->value = std::move(first);
    return s;
  }

  std::string parse_dotted() {
    std::string name = expect_name();
    while (accept_op(".")) name += "." + expect_name();
    return name;
  }

  void check_target(const Expr& e) {
    switch (e.kind) {
      case Expr::Kind::Name:
      case Expr::Kind::Subscript: return;
      case Expr::Kind::Tuple:
      case Expr::Kind::List:
        for (const auto& c : e.children) check_target(*c);
        return;
      case Expr::Kind::Attr: forbidden("attribute assignment", e.line);
      default: parse_error(e.line, e.col, "cannot assign to expression");
    }
  }

  Block parse_block() {
    expect_op(":");
    Block body;
    if (peek().kind != Tok::Newline) {
      parse_simple_line(body);
      return body;
    }
    next();
    if (peek().kind != Tok::Indent) fail("expected an indented block");
    next();
    while (peek().kind != Tok::Dedent && peek().kind != Tok::End) {
      if (peek().kind == Tok::Newline) {
        next();
        continue;
      }
      parse_statement(body);
    }
    if (peek().kind == Tok::Dedent) next();
    return body;
  }

  StmtPtr parse_def() {
    const int line = next().line;
    auto fn = std::make_shared<FunctionDef>();
    fn->name = expect_name();
    expect_op("(");
    fn->params = parse_params(")");
    expect_op(")");
    if (accept_op("->")) parse_test();
    fn->body = parse_block();
    auto s = std::make_unique<Stmt>(Stmt::Kind::FunctionDef, line);
    s->function = std::move(fn);
    return s;
  }

  std::vector<Param> parse_params(const char* close) {
    std::vector<Param> params;
    bool seen_default = false;
    while (!is_op(close)) {
      if (is_op("*") || is_op("**")) fail("variadic parameters are not supported");
      Param p;
      p.name = expect_name();
      if (std::string_view(close) != ":" && accept_op(":")) parse_test();
      if (accept_op("=")) {
        p.default_value = parse_test();
        seen_default = true;
      } else if (seen_default) {
        fail("non-default parameter follows default parameter");
      }
      params.push_back(std::move(p));
      if (!accept_op(",")) break;
    }
    return params;
  }

  StmtPtr parse_if() {
    const int line = next().line;
    auto s = std::make_unique<Stmt>(Stmt::Kind::If, line);
    s->value = parse_test();
    s->body = parse_block();
    if (is_kw("elif")) {
      s->orelse.push_back(parse_if());
    } else if (accept_kw("else")) {
      s->orelse = parse_block();
    }
    return s;
  }

  StmtPtr parse_for() {
    const int line = next().line;
    auto s = std::make_unique<Stmt>(Stmt::Kind::For, line);
    ExprPtr target = parse_target_list();
    check_target(*target);
    s->targets.push_back(std::move(target));
    if (!accept_kw("in")) fail("expected 'in'");
    s->value = parse_testlist();
    s->body = parse_block();
    if (accept_kw("else")) s->orelse = parse_block();
    return s;
  }

  StmtPtr parse_while() {
    const int line = next().line;
    auto s = std::make_unique<Stmt>(Stmt::Kind::While, line);
    s->value = parse_test();
    s->body = parse_block();
    if (accept_kw("else")) s->orelse = parse_block();
    return s;
  }

  StmtPtr parse_try() {
    const int line = next().line;
    auto s = std::make_unique<Stmt>(Stmt::Kind::Try, line);
    s->body = parse_block();
    while (accept_kw("except")) {
      ExceptClause clause;
      if (!is_op(":")) {
        parse_test();
        if (accept_kw("as")) clause.alias = expect_name();
      }
      clause.body = parse_block();
      s->handlers.push_back(std::move(clause));
    }
    if (accept_kw("else")) s->orelse = parse_block();
    if (accept_kw("finally")) s->finally_body = parse_block();
    if (s->handlers.empty() && s->finally_body.empty()) fail("expected 'except' or 'finally'");
    return s;
  }

  // -- expressions ---------------------------------------------------------

  // Comma-separated tests; a trailing comma or more than one element makes a tuple.
  ExprPtr parse_testlist() {
    const Token& at = peek();
    ExprPtr first = parse_test();
    if (!is_op(",")) return first;
    auto tup = make(Expr::Kind::Tuple, at);
    tup->children.push_back(std::move(first));
    while (accept_op(",")) {
      if (ends_testlist()) break;
      tup->children.push_back(parse_test());
    }
    return tup;
  }

  bool ends_testlist() const {
    const auto& t = peek();
    if (t.kind == Tok::Newline || t.kind == Tok::End) return true;
    return t.kind == Tok::Op && (t.text == "=" || t.text == ")" || t.text == "]" ||
                                 t.text == "}" || t.text == ";" || t.text == ":");
  }

  ExprPtr parse_target_list() {
    const Token& at = peek();
    ExprPtr first = parse_arith();
    if (!is_op(",")) return first;
    auto tup = make(Expr::Kind::Tuple, at);
    tup->children.push_back(std::move(first));
    while (accept_op(",")) {
      if (is_kw("in")) break;
      tup->children.push_back(parse_arith());
    }
    return tup;
  }

  ExprPtr parse_test() {
    if (is_kw("lambda")) return parse_lambda();
    const Token& at = peek();
    ExprPtr cond_true = parse_or();
    if (is_kw("if") ) {
      // Conditional expression; a trailing `if` inside a comprehension is
      // handled by the comprehension parser, which never calls parse_test
      // for the element position.
      next();
      auto e = make(Expr::Kind::IfExp, at);
      ExprPtr test = parse_or();
      if (!accept_kw("else")) fail("expected 'else' in conditional expression");
      ExprPtr otherwise = parse_test();
      e->children.push_back(std::move(test));
      e->children.push_back(std::move(cond_true));
      e->children.push_back(std::move(otherwise));
      return e;
    }
    return cond_true;
  }

  ExprPtr parse_test_nocond() {
    if (is_kw("lambda")) return parse_lambda();
    return parse_or();
  }

  ExprPtr parse_lambda() {
    const Token& at = next();
    auto e = make(Expr::Kind::Lambda, at);
    auto fn = std::make_shared<FunctionDef>();
    fn->name = "<lambda>";
    fn->params = parse_params(":");
    expect_op(":");
    fn->lambda_body = parse_test();
    e->lambda = std::move(fn);
    return e;
  }

  ExprPtr parse_or() {
    const Token& at = peek();
    ExprPtr left = parse_and();
    if (!is_kw("or")) return left;
    auto e = make(Expr::Kind::Or, at);
    e->children.push_back(std::move(left));
    while (accept_kw("or")) e->children.push_back(parse_and());
    return e;
  }

  ExprPtr parse_and() {
    const Token& at = peek();
    ExprPtr left = parse_not();
    if (!is_kw("and")) return left;
    auto e = make(Expr::Kind::And, at);
    e->children.push_back(std::move(left));
    while (accept_kw("and")) e->children.push_back(parse_not());
    return e;
  }

  ExprPtr parse_not() {
    if (is_kw("not")) {
      const Token& at = next();
      auto e = make(Expr::Kind::Unary, at);
      e->unary_op = UnaryOp::Not;
      e->children.push_back(parse_not());
      return e;
    }
    return parse_comparison();
  }

  std::optional<CmpOp> comparison_op() {
    const auto& t = peek();
    if (t.kind == Tok::Op) {
      if (t.text == "<") return (++pos_, CmpOp::Lt);
      if (t.text == "<=") return (++pos_, CmpOp::Le);
      if (t.text == ">") return (++pos_, CmpOp::Gt);
      if (t.text == ">=") return (++pos_, CmpOp::Ge);
      if (t.text == "==") return (++pos_, CmpOp::Eq);
      if (t.text == "!=") return (++pos_, CmpOp::Ne);
      return std::nullopt;
    }
    if (is_kw("in")) return (++pos_, CmpOp::In);
    if (is_kw("not") && is_kw("in", 1)) return (pos_ += 2, CmpOp::NotIn);
    if (is_kw("is")) {
      ++pos_;
      if (accept_kw("not")) return CmpOp::IsNot;
      return CmpOp::Is;
    }
    return std::nullopt;
  }

  ExprPtr parse_comparison() {
    const Token& at = peek();
    ExprPtr left = parse_arith();
    auto op = comparison_op();
    if (!op) return left;
    auto e = make(Expr::Kind::Compare, at);
    e->children.push_back(std::move(left));
    while (op) {
      e->cmp_ops.push_back(*op);
      e->children.push_back(parse_arith());
      op = comparison_op();
    }
    return e;
  }

  ExprPtr binary(const Token& at, BinOp op, ExprPtr l, ExprPtr r) {
    auto e = make(Expr::Kind::Binary, at);
    e->bin_op = op;
    e->children.push_back(std::move(l));
    e->children.push_back(std::move(r));
    return e;
  }

  ExprPtr parse_arith() {
    const Token& at = peek();
    ExprPtr left = parse_term();
    while (true) {
      if (accept_op("+")) {
        left = binary(at, BinOp::Add, std::move(left), parse_term());
      } else if (accept_op("-")) {
        left = binary(at, BinOp::Sub, std::move(left), parse_term());
      } else {
        return left;
      }
    }
  }

  ExprPtr parse_term() {
    const Token& at = peek();
    ExprPtr left = parse_factor();
    while (true) {
      if (accept_op("*")) {
        left = binary(at, BinOp::Mul, std::move(left), parse_factor());
      } else if (accept_op("/")) {
        left = binary(at, BinOp::Div, std::move(left), parse_factor());
      } else if (accept_op("//")) {
        left = binary(at, BinOp::FloorDiv, std::move(left), parse_factor());
      } else if (accept_op("%")) {
        left = binary(at, BinOp::Mod, std::move(left), parse_factor());
      } else {
        if (is_op("@") || is_op("&") || is_op("|") || is_op("^") || is_op("<<") || is_op(">>")) {
          fail("bitwise and matrix operators are not supported");
        }
        return left;
      }
    }
  }

  ExprPtr parse_factor() {
    const Token& at = peek();
    if (accept_op("-")) {
      auto e = make(Expr::Kind::Unary, at);
      e->unary_op = UnaryOp::Neg;
      e->children.push_back(parse_factor());
      return e;
    }
    if (accept_op("+")) {
      auto e = make(Expr::Kind::Unary, at);
      e->unary_op = UnaryOp::Pos;
      e->children.push_back(parse_factor());
      return e;
    }
    if (is_op("~")) fail("bitwise operators are not supported");
    return parse_power();
  }

  ExprPtr parse_power() {
    const Token& at = peek();
    ExprPtr base = parse_primary();
    if (accept_op("**")) return binary(at, BinOp::Pow, std::move(base), parse_factor());
    return base;
  }

  ExprPtr parse_primary() {
    ExprPtr e = parse_atom();
    while (true) {
      const Token& at = peek();
      if (accept_op("(")) {
        auto call = make(Expr::Kind::Call, at);
        call->children.push_back(std::move(e));
        parse_call_args(*call);
        expect_op(")");
        e = std::move(call);
      } else if (accept_op("[")) {
        auto sub = make(Expr::Kind::Subscript, at);
        sub->children.push_back(std::move(e));
        sub->children.push_back(parse_subscript());
        expect_op("]");
        e = std::move(sub);
      } else if (accept_op(".")) {
        auto attr = make(Expr::Kind::Attr, at);
        attr->name = expect_name();
        if (attr->name.rfind("_", 0) == 0) forbidden("private attribute '" + attr->name + "'", at.line);
        attr->children.push_back(std::move(e));
        e = std::move(attr);
      } else {
        return e;
      }
    }
  }

  void parse_call_args(Expr& call) {
    while (!is_op(")")) {
      if (is_op("*") || is_op("**")) fail("argument unpacking is not supported");
      if (peek().kind == Tok::Name && is_op("=", 1) && !is_keyword(peek().text)) {
        call.kw_names.push_back(next().text);
        next();
        call.kw_values.push_back(parse_test());
      } else {
        if (!call.kw_names.empty()) fail("positional argument follows keyword argument");
        const Token& at = peek();
        ExprPtr arg = parse_test();
        if (is_kw("for")) arg = parse_comprehension(at, std::move(arg), nullptr, Expr::Kind::ListComp);
        call.children.push_back(std::move(arg));
      }
      if (!accept_op(",")) break;
    }
  }

  ExprPtr parse_subscript() {
    const Token& at = peek();
    auto slice_part = [&]() -> ExprPtr {
      if (is_op(":") || is_op("]") || is_op(",")) return nullptr;
      return parse_test();
    };
    ExprPtr lo = slice_part();
    if (!is_op(":")) {
      if (lo && is_op(",")) {
        auto tup = make(Expr::Kind::Tuple, at);
        tup->children.push_back(std::move(lo));
        while (accept_op(",")) {
          if (is_op("]")) break;
          tup->children.push_back(parse_test());
        }
        return tup;
      }
      if (!lo) fail("expected subscript");
      return lo;
    }
    auto slice = make(Expr::Kind::Slice, at);
    next();
    ExprPtr hi = slice_part();
    ExprPtr step;
    if (accept_op(":")) step = slice_part();
    slice->children.push_back(std::move(lo));
    slice->children.push_back(std::move(hi));
    slice->children.push_back(std::move(step));
    return slice;
  }

  ExprPtr parse_comprehension(const Token& at, ExprPtr element, ExprPtr value, Expr::Kind kind) {
    auto e = make(kind, at);
    e->children.push_back(std::move(element));
    if (value) e->children.push_back(std::move(value));
    while (accept_kw("for")) {
      Comprehension gen;
      gen.target = parse_target_list();
      check_target(*gen.target);
      if (!accept_kw("in")) fail("expected 'in'");
      gen.iter = parse_or();
      while (is_kw("if")) {
        next();
        gen.conditions.push_back(parse_test_nocond());
      }
      e->generators.push_back(std::move(gen));
    }
    return e;
  }

  ExprPtr parse_atom() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Number: {
        next();
        auto e = make(Expr::Kind::Const, t);
        e->constant = t.number;
        return e;
      }
      case Tok::String: {
        std::string s;
        while (peek().kind == Tok::String) s += next().text;
        auto e = make(Expr::Kind::Const, t);
        e->constant = Value(std::move(s));
        return e;
      }
      case Tok::Name: {
        if (t.text == "None" || t.text == "True" || t.text == "False") {
          next();
          auto e = make(Expr::Kind::Const, t);
          if (t.text == "True") e->constant = Value(true);
          if (t.text == "False") e->constant = Value(false);
          return e;
        }
        if (t.text == "yield" || t.text == "await") forbidden("'" + t.text + "'", t.line);
        if (is_keyword(t.text)) fail("unexpected keyword");
        next();
        auto e = make(Expr::Kind::Name, t);
        e->name = t.text;
        if (e->name.rfind("__", 0) == 0) forbidden("dunder name '" + e->name + "'", t.line);
        return e;
      }
      case Tok::Op: break;
      default: fail("expected expression");
    }
    if (accept_op("(")) {
      if (accept_op(")")) return make(Expr::Kind::Tuple, t);
      ExprPtr first = parse_test();
      if (is_kw("for")) {
        auto comp = parse_comprehension(t, std::move(first), nullptr, Expr::Kind::ListComp);
        expect_op(")");
        return comp;
      }
      if (!is_op(",")) {
        expect_op(")");
        return first;
      }
      auto tup = make(Expr::Kind::Tuple, t);
      tup->children.push_back(std::move(first));
      while (accept_op(",")) {
        if (is_op(")")) break;
        tup->children.push_back(parse_test());
      }
      expect_op(")");
      return tup;
    }
    if (accept_op("[")) {
      auto list = make(Expr::Kind::List, t);
      if (accept_op("]")) return list;
      ExprPtr first = parse_test();
      if (is_kw("for")) {
        auto comp = parse_comprehension(t, std::move(first), nullptr, Expr::Kind::ListComp);
        expect_op("]");
        return comp;
      }
      list->children.push_back(std::move(first));
      while (accept_op(",")) {
        if (is_op("]")) break;
        list->children.push_back(parse_test());
      }
      expect_op("]");
      return list;
    }
    if (accept_op("{")) {
      auto dict = make(Expr::Kind::Dict, t);
      if (accept_op("}")) return dict;
      ExprPtr key = parse_test();
      if (!is_op(":")) fail("set literals are not supported");
      next();
      ExprPtr value = parse_test();
      if (is_kw("for")) {
        auto comp = parse_comprehension(t, std::move(key), std::move(value), Expr::Kind::DictComp);
        expect_op("}");
        return comp;
      }
      dict->children.push_back(std::move(key));
      dict->children.push_back(std::move(value));
      while (accept_op(",")) {
        if (is_op("}")) break;
        dict->children.push_back(parse_test());
        expect_op(":");
        dict->children.push_back(parse_test());
      }
      expect_op("}");
      return dict;
    }
    fail("expected expression");
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
};

void collect_functions(const Block& body, std::vector<std::string>& out) {
  for (const auto& s : body) {
    if (s->kind == Stmt::Kind::FunctionDef) out.push_back(s->function->name);
  }
}

}  // namespace

std::shared_ptr<ProgramImpl> parse_program(std::string_view source) {
  auto program = std::make_shared<ProgramImpl>();
  program->source = std::string(source);
  Lexer lexer(program->source);
  Parser parser(lexer.run());
  program->body = parser.parse_file();
  collect_functions(program->body, program->functions);
  return program;
}

}  // namespace vmsched::script
