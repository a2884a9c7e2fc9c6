// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The vmsched Authors

#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <vector>

#include "vmsched/script.hpp"
#include "vmsched/script/value.hpp"

namespace vmsched::script {

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;
using Block = std::vector<StmtPtr>;

enum class BinOp { Add, Sub, Mul, Div, FloorDiv, Mod, Pow };
enum class CmpOp { Lt, Le, Gt, Ge, Eq, Ne, In, NotIn, Is, IsNot };
enum class UnaryOp { Neg, Pos, Not };

struct Param {
  std::string name;
  ExprPtr default_value;
};

struct Comprehension {
  ExprPtr target;  // Name or Tuple of names
  ExprPtr iter;
  std::vector<ExprPtr> conditions;
};

struct FunctionDef {
  std::string name;
  std::vector<Param> params;
  Block body;             // for def
  ExprPtr lambda_body;    // for lambda
};

struct Expr {
  enum class Kind {
    Const, Name, Attr, Subscript, Slice, Call, Binary, Unary, And, Or, Compare, IfExp,
    List, Tuple, Dict, ListComp, DictComp, Lambda
  };
  Kind kind;
  int line = 0;
  int col = 0;

  Value constant;                      // Const
  std::string name;                    // Name, Attr
  std::vector<ExprPtr> children;       // operands / elements / call args / slice parts
  std::vector<std::string> kw_names;   // Call
  std::vector<ExprPtr> kw_values;      // Call
  BinOp bin_op = BinOp::Add;
  UnaryOp unary_op = UnaryOp::Neg;
  std::vector<CmpOp> cmp_ops;          // Compare: children.size() == cmp_ops.size() + 1
  std::vector<Comprehension> generators;
  std::shared_ptr<FunctionDef> lambda;  // Lambda

  Expr(Kind k, int l, int c) : kind(k), line(l), col(c) {}
};

struct ExceptClause {
  std::string alias;
  Block body;
};

struct Stmt {
  enum class Kind {
    ExprStmt, Assign, AugAssign, Return, If, For, While, Break, Continue, Pass,
    FunctionDef, Import, Try, Raise, Assert
  };
  Kind kind;
  int line = 0;

  std::vector<ExprPtr> targets;  // Assign (chained), AugAssign (one), For (one)
  ExprPtr value;                 // Assign/AugAssign/Return/ExprStmt/Raise, If/While test, For iter
  ExprPtr message;               // Assert
  BinOp aug_op = BinOp::Add;
  Block body;
  Block orelse;
  std::vector<ExceptClause> handlers;
  Block finally_body;
  std::shared_ptr<FunctionDef> function;
  std::string module;  // Import
  std::string alias;   // Import

  Stmt(Kind k, int l) : kind(k), line(l) {}
};

struct ProgramImpl {
  std::string source;
  Block body;
  std::vector<std::string> functions;
  bool allow_random = false;
  mutable std::atomic<std::uint64_t> calls{0};  // seeds `random` per call
};

/// Parser entry point (lexer included). Throws Error(ParseError).
std::shared_ptr<ProgramImpl> parse_program(std::string_view source);

}  // namespace vmsched::script
