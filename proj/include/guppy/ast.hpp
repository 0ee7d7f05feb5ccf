#pragma once

#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "guppy/const_value.hpp"
#include "guppy/diagnostics.hpp"
#include "guppy/token.hpp"
#include "guppy/types.hpp"

namespace guppy {

struct Expr;
struct Stmt;
using ExprPtr = std::unique_ptr<Expr>;
using StmtPtr = std::unique_ptr<Stmt>;

enum class UnaryOpKind { Neg, Not };
enum class BinOpKind { Add, Sub, Mul, Div, FloorDiv, Mod, BitAnd, BitOr, BitXor, Shl, Shr };
enum class CmpOpKind { Eq, Ne, Lt, Le, Gt, Ge };

const char* binop_text(BinOpKind op);
const char* cmpop_text(CmpOpKind op);

// How a name use was resolved by the typechecker.
enum class NameBinding { Unresolved, Local, Capture, Func, Builtin };

struct NameExpr {
  std::string name;
  NameBinding binding = NameBinding::Unresolved;
};
struct IntLitExpr {
  std::string text;
  long long value = 0;  // set by typecheck (overflow checked there)
};
struct FloatLitExpr {
  std::string text;
  double value = 0;
};
struct BoolLitExpr {
  bool value;
};
struct NoneLitExpr {};
struct UnaryExpr {
  UnaryOpKind op;
  ExprPtr operand;
};
struct BinaryExpr {
  BinOpKind op;
  ExprPtr lhs, rhs;
};
struct BoolOpExpr {
  bool is_and;
  ExprPtr lhs, rhs;
};
// operands.size() == ops.size() + 1; each interior operand evaluated once.
struct CompareExpr {
  std::vector<CmpOpKind> ops;
  std::vector<ExprPtr> operands;
};
struct CondExpr {
  ExprPtr cond, then_val, else_val;
};
struct CallExpr {
  ExprPtr callee;
  std::vector<ExprPtr> args;
};
struct MethodCallExpr {
  ExprPtr receiver;
  std::string method;
  Span method_span;
  std::vector<ExprPtr> args;
};
struct TupleExpr {
  std::vector<ExprPtr> elems;
};
struct ListExpr {
  std::vector<ExprPtr> elems;
};
struct ComprehensionExpr {
  ExprPtr element;
  std::vector<std::pair<std::string, Span>> targets;  // name or tuple of names
  ExprPtr iterable;
};
struct SubscriptExpr {
  ExprPtr base;
  ExprPtr index;
};
// Raw tokens between the parentheses of py(...), kept verbatim.
struct PyExpr {
  std::vector<Token> tokens;
};
// Inserted by typecheck: implicit numeric coercion; target type in Expr::ty.
struct CoerceExpr {
  ExprPtr operand;
};
// Inserted by typecheck: a resolved compile-time constant (py expressions).
struct ConstExpr {
  ConstValue value;
};

struct FunctionDef;
struct FuncDefStmt {
  std::unique_ptr<FunctionDef> def;
};

struct Expr {
  Span span;
  Type ty;  // filled by typecheck
  std::variant<NameExpr, IntLitExpr, FloatLitExpr, BoolLitExpr, NoneLitExpr, UnaryExpr,
               BinaryExpr, BoolOpExpr, CompareExpr, CondExpr, CallExpr, MethodCallExpr,
               TupleExpr, ListExpr, ComprehensionExpr, SubscriptExpr, PyExpr, CoerceExpr,
               ConstExpr>
      node;

  template <class T>
  T* as() {
    return std::get_if<T>(&node);
  }
  template <class T>
  const T* as() const {
    return std::get_if<T>(&node);
  }
};

// Assignment target: a single name or a flat tuple of names.
struct Pattern {
  Span span;
  bool is_tuple = false;
  std::vector<std::pair<std::string, Span>> names;
};

struct AssignStmt {
  Pattern target;
  ExprPtr value;
};
struct ExprStmt {
  ExprPtr expr;
};
struct IfStmt {
  ExprPtr cond;
  std::vector<StmtPtr> then_body;
  std::vector<StmtPtr> else_body;  // empty when no else; elif nests here
};
struct WhileStmt {
  ExprPtr cond;
  std::vector<StmtPtr> body;
};
struct ForStmt {
  Pattern target;
  ExprPtr iterable;
  std::vector<StmtPtr> body;
};
struct BreakStmt {};
struct ContinueStmt {};
struct ReturnStmt {
  ExprPtr value;  // null means `return None`
};

struct Stmt {
  Span span;
  std::variant<AssignStmt, ExprStmt, IfStmt, WhileStmt, ForStmt, BreakStmt, ContinueStmt,
               ReturnStmt, FuncDefStmt>
      node;

  template <class T>
  T* as() {
    return std::get_if<T>(&node);
  }
  template <class T>
  const T* as() const {
    return std::get_if<T>(&node);
  }
};

struct TypeAnnotation {
  bool present = false;
  Span span;
  ExprPtr expr;  // annotation surface syntax, converted by typecheck
};

struct Param {
  std::string name;
  Span name_span;
  TypeAnnotation ann;
};

struct Capture {
  std::string name;
  Type type;
};

struct FunctionDef {
  std::string name;
  Span name_span;
  Span span;
  std::vector<std::string> decorators;
  std::vector<Param> params;
  TypeAnnotation ret;
  std::vector<StmtPtr> body;

  // Filled by typecheck.
  Type fn_type;                   // Function(params, result)
  std::vector<Capture> captures;  // non-empty only for nested defs
};

struct Module {
  std::vector<std::unique_ptr<FunctionDef>> functions;
};

struct ParseResult {
  Module module;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return diagnostics.empty(); }
};

ParseResult parse_module(const std::vector<Token>& tokens);

// Pretty-prints a module back to surface syntax (used by roundtrip tests).
std::string to_source(const Module& m);

}  // namespace guppy
