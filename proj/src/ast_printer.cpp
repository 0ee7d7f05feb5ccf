#include <sstream>

#include "guppy/ast.hpp"

namespace guppy {

namespace {

struct Printer {
  std::ostringstream out;
  int indent = 0;

  void line_start() {
    for (int i = 0; i < indent; ++i) out << "  ";
  }

  void expr(const Expr& e, int parent_prec = 0) {
    std::visit([&](const auto& n) { visit(n, e, parent_prec); }, e.node);
  }

  // Precedence levels (higher binds tighter); parenthesize conservatively.
  void visit(const NameExpr& n, const Expr&, int) { out << n.name; }
  void visit(const IntLitExpr& n, const Expr&, int) { out << n.text; }
  void visit(const FloatLitExpr& n, const Expr&, int) { out << n.text; }
  void visit(const BoolLitExpr& n, const Expr&, int) { out << (n.value ? "True" : "False"); }
  void visit(const NoneLitExpr&, const Expr&, int) { out << "None"; }
  void visit(const UnaryExpr& n, const Expr&, int) {
    out << (n.op == UnaryOpKind::Not ? "not " : "-");
    out << "(";
    expr(*n.operand);
    out << ")";
  }
  void visit(const BinaryExpr& n, const Expr&, int) {
    out << "(";
    expr(*n.lhs);
    out << " " << binop_text(n.op) << " ";
    expr(*n.rhs);
    out << ")";
  }
  void visit(const BoolOpExpr& n, const Expr&, int) {
    out << "(";
    expr(*n.lhs);
    out << (n.is_and ? " and " : " or ");
    expr(*n.rhs);
    out << ")";
  }
  void visit(const CompareExpr& n, const Expr&, int) {
    out << "(";
    expr(*n.operands[0]);
    for (std::size_t i = 0; i < n.ops.size(); ++i) {
      out << " " << cmpop_text(n.ops[i]) << " ";
      expr(*n.operands[i + 1]);
    }
    out << ")";
  }
  void visit(const CondExpr& n, const Expr&, int) {
    out << "(";
    expr(*n.then_val);
    out << " if ";
    expr(*n.cond);
    out << " else ";
    expr(*n.else_val);
    out << ")";
  }
  void visit(const CallExpr& n, const Expr&, int) {
    expr(*n.callee);
    out << "(";
    for (std::size_t i = 0; i < n.args.size(); ++i) {
      if (i) out << ", ";
      expr(*n.args[i]);
    }
    out << ")";
  }
  void visit(const MethodCallExpr& n, const Expr&, int) {
    expr(*n.receiver);
    out << "." << n.method << "(";
    for (std::size_t i = 0; i < n.args.size(); ++i) {
      if (i) out << ", ";
      expr(*n.args[i]);
    }
    out << ")";
  }
  void visit(const TupleExpr& n, const Expr&, int) {
    out << "(";
    for (std::size_t i = 0; i < n.elems.size(); ++i) {
      if (i) out << ", ";
      expr(*n.elems[i]);
    }
    if (n.elems.size() == 1) out << ",";
    out << ")";
  }
  void visit(const ListExpr& n, const Expr&, int) {
    out << "[";
    for (std::size_t i = 0; i < n.elems.size(); ++i) {
      if (i) out << ", ";
      expr(*n.elems[i]);
    }
    out << "]";
  }
  void visit(const ComprehensionExpr& n, const Expr&, int) {
    out << "[";
    expr(*n.element);
    out << " for ";
    for (std::size_t i = 0; i < n.targets.size(); ++i) {
      if (i) out << ", ";
      out << n.targets[i].first;
    }
    out << " in ";
    expr(*n.iterable);
    out << "]";
  }
  void visit(const SubscriptExpr& n, const Expr&, int) {
    expr(*n.base);
    out << "[";
    expr(*n.index);
    out << "]";
  }
  void visit(const PyExpr& n, const Expr&, int) {
    out << "py(";
    for (std::size_t i = 0; i < n.tokens.size(); ++i) {
      if (i) out << " ";
      out << n.tokens[i].text;
    }
    out << ")";
  }
  void visit(const CoerceExpr& n, const Expr&, int) { expr(*n.operand); }
  void visit(const ConstExpr& n, const Expr&, int) { out << n.value.value.dump(); }

  void pattern(const Pattern& p) {
    for (std::size_t i = 0; i < p.names.size(); ++i) {
      if (i) out << ", ";
      out << p.names[i].first;
    }
  }

  void body(const std::vector<StmtPtr>& stmts) {
    ++indent;
    for (const auto& s : stmts) stmt(*s);
    --indent;
  }

  void stmt(const Stmt& s) {
    std::visit([&](const auto& n) { visit_stmt(n, s); }, s.node);
  }

  void visit_stmt(const AssignStmt& n, const Stmt&) {
    line_start();
    pattern(n.target);
    out << " = ";
    expr(*n.value);
    out << "\n";
  }
  void visit_stmt(const ExprStmt& n, const Stmt&) {
    line_start();
    expr(*n.expr);
    out << "\n";
  }
  void visit_stmt(const IfStmt& n, const Stmt&) {
    line_start();
    out << "if ";
    expr(*n.cond);
    out << ":\n";
    body(n.then_body);
    if (!n.else_body.empty()) {
      line_start();
      out << "else:\n";
      body(n.else_body);
    }
  }
  void visit_stmt(const WhileStmt& n, const Stmt&) {
    line_start();
    out << "while ";
    expr(*n.cond);
    out << ":\n";
    body(n.body);
  }
  void visit_stmt(const ForStmt& n, const Stmt&) {
    line_start();
    out << "for ";
    pattern(n.target);
    out << " in ";
    expr(*n.iterable);
    out << ":\n";
    body(n.body);
  }
  void visit_stmt(const BreakStmt&, const Stmt&) {
    line_start();
    out << "break\n";
  }
  void visit_stmt(const ContinueStmt&, const Stmt&) {
    line_start();
    out << "continue\n";
  }
  void visit_stmt(const ReturnStmt& n, const Stmt&) {
    line_start();
    out << "return";
    if (n.value) {
      out << " ";
      expr(*n.value);
    }
    out << "\n";
  }
  void visit_stmt(const FuncDefStmt& n, const Stmt&) { function(*n.def); }

  void function(const FunctionDef& f) {
    for (const auto& d : f.decorators) {
      line_start();
      out << "@" << d << "\n";
    }
    line_start();
    out << "def " << f.name << "(";
    for (std::size_t i = 0; i < f.params.size(); ++i) {
      if (i) out << ", ";
      out << f.params[i].name;
      if (f.params[i].ann.present) {
        out << ": ";
        expr(*f.params[i].ann.expr);
      }
    }
    out << ")";
    if (f.ret.present) {
      out << " -> ";
      expr(*f.ret.expr);
    }
    out << ":\n";
    body(f.body);
  }
};

}  // namespace

std::string to_source(const Module& m) {
  Printer p;
  for (const auto& f : m.functions) {
    p.function(*f);
    p.out << "\n";
  }
  return p.out.str();
}

}  // namespace guppy
