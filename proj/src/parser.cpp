#include <cassert>
#include <sstream>

#include "guppy/ast.hpp"

namespace guppy {

const char* binop_text(BinOpKind op) {
  switch (op) {
    case BinOpKind::Add: return "+";
    case BinOpKind::Sub: return "-";
    case BinOpKind::Mul: return "*";
    case BinOpKind::Div: return "/";
    case BinOpKind::FloorDiv: return "//";
    case BinOpKind::Mod: return "%";
    case BinOpKind::BitAnd: return "&";
    case BinOpKind::BitOr: return "|";
    case BinOpKind::BitXor: return "^";
    case BinOpKind::Shl: return "<<";
    case BinOpKind::Shr: return ">>";
  }
  return "?";
}

const char* cmpop_text(CmpOpKind op) {
  switch (op) {
    case CmpOpKind::Eq: return "==";
    case CmpOpKind::Ne: return "!=";
    case CmpOpKind::Lt: return "<";
    case CmpOpKind::Le: return "<=";
    case CmpOpKind::Gt: return ">";
    case CmpOpKind::Ge: return ">=";
  }
  return "?";
}

namespace {

struct ParseError {};

struct Parser {
  const std::vector<Token>& toks;
  std::size_t pos = 0;
  int loop_depth = 0;
  std::vector<Diagnostic> diags;

  explicit Parser(const std::vector<Token>& t) : toks(t) {}

  const Token& peek(std::size_t ahead = 0) const {
    std::size_t i = pos + ahead;
    return i < toks.size() ? toks[i] : toks.back();
  }
  const Token& advance() { return toks[pos < toks.size() - 1 ? pos++ : pos]; }
  bool check(TokenKind k) const { return peek().is(k); }
  bool check(TokenKind k, const char* t) const { return peek().is(k, t); }
  bool match(TokenKind k, const char* t) {
    if (check(k, t)) {
      advance();
      return true;
    }
    return false;
  }

  [[noreturn]] void fail(const std::string& msg, const Token& at) {
    diags.push_back(Diagnostic{DiagCategory::Syntax, msg, at.span, {}});
    throw ParseError{};
  }
  void expect(TokenKind k, const char* t, const char* what) {
    if (!match(k, t)) fail(std::string("expected '") + t + "' " + what, peek());
  }

  ExprPtr make(Span sp, auto node) {
    auto e = std::make_unique<Expr>();
    e->span = sp;
    e->node = std::move(node);
    return e;
  }
  static Span join(const Span& a, const Span& b) {
    return Span{a.start, b.end, a.line, a.col};
  }

  // ---- expressions ----

  ExprPtr expression() {
    ExprPtr value = or_expr();
    if (check(TokenKind::Keyword, "if")) {
      advance();
      ExprPtr cond = or_expr();
      if (!match(TokenKind::Keyword, "else"))
        fail("expected 'else' in conditional expression", peek());
      ExprPtr other = expression();
      Span sp = join(value->span, other->span);
      return make(sp, CondExpr{std::move(cond), std::move(value), std::move(other)});
    }
    return value;
  }

  ExprPtr or_expr() {
    ExprPtr lhs = and_expr();
    while (check(TokenKind::Keyword, "or")) {
      advance();
      ExprPtr rhs = and_expr();
      Span sp = join(lhs->span, rhs->span);
      lhs = make(sp, BoolOpExpr{false, std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  ExprPtr and_expr() {
    ExprPtr lhs = not_expr();
    while (check(TokenKind::Keyword, "and")) {
      advance();
      ExprPtr rhs = not_expr();
      Span sp = join(lhs->span, rhs->span);
      lhs = make(sp, BoolOpExpr{true, std::move(lhs), std::move(rhs)});
    }
    return lhs;
  }

  ExprPtr not_expr() {
    if (check(TokenKind::Keyword, "not")) {
      Span sp = peek().span;
      advance();
      ExprPtr operand = not_expr();
      Span full = join(sp, operand->span);
      return make(full, UnaryExpr{UnaryOpKind::Not, std::move(operand)});
    }
    return comparison();
  }

  bool cmp_op_here(CmpOpKind* out) const {
    if (!check(TokenKind::Op)) return false;
    const std::string& t = peek().text;
    if (t == "==") *out = CmpOpKind::Eq;
    else if (t == "!=") *out = CmpOpKind::Ne;
    else if (t == "<") *out = CmpOpKind::Lt;
    else if (t == "<=") *out = CmpOpKind::Le;
    else if (t == ">") *out = CmpOpKind::Gt;
    else if (t == ">=") *out = CmpOpKind::Ge;
    else return false;
    return true;
  }

  ExprPtr comparison() {
    ExprPtr first = bit_or();
    CmpOpKind op;
    if (!cmp_op_here(&op)) return first;
    CompareExpr chain;
    chain.operands.push_back(std::move(first));
    while (cmp_op_here(&op)) {
      advance();
      chain.ops.push_back(op);
      chain.operands.push_back(bit_or());
    }
    Span sp = join(chain.operands.front()->span, chain.operands.back()->span);
    return make(sp, std::move(chain));
  }

  ExprPtr binary_level(ExprPtr (Parser::*next)(), std::initializer_list<std::pair<const char*, BinOpKind>> ops) {
    ExprPtr lhs = (this->*next)();
    for (;;) {
      bool matched = false;
      for (auto [text, op] : ops) {
        if (check(TokenKind::Op, text)) {
          advance();
          ExprPtr rhs = (this->*next)();
          Span sp = join(lhs->span, rhs->span);
          lhs = make(sp, BinaryExpr{op, std::move(lhs), std::move(rhs)});
          matched = true;
          break;
        }
      }
      if (!matched) return lhs;
    }
  }

  ExprPtr bit_or() { return binary_level(&Parser::bit_xor, {{"|", BinOpKind::BitOr}}); }
  ExprPtr bit_xor() { return binary_level(&Parser::bit_and, {{"^", BinOpKind::BitXor}}); }
  ExprPtr bit_and() { return binary_level(&Parser::shift, {{"&", BinOpKind::BitAnd}}); }
  ExprPtr shift() {
    return binary_level(&Parser::arith, {{"<<", BinOpKind::Shl}, {">>", BinOpKind::Shr}});
  }
  ExprPtr arith() {
    return binary_level(&Parser::term, {{"+", BinOpKind::Add}, {"-", BinOpKind::Sub}});
  }
  ExprPtr term() {
    return binary_level(&Parser::unary, {{"*", BinOpKind::Mul},
                                         {"//", BinOpKind::FloorDiv},
                                         {"/", BinOpKind::Div},
                                         {"%", BinOpKind::Mod}});
  }

  ExprPtr unary() {
    if (check(TokenKind::Op, "-")) {
      Span sp = peek().span;
      advance();
      ExprPtr operand = unary();
      Span full = join(sp, operand->span);
      return make(full, UnaryExpr{UnaryOpKind::Neg, std::move(operand)});
    }
    if (check(TokenKind::Op, "+")) {
      advance();
      return unary();
    }
    return postfix();
  }

  std::vector<ExprPtr> call_args() {
    std::vector<ExprPtr> args;
    if (!check(TokenKind::Delim, ")")) {
      do {
        args.push_back(expression());
      } while (match(TokenKind::Delim, ","));
    }
    expect(TokenKind::Delim, ")", "after arguments");
    return args;
  }

  ExprPtr postfix() {
    ExprPtr e = atom();
    for (;;) {
      if (check(TokenKind::Delim, "(")) {
        advance();
        std::vector<ExprPtr> args = call_args();
        Span sp = Span{e->span.start, toks[pos - 1].span.end, e->span.line, e->span.col};
        e = make(sp, CallExpr{std::move(e), std::move(args)});
      } else if (check(TokenKind::Delim, "[")) {
        advance();
        ExprPtr index = expr_or_tuple_until("]");
        Span sp = Span{e->span.start, toks[pos - 1].span.end, e->span.line, e->span.col};
        e = make(sp, SubscriptExpr{std::move(e), std::move(index)});
      } else if (check(TokenKind::Delim, ".")) {
        advance();
        if (!check(TokenKind::Identifier)) fail("expected method name after '.'", peek());
        Token name = advance();
        expect(TokenKind::Delim, "(", "after method name");
        std::vector<ExprPtr> args = call_args();
        Span sp = Span{e->span.start, toks[pos - 1].span.end, e->span.line, e->span.col};
        e = make(sp, MethodCallExpr{std::move(e), name.text, name.span, std::move(args)});
      } else {
        return e;
      }
    }
  }

  // Parses a comma-separated expression list ending at `close`, consuming it.
  // A single element yields the expression itself, more yield a tuple.
  ExprPtr expr_or_tuple_until(const char* close) {
    Span start = peek().span;
    std::vector<ExprPtr> elems;
    do {
      elems.push_back(expression());
    } while (match(TokenKind::Delim, ","));
    expect(TokenKind::Delim, close, "in expression");
    if (elems.size() == 1) return std::move(elems[0]);
    Span sp = join(start, toks[pos - 1].span);
    return make(sp, TupleExpr{std::move(elems)});
  }

  ExprPtr py_call(const Token& py_tok) {
    // capture the raw argument tokens, balanced to the closing paren
    expect(TokenKind::Delim, "(", "after 'py'");
    std::vector<Token> raw;
    int depth = 1;
    for (;;) {
      const Token& t = peek();
      if (t.is(TokenKind::Eof)) fail("unterminated py(...) expression", t);
      if (t.is(TokenKind::Delim, "(") || t.is(TokenKind::Delim, "[")) ++depth;
      if (t.is(TokenKind::Delim, ")") || t.is(TokenKind::Delim, "]")) {
        if (t.text == ")" && depth == 1) break;
        --depth;
      }
      raw.push_back(t);
      advance();
    }
    Token close = advance();  // ')'
    if (raw.empty()) fail("py(...) requires an argument", close);
    Span sp = join(py_tok.span, close.span);
    return make(sp, PyExpr{std::move(raw)});
  }

  ExprPtr atom() {
    const Token& t = peek();
    switch (t.kind) {
      case TokenKind::IntLit: {
        advance();
        return make(t.span, IntLitExpr{t.text, 0});
      }
      case TokenKind::FloatLit: {
        advance();
        return make(t.span, FloatLitExpr{t.text, std::stod(t.text)});
      }
      case TokenKind::BoolLit: {
        advance();
        return make(t.span, BoolLitExpr{t.text == "True"});
      }
      case TokenKind::NoneLit: {
        advance();
        return make(t.span, NoneLitExpr{});
      }
      case TokenKind::Identifier: {
        advance();
        if (t.text == "py" && check(TokenKind::Delim, "(")) return py_call(t);
        return make(t.span, NameExpr{t.text, NameBinding::Unresolved});
      }
      case TokenKind::Delim: {
        if (t.text == "(") {
          advance();
          if (check(TokenKind::Delim, ")")) {
            Token close = advance();
            return make(join(t.span, close.span), TupleExpr{});
          }
          return expr_or_tuple_until(")");
        }
        if (t.text == "[") {
          advance();
          return list_display(t);
        }
        break;
      }
      default:
        break;
    }
    fail("expected expression", t);
  }

  ExprPtr list_display(const Token& open) {
    if (check(TokenKind::Delim, "]")) {
      Token close = advance();
      return make(join(open.span, close.span), ListExpr{});
    }
    ExprPtr first = expression();
    if (check(TokenKind::Keyword, "for")) {
      advance();
      ComprehensionExpr comp;
      comp.element = std::move(first);
      do {
        if (!check(TokenKind::Identifier)) fail("expected comprehension target name", peek());
        Token name = advance();
        comp.targets.emplace_back(name.text, name.span);
      } while (match(TokenKind::Delim, ","));
      if (!match(TokenKind::Keyword, "in")) fail("expected 'in' in comprehension", peek());
      comp.iterable = expression();
      if (check(TokenKind::Keyword, "if"))
        fail("conditional clauses in comprehensions are not supported", peek());
      expect(TokenKind::Delim, "]", "after comprehension");
      Span sp = join(open.span, toks[pos - 1].span);
      return make(sp, std::move(comp));
    }
    std::vector<ExprPtr> elems;
    elems.push_back(std::move(first));
    while (match(TokenKind::Delim, ",")) {
      if (check(TokenKind::Delim, "]")) break;
      elems.push_back(expression());
    }
    expect(TokenKind::Delim, "]", "after list display");
    Span sp = join(open.span, toks[pos - 1].span);
    return make(sp, ListExpr{std::move(elems)});
  }

  // ---- statements ----

  StmtPtr make_stmt(Span sp, auto node) {
    auto s = std::make_unique<Stmt>();
    s->span = sp;
    s->node = std::move(node);
    return s;
  }

  void expect_newline() {
    if (!match(TokenKind::Newline, "\n")) {
      if (!check(TokenKind::Eof)) fail("expected end of line", peek());
    }
  }

  std::vector<StmtPtr> block(const char* what) {
    expect(TokenKind::Delim, ":", what);
    if (!match(TokenKind::Newline, "\n")) fail("expected newline after ':'", peek());
    if (!check(TokenKind::Indent)) fail("expected indented block", peek());
    advance();
    std::vector<StmtPtr> stmts;
    while (!check(TokenKind::Dedent) && !check(TokenKind::Eof)) {
      if (match(TokenKind::Newline, "\n")) continue;
      StmtPtr s = statement();
      if (s) stmts.push_back(std::move(s));
    }
    if (check(TokenKind::Dedent)) advance();
    if (stmts.empty()) fail("empty block", peek());
    return stmts;
  }

  // Skips to the end of the current logical line after an error.
  void sync() {
    int depth = 0;
    while (!check(TokenKind::Eof)) {
      if (check(TokenKind::Newline) && depth == 0) {
        advance();
        return;
      }
      if (check(TokenKind::Indent)) ++depth;
      if (check(TokenKind::Dedent)) {
        if (depth == 0) return;
        --depth;
      }
      advance();
    }
  }

  StmtPtr statement() {
    try {
      return statement_inner();
    } catch (ParseError&) {
      sync();
      return nullptr;
    }
  }

  StmtPtr statement_inner() {
    const Token& t = peek();
    if (t.is(TokenKind::Keyword, "if")) return if_stmt();
    if (t.is(TokenKind::Keyword, "while")) return while_stmt();
    if (t.is(TokenKind::Keyword, "for")) return for_stmt();
    if (t.is(TokenKind::Keyword, "def") || t.is(TokenKind::Delim, "@")) {
      auto def = function_def();
      Span sp = def->span;
      return make_stmt(sp, FuncDefStmt{std::move(def)});
    }
    if (t.is(TokenKind::Keyword, "break")) {
      advance();
      if (loop_depth == 0) fail("break outside loop", t);
      expect_newline();
      return make_stmt(t.span, BreakStmt{});
    }
    if (t.is(TokenKind::Keyword, "continue")) {
      advance();
      if (loop_depth == 0) fail("continue outside loop", t);
      expect_newline();
      return make_stmt(t.span, ContinueStmt{});
    }
    if (t.is(TokenKind::Keyword, "return")) {
      advance();
      ReturnStmt ret;
      Span sp = t.span;
      if (!check(TokenKind::Newline) && !check(TokenKind::Eof)) {
        ret.value = expr_list_bare();
        sp = join(t.span, ret.value->span);
      }
      expect_newline();
      return make_stmt(sp, std::move(ret));
    }
    return simple_stmt();
  }

  // Comma-separated expressions not inside brackets (tuple display without parens).
  ExprPtr expr_list_bare() {
    ExprPtr first = expression();
    if (!check(TokenKind::Delim, ",")) return first;
    std::vector<ExprPtr> elems;
    elems.push_back(std::move(first));
    while (match(TokenKind::Delim, ",")) {
      if (check(TokenKind::Newline) || check(TokenKind::Eof)) break;
      elems.push_back(expression());
    }
    Span sp = join(elems.front()->span, elems.back()->span);
    return make(sp, TupleExpr{std::move(elems)});
  }

  Pattern pattern_from_expr(const Expr& e) {
    Pattern p;
    p.span = e.span;
    if (const auto* name = e.as<NameExpr>()) {
      p.is_tuple = false;
      p.names.emplace_back(name->name, e.span);
      return p;
    }
    if (const auto* tup = e.as<TupleExpr>()) {
      p.is_tuple = true;
      for (const auto& elem : tup->elems) {
        const auto* n = elem->as<NameExpr>();
        if (!n) fail("assignment target must be a name or tuple of names", *&elem->span, e);
        p.names.emplace_back(n->name, elem->span);
      }
      if (p.names.empty()) fail("empty assignment target", e.span, e);
      return p;
    }
    fail("assignment target must be a name or tuple of names", e.span, e);
  }

  [[noreturn]] void fail(const std::string& msg, const Span& sp, const Expr&) {
    diags.push_back(Diagnostic{DiagCategory::Syntax, msg, sp, {}});
    throw ParseError{};
  }

  StmtPtr simple_stmt() {
    ExprPtr e = expr_list_bare();
    if (check(TokenKind::Op, "=")) {
      advance();
      Pattern target = pattern_from_expr(*e);
      ExprPtr value = expr_list_bare();
      Span sp = join(e->span, value->span);
      expect_newline();
      return make_stmt(sp, AssignStmt{std::move(target), std::move(value)});
    }
    for (auto [text, op] : {std::pair<const char*, BinOpKind>{"+=", BinOpKind::Add},
                            {"-=", BinOpKind::Sub},
                            {"*=", BinOpKind::Mul},
                            {"/=", BinOpKind::Div}}) {
      if (check(TokenKind::Op, text)) {
        advance();
        const auto* name = e->as<NameExpr>();
        if (!name) fail("augmented assignment target must be a name", e->span, *e);
        Pattern target;
        target.span = e->span;
        target.names.emplace_back(name->name, e->span);
        ExprPtr lhs = make(e->span, NameExpr{name->name, NameBinding::Unresolved});
        ExprPtr value = expression();
        Span sp = join(e->span, value->span);
        ExprPtr combined = make(sp, BinaryExpr{op, std::move(lhs), std::move(value)});
        expect_newline();
        return make_stmt(sp, AssignStmt{std::move(target), std::move(combined)});
      }
    }
    Span sp = e->span;
    expect_newline();
    return make_stmt(sp, ExprStmt{std::move(e)});
  }

  StmtPtr if_stmt() {
    Token kw = advance();  // 'if' or 'elif'
    IfStmt node;
    node.cond = expression();
    node.then_body = block("after if condition");
    if (check(TokenKind::Keyword, "elif")) {
      StmtPtr nested = if_stmt();
      node.else_body.push_back(std::move(nested));
    } else if (check(TokenKind::Keyword, "else")) {
      advance();
      node.else_body = block("after else");
    }
    Span sp = kw.span;
    return make_stmt(sp, std::move(node));
  }

  StmtPtr while_stmt() {
    Token kw = advance();
    WhileStmt node;
    node.cond = expression();
    ++loop_depth;
    node.body = block("after while condition");
    --loop_depth;
    return make_stmt(kw.span, std::move(node));
  }

  StmtPtr for_stmt() {
    Token kw = advance();
    Pattern target;
    target.span = peek().span;
    do {
      if (!check(TokenKind::Identifier)) fail("expected loop variable name", peek());
      Token name = advance();
      target.names.emplace_back(name.text, name.span);
    } while (match(TokenKind::Delim, ","));
    target.is_tuple = target.names.size() > 1;
    target.span.end = toks[pos - 1].span.end;
    if (!match(TokenKind::Keyword, "in")) fail("expected 'in' in for statement", peek());
    ForStmt node;
    node.target = std::move(target);
    node.iterable = expression();
    ++loop_depth;
    node.body = block("after for clause");
    --loop_depth;
    return make_stmt(kw.span, std::move(node));
  }

  TypeAnnotation annotation() {
    TypeAnnotation ann;
    ann.present = true;
    ann.span = peek().span;
    ann.expr = postfix();
    ann.span = ann.expr->span;
    return ann;
  }

  std::unique_ptr<FunctionDef> function_def() {
    auto def = std::make_unique<FunctionDef>();
    while (check(TokenKind::Delim, "@")) {
      advance();
      if (!check(TokenKind::Identifier)) fail("expected decorator name", peek());
      def->decorators.push_back(advance().text);
      if (!match(TokenKind::Newline, "\n")) fail("expected newline after decorator", peek());
      while (match(TokenKind::Newline, "\n")) {
      }
    }
    const Token& kw = peek();
    if (!match(TokenKind::Keyword, "def")) fail("expected 'def'", kw);
    def->span = kw.span;
    if (!check(TokenKind::Identifier)) fail("expected function name", peek());
    Token name = advance();
    def->name = name.text;
    def->name_span = name.span;
    expect(TokenKind::Delim, "(", "after function name");
    if (!check(TokenKind::Delim, ")")) {
      do {
        if (!check(TokenKind::Identifier)) fail("expected parameter name", peek());
        Token pname = advance();
        Param p;
        p.name = pname.text;
        p.name_span = pname.span;
        if (match(TokenKind::Delim, ":")) p.ann = annotation();
        def->params.push_back(std::move(p));
      } while (match(TokenKind::Delim, ","));
    }
    expect(TokenKind::Delim, ")", "after parameters");
    if (match(TokenKind::Op, "->")) def->ret = annotation();
    int saved = loop_depth;
    loop_depth = 0;
    def->body = block("after function signature");
    loop_depth = saved;
    def->span.end = def->body.back()->span.end;
    return def;
  }

  Module module() {
    Module m;
    while (!check(TokenKind::Eof)) {
      if (match(TokenKind::Newline, "\n")) continue;
      if (check(TokenKind::Indent) || check(TokenKind::Dedent)) {
        advance();
        continue;
      }
      if (check(TokenKind::Keyword, "def") || check(TokenKind::Delim, "@")) {
        try {
          m.functions.push_back(function_def());
        } catch (ParseError&) {
          sync();
        }
        continue;
      }
      const Token& t = peek();
      if (t.is(TokenKind::Keyword, "break") || t.is(TokenKind::Keyword, "continue")) {
        diags.push_back(Diagnostic{DiagCategory::Syntax, t.text + " outside loop", t.span, {}});
      } else if (t.is(TokenKind::Keyword, "return")) {
        diags.push_back(Diagnostic{DiagCategory::Syntax, "return outside function", t.span, {}});
      } else {
        diags.push_back(Diagnostic{
            DiagCategory::Syntax, "expected function definition at module level", t.span, {}});
      }
      sync();
    }
    return m;
  }
};

}  // namespace

ParseResult parse_module(const std::vector<Token>& tokens) {
  Parser p(tokens);
  ParseResult result;
  result.module = p.module();
  result.diagnostics = std::move(p.diags);
  return result;
}

}  // namespace guppy
