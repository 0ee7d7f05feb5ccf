#include <algorithm>
#include <cassert>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "guppy/lower.hpp"
#include "guppy/typecheck.hpp"

namespace guppy {

namespace {

[[noreturn]] void ice(const std::string& msg) {
  throw std::logic_error("lowering: " + msg);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

using WireEnv = std::map<std::string, Wire>;   // name -> producing wire
using AbsEnv = std::map<std::string, Type>;    // abstract environment
using Row = std::vector<std::pair<std::string, Type>>;  // sorted by name

PortType vp(const Type& t) { return PortType::value(t); }

std::vector<Type> row_types(const Row& r) {
  std::vector<Type> out;
  for (const auto& [n, t] : r) out.push_back(t);
  return out;
}

std::vector<PortType> row_ports(const Row& r) {
  std::vector<PortType> out;
  for (const auto& [n, t] : r) out.push_back(vp(t));
  return out;
}

std::vector<std::string> row_names(const Row& r) {
  std::vector<std::string> out;
  for (const auto& [n, t] : r) out.push_back(n);
  return out;
}

// None-typed variables carry no runtime value and get no port.
Row row_of(const AbsEnv& e) {
  Row r;
  for (const auto& [n, t] : e)
    if (!t.is(Type::Kind::None)) r.emplace_back(n, t);
  return r;
}

AbsEnv env_of_row(const Row& r) {
  AbsEnv e;
  for (const auto& [n, t] : r) e[n] = t;
  return e;
}

std::vector<const Stmt*> ptrs(const std::vector<StmtPtr>& body) {
  std::vector<const Stmt*> out;
  out.reserve(body.size());
  for (const auto& s : body) out.push_back(s.get());
  return out;
}

// Children of an expression, except comprehensions (whose target scoping the
// callers handle themselves).
template <class F>
void for_each_child(const Expr& e, F&& f) {
  std::visit(overloaded{
                 [&](const UnaryExpr& n) { f(*n.operand); },
                 [&](const BinaryExpr& n) {
                   f(*n.lhs);
                   f(*n.rhs);
                 },
                 [&](const BoolOpExpr& n) {
                   f(*n.lhs);
                   f(*n.rhs);
                 },
                 [&](const CompareExpr& n) {
                   for (const auto& o : n.operands) f(*o);
                 },
                 [&](const CondExpr& n) {
                   f(*n.cond);
                   f(*n.then_val);
                   f(*n.else_val);
                 },
                 [&](const CallExpr& n) {
                   f(*n.callee);
                   for (const auto& a : n.args) f(*a);
                 },
                 [&](const MethodCallExpr& n) {
                   f(*n.receiver);
                   for (const auto& a : n.args) f(*a);
                 },
                 [&](const TupleExpr& n) {
                   for (const auto& el : n.elems) f(*el);
                 },
                 [&](const ListExpr& n) {
                   for (const auto& el : n.elems) f(*el);
                 },
                 [&](const SubscriptExpr& n) {
                   f(*n.base);
                   f(*n.index);
                 },
                 [&](const CoerceExpr& n) { f(*n.operand); },
                 [&](const auto&) {},
             },
             e.node);
}

const char* binop_ir_name(BinOpKind op) {
  switch (op) {
    case BinOpKind::Add: return "add";
    case BinOpKind::Sub: return "sub";
    case BinOpKind::Mul: return "mul";
    case BinOpKind::Div: return "div";
    case BinOpKind::FloorDiv: return "floordiv";
    case BinOpKind::Mod: return "mod";
    case BinOpKind::BitAnd: return "and";
    case BinOpKind::BitOr: return "or";
    case BinOpKind::BitXor: return "xor";
    case BinOpKind::Shl: return "shl";
    case BinOpKind::Shr: return "shr";
  }
  return "?";
}

const char* cmpop_ir_name(CmpOpKind op) {
  switch (op) {
    case CmpOpKind::Eq: return "eq";
    case CmpOpKind::Ne: return "ne";
    case CmpOpKind::Lt: return "lt";
    case CmpOpKind::Le: return "le";
    case CmpOpKind::Gt: return "gt";
    case CmpOpKind::Ge: return "ge";
  }
  return "?";
}

struct NestedFn {
  NodeId target = kInvalidNode;
  std::vector<std::string> capture_names;  // sorted; packed fresh at each call
  Type fn_type;                            // unlifted type, for first-class use
};

struct FuncLowerer;

struct ModuleLowerer {
  const Module& m;
  LoweringMode mode;
  GraphBuilder b;
  std::map<std::string, NodeId> fns;

  // Creates a FuncDefn with its Input/Output pair; the body comes later.
  NodeId declare(const std::string& name, const std::vector<Type>& params, const Type& result) {
    FuncSig sig{params, result};
    Payload p;
    p.name = name;
    p.sig = std::move(sig);
    NodeId f = b.add_node(NodeKind::FuncDefn, b.root(), {}, {}, std::move(p));
    std::vector<PortType> ins;
    for (const auto& t : params) ins.push_back(vp(t));
    b.add_node(NodeKind::Input, f, {}, std::move(ins));
    std::vector<PortType> res;
    if (!result.is(Type::Kind::None)) res.push_back(vp(result));
    b.add_node(NodeKind::Output, f, std::move(res), {});
    return f;
  }

  NodeId gate_wrapper(const std::string& gname);
  Graph run();
};

struct LoopCtx {
  std::vector<std::string> carried;  // sorted names, continue variant (0)
  std::vector<std::string> exits;    // sorted names, break variant (1)
  PortType sum;
};

struct BlockTarget {
  NodeId blk = kInvalidNode;
  Row row;
};

struct LoopTargets {
  BlockTarget header, after;
};

struct FuncLowerer {
  ModuleLowerer& M;
  GraphBuilder& b;
  const FunctionDef& def;
  NodeId fn;
  Type result_type;
  std::map<std::string, NestedFn> nested;
  NodeId cfg = kInvalidNode;
  NodeId exit_blk = kInvalidNode;
  int synth_counter = 0;

  FuncLowerer(ModuleLowerer& ml, const FunctionDef& d, NodeId f)
      : M(ml), b(ml.b), def(d), fn(f), result_type(d.fn_type.fn_result()) {}

  std::string synth(const char* base) {
    return std::string("%") + base + std::to_string(synth_counter++);
  }

  // ---- small node helpers ----

  NodeId add(NodeKind k, NodeId parent, std::vector<PortType> in, std::vector<PortType> out,
             Payload p = {}) {
    return b.add_node(k, parent, std::move(in), std::move(out), std::move(p));
  }

  Wire op_node(NodeKind kind, const char* name, NodeId parent, const std::vector<Wire>& ins,
               const Type& out) {
    std::vector<PortType> ip;
    for (const auto& w : ins) ip.push_back(b.out_port(w));
    Payload p;
    p.name = name;
    NodeId n = add(kind, parent, std::move(ip), {vp(out)}, std::move(p));
    for (std::uint32_t i = 0; i < ins.size(); ++i) b.connect(ins[i], n, i);
    return {n, 0};
  }

  Wire const_wire(NodeId parent, ConstValue v) {
    Payload p;
    p.value = std::move(v);
    Type ty = p.value->type;
    NodeId n = add(NodeKind::Const, parent, {}, {vp(ty)}, std::move(p));
    return {n, 0};
  }

  Wire const_int(NodeId parent, long long v) {
    return const_wire(parent, ConstValue{Type::int_(), nlohmann::json(v)});
  }

  Wire load_function(NodeId parent, NodeId target, const Type& fn_ty) {
    Payload p;
    p.target = target;
    NodeId n = add(NodeKind::LoadFunction, parent, {}, {vp(fn_ty)}, std::move(p));
    return {n, 0};
  }

  Wire pack_tuple(NodeId parent, const std::vector<Wire>& ws) {
    std::vector<PortType> ip;
    std::vector<Type> ts;
    for (const auto& w : ws) {
      ip.push_back(b.out_port(w));
      ts.push_back(b.out_port(w).value_type);
    }
    NodeId n = add(NodeKind::MakeTuple, parent, std::move(ip), {vp(Type::tuple(ts))});
    for (std::uint32_t i = 0; i < ws.size(); ++i) b.connect(ws[i], n, i);
    return {n, 0};
  }

  std::vector<Wire> unpack_tuple(NodeId parent, Wire w) {
    const Type& t = b.out_port(w).value_type;
    if (!t.is(Type::Kind::Tuple)) ice("unpack of a non-tuple");
    std::vector<PortType> op;
    for (const auto& el : t.elems()) op.push_back(vp(el));
    NodeId n = add(NodeKind::UnpackTuple, parent, {vp(t)}, std::move(op));
    b.connect(w, n, 0);
    std::vector<Wire> out;
    for (std::uint32_t i = 0; i < t.elems().size(); ++i) out.push_back({n, i});
    return out;
  }

  // bool -> 2-variant unit sum (variant 1 = true), the predicate shape
  // Conditional expects.
  Wire bool_sum(NodeId parent, Wire w) {
    Payload p;
    p.name = "bool_tag";
    NodeId n = add(NodeKind::IntOp, parent, {vp(Type::bool_())},
                   {PortType::sum({{}, {}})}, std::move(p));
    b.connect(w, n, 0);
    return {n, 0};
  }

  Wire coerce_wire(NodeId parent, Wire w, const Type& from, const Type& to) {
    if (from == to) return w;
    Wire cur = w;
    Type t = from;
    if (t.is(Type::Kind::Bool) && !to.is(Type::Kind::Bool)) {
      cur = op_node(NodeKind::IntOp, "bool_to_int", parent, {cur}, Type::int_());
      t = Type::int_();
    }
    if (t.is(Type::Kind::Int) && to.is(Type::Kind::Float)) {
      cur = op_node(NodeKind::FloatOp, "int_to_float", parent, {cur}, Type::float_());
      t = Type::float_();
    }
    if (!(t == to)) ice("unsupported coercion " + from.tag() + " -> " + to.tag());
    return cur;
  }

  Wire list_nil(NodeId parent, const Type& list_ty) {
    Payload p;
    p.name = "nil";
    NodeId n = add(NodeKind::ListOp, parent, {}, {vp(list_ty)}, std::move(p));
    return {n, 0};
  }

  Wire list_cons(NodeId parent, Wire head, Wire tail) {
    const Type& lt = b.out_port(tail).value_type;
    Payload p;
    p.name = "cons";
    NodeId n = add(NodeKind::ListOp, parent, {b.out_port(head), vp(lt)}, {vp(lt)}, std::move(p));
    b.connect(head, n, 0);
    b.connect(tail, n, 1);
    return {n, 0};
  }

  // Destroys a (provably empty) linear list left over after a draining loop.
  void list_drop(NodeId parent, Wire w) {
    Payload p;
    p.name = "drop";
    NodeId n = add(NodeKind::ListOp, parent, {b.out_port(w)}, {}, std::move(p));
    b.connect(w, n, 0);
  }

  // ---- nested function lifting (pre-pass) ----

  void collect_nested(const std::vector<StmtPtr>& body) {
    for (const auto& sp : body) {
      const Stmt& s = *sp;
      if (const auto* fds = s.as<FuncDefStmt>()) {
        register_nested(*fds->def);
      } else if (const auto* iff = s.as<IfStmt>()) {
        collect_nested(iff->then_body);
        collect_nested(iff->else_body);
      } else if (const auto* wh = s.as<WhileStmt>()) {
        collect_nested(wh->body);
      } else if (const auto* fr = s.as<ForStmt>()) {
        collect_nested(fr->body);
      }
    }
  }

  void register_nested(const FunctionDef& nd) {
    if (nested.count(nd.name)) ice("duplicate nested function '" + nd.name + "'");
    NestedFn info;
    info.fn_type = nd.fn_type;
    std::vector<Type> params;
    if (!nd.captures.empty()) {
      std::vector<Type> ct;
      for (const auto& c : nd.captures) {
        info.capture_names.push_back(c.name);
        ct.push_back(c.type);
      }
      params.push_back(Type::tuple(std::move(ct)));
    }
    for (const auto& t : nd.fn_type.fn_params()) params.push_back(t);
    std::string lifted = "__local_" + def.name + "_" + nd.name;
    if (M.fns.count(lifted)) ice("lifted name collision: " + lifted);
    info.target = M.declare(lifted, params, nd.fn_type.fn_result());
    M.fns[lifted] = info.target;
    nested[nd.name] = info;
    FuncLowerer inner(M, nd, info.target);
    inner.lower();
  }

  // Wire for a captured value at a pack site. Capture-free nested functions
  // materialize as LoadFunction; everything else must be live in `env`.
  Wire capture_value(const std::string& name, NodeId parent, WireEnv& env) {
    auto nit = nested.find(name);
    if (nit != nested.end()) {
      if (!nit->second.capture_names.empty())
        ice("nested function '" + name + "' with captures used as a value");
      return load_function(parent, nit->second.target, nit->second.fn_type);
    }
    auto it = env.find(name);
    if (it == env.end()) ice("capture '" + name + "' is not bound");
    return it->second;  // captures are non-linear; the wire stays available
  }

  // ---- free / assigned name collection ----

  void free_names_expr(const Expr& e, std::set<std::string>& out,
                       std::set<std::string>& masked) {
    if (const auto* nx = e.as<NameExpr>()) {
      if (masked.count(nx->name)) return;
      auto nit = nested.find(nx->name);
      if (nit != nested.end()) {
        // call/use of a nested function needs its captures, not a wire of its own
        for (const auto& c : nit->second.capture_names)
          if (!masked.count(c)) out.insert(c);
        return;
      }
      out.insert(nx->name);
      return;
    }
    if (const auto* cp = e.as<ComprehensionExpr>()) {
      free_names_expr(*cp->iterable, out, masked);
      std::vector<std::string> added;
      for (const auto& [t, sp] : cp->targets)
        if (masked.insert(t).second) added.push_back(t);
      free_names_expr(*cp->element, out, masked);
      for (const auto& t : added) masked.erase(t);
      return;
    }
    for_each_child(e, [&](const Expr& c) { free_names_expr(c, out, masked); });
  }

  void free_names_stmts(const std::vector<const Stmt*>& stmts, std::set<std::string>& out) {
    std::set<std::string> masked;
    for (const Stmt* sp : stmts) free_names_stmt(*sp, out, masked);
  }

  void free_names_stmt(const Stmt& s, std::set<std::string>& out,
                       std::set<std::string>& masked) {
    std::visit(overloaded{
                   [&](const AssignStmt& n) { free_names_expr(*n.value, out, masked); },
                   [&](const ExprStmt& n) { free_names_expr(*n.expr, out, masked); },
                   [&](const IfStmt& n) {
                     free_names_expr(*n.cond, out, masked);
                     for (const auto& c : n.then_body) free_names_stmt(*c, out, masked);
                     for (const auto& c : n.else_body) free_names_stmt(*c, out, masked);
                   },
                   [&](const WhileStmt& n) {
                     free_names_expr(*n.cond, out, masked);
                     for (const auto& c : n.body) free_names_stmt(*c, out, masked);
                   },
                   [&](const ForStmt& n) {
                     free_names_expr(*n.iterable, out, masked);
                     for (const auto& c : n.body) free_names_stmt(*c, out, masked);
                   },
                   [&](const ReturnStmt& n) {
                     if (n.value) free_names_expr(*n.value, out, masked);
                   },
                   [&](const FuncDefStmt& n) {
                     // its call sites will pack these from the local environment
                     for (const auto& c : n.def->captures)
                       if (!masked.count(c.name)) out.insert(c.name);
                   },
                   [&](const BreakStmt&) {},
                   [&](const ContinueStmt&) {},
               },
               s.node);
  }

  void assigned_names(const std::vector<const Stmt*>& stmts, std::set<std::string>& out) {
    for (const Stmt* sp : stmts) {
      std::visit(overloaded{
                     [&](const AssignStmt& n) {
                       for (const auto& [name, sp2] : n.target.names) out.insert(name);
                     },
                     [&](const IfStmt& n) {
                       assigned_names(ptrs(n.then_body), out);
                       assigned_names(ptrs(n.else_body), out);
                     },
                     [&](const WhileStmt& n) { assigned_names(ptrs(n.body), out); },
                     [&](const ForStmt& n) {
                       for (const auto& [name, sp2] : n.target.names) out.insert(name);
                       assigned_names(ptrs(n.body), out);
                     },
                     [&](const auto&) {},
                 },
                 sp->node);
    }
  }

  // ---- abstract interpretation (must mirror the concrete lowering) ----

  AbsEnv abs_of(const WireEnv& env) {
    AbsEnv a;
    for (const auto& [n, w] : env) a[n] = b.out_port(w).value_type;
    return a;
  }

  static std::optional<AbsEnv> join_abs(const std::optional<AbsEnv>& x,
                                        const std::optional<AbsEnv>& y) {
    if (!x) return y;
    if (!y) return x;
    AbsEnv out;
    for (const auto& [n, t] : *x) {
      auto it = y->find(n);
      if (it != y->end() && it->second == t) out[n] = t;
    }
    return out;
  }

  void abs_consume(const Expr& e, AbsEnv& env, std::set<std::string>& masked) {
    if (const auto* nx = e.as<NameExpr>()) {
      if (masked.count(nx->name)) return;
      auto it = env.find(nx->name);
      if (it != env.end() && it->second.is_linear()) env.erase(it);
      return;
    }
    if (const auto* cp = e.as<ComprehensionExpr>()) {
      abs_consume(*cp->iterable, env, masked);
      std::vector<std::string> added;
      for (const auto& [t, sp] : cp->targets)
        if (masked.insert(t).second) added.push_back(t);
      abs_consume(*cp->element, env, masked);
      for (const auto& t : added) masked.erase(t);
      return;
    }
    for_each_child(e, [&](const Expr& c) { abs_consume(c, env, masked); });
  }

  void abs_consume(const Expr& e, AbsEnv& env) {
    std::set<std::string> masked;
    abs_consume(e, env, masked);
  }

  static void abs_bind(const Pattern& p, const Type& ty, AbsEnv& env) {
    if (!p.is_tuple) {
      env[p.names[0].first] = ty;
      return;
    }
    if (!ty.is(Type::Kind::Tuple) || ty.elems().size() != p.names.size())
      ice("cannot unpack " + ty.tag() + " abstractly");
    for (std::size_t i = 0; i < p.names.size(); ++i)
      env[p.names[i].first] = ty.elems()[i];
  }

  struct AbsOut {
    std::optional<AbsEnv> fall;
    std::vector<AbsEnv> breaks, continues;
  };

  void abs_simple_stmt(const Stmt& s, AbsEnv& env) {
    if (const auto* a = s.as<AssignStmt>()) {
      abs_consume(*a->value, env);
      abs_bind(a->target, a->value->ty, env);
    } else if (const auto* ex = s.as<ExprStmt>()) {
      abs_consume(*ex->expr, env);
    } else if (s.as<FuncDefStmt>()) {
      // lifted in the pre-pass; no runtime effect here
    } else {
      ice("not a simple statement");
    }
  }

  AbsOut abs_seq(const std::vector<const Stmt*>& stmts, AbsEnv env) {
    AbsOut out;
    for (const Stmt* sp : stmts) {
      const Stmt& s = *sp;
      if (s.as<BreakStmt>()) {
        out.breaks.push_back(env);
        return out;
      }
      if (s.as<ContinueStmt>()) {
        out.continues.push_back(env);
        return out;
      }
      if (const auto* r = s.as<ReturnStmt>()) {
        if (r->value) abs_consume(*r->value, env);
        return out;  // fall stays empty
      }
      if (const auto* iff = s.as<IfStmt>()) {
        abs_consume(*iff->cond, env);
        AbsOut t = abs_seq(ptrs(iff->then_body), env);
        AbsOut e2 = abs_seq(ptrs(iff->else_body), env);
        for (auto& v : t.breaks) out.breaks.push_back(std::move(v));
        for (auto& v : e2.breaks) out.breaks.push_back(std::move(v));
        for (auto& v : t.continues) out.continues.push_back(std::move(v));
        for (auto& v : e2.continues) out.continues.push_back(std::move(v));
        auto j = join_abs(t.fall, e2.fall);
        if (!j) return out;
        env = std::move(*j);
        continue;
      }
      if (const auto* wh = s.as<WhileStmt>()) {
        AbsOut bo = abs_seq(ptrs(wh->body), env);
        std::optional<AbsEnv> ex = env;  // condition-false path
        for (const auto& be : bo.breaks) ex = join_abs(ex, be);
        env = std::move(*ex);
        continue;
      }
      if (const auto* fr = s.as<ForStmt>()) {
        abs_consume(*fr->iterable, env);
        AbsEnv body_env = env;
        abs_bind(fr->target, elem_type_of(*fr), body_env);
        AbsOut bo = abs_seq(ptrs(fr->body), body_env);
        std::optional<AbsEnv> ex = env;  // zero iterations possible
        for (const auto& be : bo.breaks) ex = join_abs(ex, be);
        env = std::move(*ex);
        continue;
      }
      abs_simple_stmt(s, env);
    }
    out.fall = std::move(env);
    return out;
  }

  static Type elem_type_of(const ForStmt& fr) {
    const Type& it = fr.iterable->ty;
    if (!it.is(Type::Kind::List)) ice("for over a non-list");
    return it.list_elem();
  }

  // ---- expressions ----

  Wire lower_expr(const Expr& e, NodeId parent, WireEnv& env) {
    std::vector<Wire> ws = lower_expr_multi(e, parent, env);
    if (ws.size() == 1) return ws[0];
    if (ws.empty()) ice("expected a value, got none");
    return pack_tuple(parent, ws);
  }

  std::vector<Wire> lower_expr_multi(const Expr& e, NodeId parent, WireEnv& env) {
    return std::visit(
        overloaded{
            [&](const NameExpr& n) { return lower_name(e, n, parent, env); },
            [&](const IntLitExpr& n) -> std::vector<Wire> {
              return {const_wire(parent, ConstValue{Type::int_(), nlohmann::json(n.value)})};
            },
            [&](const FloatLitExpr& n) -> std::vector<Wire> {
              return {const_wire(parent, ConstValue{Type::float_(), nlohmann::json(n.value)})};
            },
            [&](const BoolLitExpr& n) -> std::vector<Wire> {
              return {const_wire(parent, ConstValue{Type::bool_(), nlohmann::json(n.value)})};
            },
            [&](const NoneLitExpr&) -> std::vector<Wire> { return {}; },
            [&](const UnaryExpr& n) -> std::vector<Wire> {
              Wire w = lower_expr(*n.operand, parent, env);
              if (n.op == UnaryOpKind::Not)
                return {op_node(NodeKind::IntOp, "not", parent, {w}, Type::bool_())};
              if (e.ty.is(Type::Kind::Float))
                return {op_node(NodeKind::FloatOp, "neg", parent, {w}, e.ty)};
              return {op_node(NodeKind::IntOp, "neg", parent, {w}, Type::int_())};
            },
            [&](const BinaryExpr& n) -> std::vector<Wire> {
              Wire l = lower_expr(*n.lhs, parent, env);
              Wire r = lower_expr(*n.rhs, parent, env);
              bool fl = n.lhs->ty.is(Type::Kind::Float);
              NodeKind k = fl ? NodeKind::FloatOp : NodeKind::IntOp;
              return {op_node(k, binop_ir_name(n.op), parent, {l, r}, e.ty)};
            },
            [&](const BoolOpExpr& n) -> std::vector<Wire> {
              return {lower_boolop(n, parent, env)};
            },
            [&](const CompareExpr& n) -> std::vector<Wire> {
              return {lower_compare(n, parent, env)};
            },
            [&](const CondExpr& n) { return lower_condexpr(e, n, parent, env); },
            [&](const CallExpr& n) { return lower_call(e, n, parent, env); },
            [&](const MethodCallExpr& n) {
              return lower_list_builtin(n.method, *n.receiver, n.args, e, parent, env);
            },
            [&](const TupleExpr& n) -> std::vector<Wire> {
              std::vector<Wire> out;
              for (const auto& el : n.elems) out.push_back(lower_expr(*el, parent, env));
              return out;
            },
            [&](const ListExpr& n) -> std::vector<Wire> {
              std::vector<Wire> elems;
              for (const auto& el : n.elems) elems.push_back(lower_expr(*el, parent, env));
              Wire acc = list_nil(parent, e.ty);
              for (std::size_t i = elems.size(); i-- > 0;)
                acc = list_cons(parent, elems[i], acc);
              return {acc};
            },
            [&](const ComprehensionExpr& n) -> std::vector<Wire> {
              return {lower_comprehension(e, n, parent, env)};
            },
            [&](const SubscriptExpr& n) -> std::vector<Wire> {
              Wire base = lower_expr(*n.base, parent, env);
              Wire idx = lower_expr(*n.index, parent, env);
              Payload p;
              p.name = "get";
              NodeId g = add(NodeKind::ListOp, parent, {b.out_port(base), vp(Type::int_())},
                             {vp(e.ty)}, std::move(p));
              b.connect(base, g, 0);
              b.connect(idx, g, 1);
              return {Wire{g, 0}};
            },
            [&](const PyExpr&) -> std::vector<Wire> {
              ice("py(...) expression survived type checking");
            },
            [&](const CoerceExpr& n) -> std::vector<Wire> {
              Wire w = lower_expr(*n.operand, parent, env);
              return {coerce_wire(parent, w, n.operand->ty, e.ty)};
            },
            [&](const ConstExpr& n) -> std::vector<Wire> {
              return {const_wire(parent, n.value)};
            },
        },
        e.node);
  }

  std::vector<Wire> lower_name(const Expr& e, const NameExpr& n, NodeId parent, WireEnv& env) {
    if (e.ty.is(Type::Kind::None)) return {};
    auto nit = nested.find(n.name);
    if (nit != nested.end() && n.binding == NameBinding::Local)
      return {capture_value(n.name, parent, env)};
    switch (n.binding) {
      case NameBinding::Local:
      case NameBinding::Capture: {
        auto it = env.find(n.name);
        if (it == env.end()) ice("unbound name '" + n.name + "'");
        Wire w = it->second;
        if (e.ty.is_linear()) env.erase(it);
        return {w};
      }
      case NameBinding::Func: {
        auto fit = M.fns.find(n.name);
        if (fit == M.fns.end()) ice("unknown function '" + n.name + "'");
        return {load_function(parent, fit->second, e.ty)};
      }
      case NameBinding::Builtin: {
        NodeId t = M.gate_wrapper(n.name);
        return {load_function(parent, t, e.ty)};
      }
      default:
        ice("unresolved name '" + n.name + "'");
    }
  }

  Wire lower_boolop(const BoolOpExpr& n, NodeId parent, WireEnv& env) {
    Wire l = lower_expr(*n.lhs, parent, env);
    Wire ls = bool_sum(parent, l);
    // the skipped branch yields the short-circuit constant
    std::set<std::string> fr, masked;
    free_names_expr(*n.rhs, fr, masked);
    Row in_row;
    for (const auto& name : fr) {
      auto it = env.find(name);
      if (it != env.end()) in_row.emplace_back(name, b.out_port(it->second).value_type);
    }
    std::vector<PortType> ip{b.out_port(ls)};
    for (const auto& [name, t] : in_row) ip.push_back(vp(t));
    NodeId c = add(NodeKind::Conditional, parent, std::move(ip), {vp(Type::bool_())});
    b.connect(ls, c, 0);
    for (std::uint32_t i = 0; i < in_row.size(); ++i)
      b.connect(env.at(in_row[i].first), c, i + 1);
    int eval_idx = n.is_and ? 1 : 0;
    for (int v = 0; v < 2; ++v) {
      Payload cp;
      cp.index = v;
      NodeId cs = add(NodeKind::Case, c, {}, {}, std::move(cp));
      NodeId cin = add(NodeKind::Input, cs, {}, row_ports(in_row));
      NodeId cout = add(NodeKind::Output, cs, {vp(Type::bool_())}, {});
      Wire w;
      if (v == eval_idx) {
        WireEnv ce;
        for (std::uint32_t i = 0; i < in_row.size(); ++i) ce[in_row[i].first] = {cin, i};
        w = lower_expr(*n.rhs, cs, ce);
      } else {
        w = const_wire(cs, ConstValue{Type::bool_(), nlohmann::json(!n.is_and)});
      }
      b.connect(w, cout, 0);
    }
    return {c, 0};
  }

  Wire lower_compare(const CompareExpr& n, NodeId parent, WireEnv& env) {
    std::vector<Wire> ops;
    for (const auto& o : n.operands) ops.push_back(lower_expr(*o, parent, env));
    Wire acc{kInvalidNode, 0};
    for (std::size_t i = 0; i < n.ops.size(); ++i) {
      Wire l = ops[i], r = ops[i + 1];
      Type lt = n.operands[i]->ty, rt = n.operands[i + 1]->ty;
      if (!(lt == rt)) {
        auto res = resolve_compare(n.ops[i], lt, rt);
        if (!res) ice("uncomparable operands in a chain");
        if (res->coerce_lhs) l = coerce_wire(parent, l, lt, res->operand_type);
        if (res->coerce_rhs) r = coerce_wire(parent, r, rt, res->operand_type);
      }
      Wire c = op_node(NodeKind::CmpOp, cmpop_ir_name(n.ops[i]), parent, {l, r}, Type::bool_());
      acc = (i == 0) ? c : op_node(NodeKind::IntOp, "and", parent, {acc, c}, Type::bool_());
    }
    return acc;
  }

  std::vector<Wire> lower_condexpr(const Expr& e, const CondExpr& n, NodeId parent,
                                   WireEnv& env) {
    Wire c = lower_expr(*n.cond, parent, env);
    Wire cs = bool_sum(parent, c);
    std::set<std::string> fr, masked;
    free_names_expr(*n.then_val, fr, masked);
    free_names_expr(*n.else_val, fr, masked);
    Row in_row;
    for (const auto& name : fr) {
      auto it = env.find(name);
      if (it != env.end()) in_row.emplace_back(name, b.out_port(it->second).value_type);
    }
    bool none_result = e.ty.is(Type::Kind::None);
    std::vector<PortType> out_ports;
    if (!none_result) out_ports.push_back(vp(e.ty));
    std::vector<PortType> ip{b.out_port(cs)};
    for (const auto& [name, t] : in_row) ip.push_back(vp(t));
    NodeId cnd = add(NodeKind::Conditional, parent, std::move(ip), out_ports);
    b.connect(cs, cnd, 0);
    for (std::uint32_t i = 0; i < in_row.size(); ++i)
      b.connect(env.at(in_row[i].first), cnd, i + 1);
    for (int v = 0; v < 2; ++v) {
      const Expr& arm = (v == 1) ? *n.then_val : *n.else_val;
      Payload cp;
      cp.index = v;
      NodeId cs2 = add(NodeKind::Case, cnd, {}, {}, std::move(cp));
      NodeId cin = add(NodeKind::Input, cs2, {}, row_ports(in_row));
      NodeId cout = add(NodeKind::Output, cs2, out_ports, {});
      WireEnv ce;
      for (std::uint32_t i = 0; i < in_row.size(); ++i) ce[in_row[i].first] = {cin, i};
      if (none_result) {
        lower_expr_multi(arm, cs2, ce);
      } else {
        Wire w = lower_expr(arm, cs2, ce);
        b.connect(w, cout, 0);
      }
    }
    if (none_result) return {};
    return {Wire{cnd, 0}};
  }

  std::vector<Wire> emit_call(NodeId parent, NodeId target, const std::vector<Wire>& args,
                              const Type& result) {
    std::vector<PortType> ip;
    for (const auto& w : args) ip.push_back(b.out_port(w));
    std::vector<PortType> op;
    if (!result.is(Type::Kind::None)) op.push_back(vp(result));
    Payload p;
    p.target = target;
    NodeId n = add(NodeKind::Call, parent, std::move(ip), std::move(op), std::move(p));
    for (std::uint32_t i = 0; i < args.size(); ++i) b.connect(args[i], n, i);
    if (result.is(Type::Kind::None)) return {};
    return {Wire{n, 0}};
  }

  std::vector<Wire> lower_call(const Expr& e, const CallExpr& n, NodeId parent, WireEnv& env) {
    if (const auto* nx = n.callee->as<NameExpr>()) {
      auto nit = nested.find(nx->name);
      if (nx->binding == NameBinding::Local && nit != nested.end()) {
        const NestedFn& nf = nit->second;
        std::vector<Wire> ins;
        if (!nf.capture_names.empty()) {
          std::vector<Wire> cw;
          for (const auto& cn : nf.capture_names) cw.push_back(capture_value(cn, parent, env));
          ins.push_back(pack_tuple(parent, cw));
        }
        for (const auto& a : n.args) ins.push_back(lower_expr(*a, parent, env));
        return emit_call(parent, nf.target, ins, nf.fn_type.fn_result());
      }
      if (nx->binding == NameBinding::Builtin) return lower_builtin_call(e, n, *nx, parent, env);
      if (nx->binding == NameBinding::Func) {
        auto fit = M.fns.find(nx->name);
        if (fit == M.fns.end()) ice("unknown function '" + nx->name + "'");
        std::vector<Wire> ins;
        for (const auto& a : n.args) ins.push_back(lower_expr(*a, parent, env));
        return emit_call(parent, fit->second, ins, e.ty);
      }
      // function-typed local falls through to an indirect call
    }
    Wire f = lower_expr(*n.callee, parent, env);
    std::vector<Wire> ins{f};
    for (const auto& a : n.args) ins.push_back(lower_expr(*a, parent, env));
    std::vector<PortType> ip;
    for (const auto& w : ins) ip.push_back(b.out_port(w));
    std::vector<PortType> op;
    if (!e.ty.is(Type::Kind::None)) op.push_back(vp(e.ty));
    NodeId node = add(NodeKind::CallIndirect, parent, std::move(ip), std::move(op));
    for (std::uint32_t i = 0; i < ins.size(); ++i) b.connect(ins[i], node, i);
    if (e.ty.is(Type::Kind::None)) return {};
    return {Wire{node, 0}};
  }

  std::vector<Wire> lower_builtin_call(const Expr& e, const CallExpr& n, const NameExpr& nx,
                                       NodeId parent, WireEnv& env) {
    const std::string& name = nx.name;
    if (name == "Qubit") {
      Payload p;
      p.name = "qalloc";
      NodeId q = add(NodeKind::QuantumOp, parent, {}, {vp(Type::qubit())}, std::move(p));
      return {Wire{q, 0}};
    }
    if (const BuiltinGate* g = builtin_gate(name)) {
      std::vector<Wire> args;
      for (const auto& a : n.args) args.push_back(lower_expr(*a, parent, env));
      std::vector<PortType> ip(g->num_qubits, vp(Type::qubit()));
      if (g->angle_param) ip.push_back(vp(Type::float_()));
      std::vector<PortType> op;
      switch (g->result) {
        case BuiltinGate::Result::SameQubits:
          op.assign(g->num_qubits, vp(Type::qubit()));
          break;
        case BuiltinGate::Result::Bool:
          op.push_back(vp(Type::bool_()));
          break;
        case BuiltinGate::Result::None:
          break;
      }
      Payload p;
      p.name = name;
      NodeId q = add(NodeKind::QuantumOp, parent, std::move(ip), op, std::move(p));
      for (std::uint32_t i = 0; i < args.size(); ++i) b.connect(args[i], q, i);
      std::vector<Wire> out;
      for (std::uint32_t i = 0; i < op.size(); ++i) out.push_back({q, i});
      return out;
    }
    if (name == "range") {
      Wire bound = lower_expr(*n.args[0], parent, env);
      return {materialize_range(parent, bound)};
    }
    if (name == "len" || name == "get") return lower_list_builtin_fn(name, n, e, parent, env);
    ice("unknown builtin '" + name + "'");
  }

  // function form: len(xs) / get(xs, i); the first argument is the list
  std::vector<Wire> lower_list_builtin_fn(const std::string& name, const CallExpr& n,
                                          const Expr& e, NodeId parent, WireEnv& env) {
    const Expr& recv = *n.args[0];
    Wire list = lower_expr(recv, parent, env);
    std::vector<Wire> extra;
    for (std::size_t i = 1; i < n.args.size(); ++i)
      extra.push_back(lower_expr(*n.args[i], parent, env));
    return finish_list_builtin(name, recv.ty, list, extra, e, parent);
  }

  std::vector<Wire> lower_list_builtin(const std::string& name, const Expr& recv,
                                       const std::vector<ExprPtr>& args, const Expr& e,
                                       NodeId parent, WireEnv& env) {
    Wire list = lower_expr(recv, parent, env);
    std::vector<Wire> extra;
    for (const auto& a : args) extra.push_back(lower_expr(*a, parent, env));
    return finish_list_builtin(name, recv.ty, list, extra, e, parent);
  }

  std::vector<Wire> finish_list_builtin(const std::string& name, const Type& list_ty, Wire list,
                                        const std::vector<Wire>& extra, const Expr& e,
                                        NodeId parent) {
    bool lin = list_ty.list_elem().is_linear();
    const Type& elem = list_ty.list_elem();
    Payload p;
    p.name = name == "apply" ? "apply_idx" : name;
    if (name == "len") {
      std::vector<PortType> op{vp(Type::int_())};
      if (lin) op.push_back(vp(list_ty));
      NodeId node = add(NodeKind::ListOp, parent, {vp(list_ty)}, op, std::move(p));
      b.connect(list, node, 0);
      if (lin) return {Wire{node, 0}, Wire{node, 1}};
      return {Wire{node, 0}};
    }
    if (name == "get") {
      std::vector<PortType> op{vp(elem)};
      if (lin) op.push_back(vp(list_ty));
      NodeId node =
          add(NodeKind::ListOp, parent, {vp(list_ty), vp(Type::int_())}, op, std::move(p));
      b.connect(list, node, 0);
      b.connect(extra[0], node, 1);
      if (lin) return {Wire{node, 0}, Wire{node, 1}};
      return {Wire{node, 0}};
    }
    if (name == "apply") {
      NodeId node = add(NodeKind::ListOp, parent,
                        {vp(list_ty), b.out_port(extra[0]), b.out_port(extra[1])}, {vp(e.ty)},
                        std::move(p));
      b.connect(list, node, 0);
      b.connect(extra[0], node, 1);
      b.connect(extra[1], node, 2);
      return {Wire{node, 0}};
    }
    ice("unknown list builtin '" + name + "'");
  }

  // ---- simple loops (no break/continue): comprehensions, range ----

  // Builds a TailLoop over `init` (exit row == carried row) whose header runs
  // `cond` and whose taken-branch runs `body`. Returns the loop outputs.
  std::map<std::string, Wire> run_simple_loop(
      NodeId parent, const std::map<std::string, Wire>& init,
      const std::function<Wire(NodeId, WireEnv&)>& cond,
      const std::function<void(NodeId, WireEnv&)>& body) {
    std::vector<std::string> names;
    std::vector<PortType> crow;
    std::vector<Type> ctypes;
    for (const auto& [n, w] : init) {
      names.push_back(n);
      crow.push_back(b.out_port(w));
      ctypes.push_back(b.out_port(w).value_type);
    }
    PortType sum = PortType::sum({ctypes, ctypes});
    NodeId loop = add(NodeKind::TailLoop, parent, crow, crow);
    NodeId lin = add(NodeKind::Input, loop, {}, crow);
    NodeId lout = add(NodeKind::Output, loop, {sum}, {});
    {
      std::uint32_t i = 0;
      for (const auto& [n, w] : init) b.connect(w, loop, i++);
    }
    WireEnv benv;
    for (std::uint32_t i = 0; i < names.size(); ++i) benv[names[i]] = {lin, i};
    Wire c = cond(loop, benv);
    Wire cs = bool_sum(loop, c);
    // conditional inputs reflect any wires the condition re-threaded
    std::vector<PortType> ip{b.out_port(cs)};
    std::vector<Wire> inw;
    for (const auto& n : names) {
      inw.push_back(benv.at(n));
      ip.push_back(b.out_port(benv.at(n)));
    }
    NodeId cnd = add(NodeKind::Conditional, loop, std::move(ip), {sum});
    b.connect(cs, cnd, 0);
    for (std::uint32_t i = 0; i < inw.size(); ++i) b.connect(inw[i], cnd, i + 1);
    for (int v = 0; v < 2; ++v) {
      Payload cp;
      cp.index = v;
      NodeId cs2 = add(NodeKind::Case, cnd, {}, {}, std::move(cp));
      NodeId cin = add(NodeKind::Input, cs2, {}, crow);
      NodeId cout = add(NodeKind::Output, cs2, {sum}, {});
      WireEnv ce;
      for (std::uint32_t i = 0; i < names.size(); ++i) ce[names[i]] = {cin, i};
      Wire t;
      if (v == 1) {
        body(cs2, ce);
        t = emit_tag(cs2, 0, names, ce, sum);  // continue
      } else {
        t = emit_tag(cs2, 1, names, ce, sum);  // exit
      }
      b.connect(t, cout, 0);
    }
    b.connect(Wire{cnd, 0}, lout, 0);
    std::map<std::string, Wire> out;
    for (std::uint32_t i = 0; i < names.size(); ++i) out[names[i]] = {loop, i};
    return out;
  }

  Wire emit_tag(NodeId parent, int variant, const std::vector<std::string>& names, WireEnv& env,
                const PortType& sum) {
    std::vector<Wire> ws;
    for (const auto& n : names) {
      auto it = env.find(n);
      if (it == env.end()) ice("tag row name '" + n + "' is not bound");
      ws.push_back(it->second);
    }
    Wire t = emit_tag_wires(parent, variant, ws, sum);
    for (const auto& n : names) {
      auto it = env.find(n);
      if (it != env.end() && b.out_port(it->second).is_linear()) env.erase(it);
    }
    return t;
  }

  Wire emit_tag_wires(NodeId parent, int variant, const std::vector<Wire>& ws,
                      const PortType& sum) {
    std::vector<PortType> ip;
    for (const auto& w : ws) ip.push_back(b.out_port(w));
    Payload p;
    p.index = variant;
    NodeId t = add(NodeKind::Tag, parent, std::move(ip), {sum}, std::move(p));
    for (std::uint32_t i = 0; i < ws.size(); ++i) b.connect(ws[i], t, i);
    return {t, 0};
  }

  // range(n) as a value: build [0, 1, ..., n-1] by descending cons.
  Wire materialize_range(NodeId parent, Wire bound) {
    Wire one = const_int(parent, 1);
    Wire i0 = op_node(NodeKind::IntOp, "sub", parent, {bound, one}, Type::int_());
    Wire nil = list_nil(parent, Type::list(Type::int_()));
    auto outs = run_simple_loop(
        parent, {{"%i", i0}, {"%out", nil}},
        [&](NodeId p, WireEnv& be) {
          Wire zero = const_int(p, 0);
          return op_node(NodeKind::CmpOp, "ge", p, {be.at("%i"), zero}, Type::bool_());
        },
        [&](NodeId p, WireEnv& be) {
          be["%out"] = list_cons(p, be.at("%i"), be.at("%out"));
          Wire o = const_int(p, 1);
          be["%i"] = op_node(NodeKind::IntOp, "sub", p, {be.at("%i"), o}, Type::int_());
        });
    return outs.at("%out");
  }

  Wire classical_len(NodeId parent, Wire list) {
    Payload p;
    p.name = "len";
    NodeId n = add(NodeKind::ListOp, parent, {b.out_port(list)}, {vp(Type::int_())},
                   std::move(p));
    b.connect(list, n, 0);
    return {n, 0};
  }

  Wire classical_get(NodeId parent, Wire list, Wire idx, const Type& elem) {
    Payload p;
    p.name = "get";
    NodeId n = add(NodeKind::ListOp, parent, {b.out_port(list), vp(Type::int_())}, {vp(elem)},
                   std::move(p));
    b.connect(list, n, 0);
    b.connect(idx, n, 1);
    return {n, 0};
  }

  // (value, rest) = get(list, 0) on a linear list
  std::pair<Wire, Wire> linear_pop(NodeId parent, Wire list) {
    const Type& lt = b.out_port(list).value_type;
    Wire zero = const_int(parent, 0);
    Payload p;
    p.name = "get";
    NodeId n = add(NodeKind::ListOp, parent, {vp(lt), vp(Type::int_())},
                   {vp(lt.list_elem()), vp(lt)}, std::move(p));
    b.connect(list, n, 0);
    b.connect(zero, n, 1);
    return {Wire{n, 0}, Wire{n, 1}};
  }

  std::pair<Wire, Wire> linear_len(NodeId parent, Wire list) {
    const Type& lt = b.out_port(list).value_type;
    Payload p;
    p.name = "len";
    NodeId n = add(NodeKind::ListOp, parent, {vp(lt)}, {vp(Type::int_()), vp(lt)},
                   std::move(p));
    b.connect(list, n, 0);
    return {Wire{n, 0}, Wire{n, 1}};
  }

  Wire lower_comprehension(const Expr& e, const ComprehensionExpr& n, NodeId parent,
                           WireEnv& env) {
    Type out_list = e.ty;
    Type out_elem = out_list.list_elem();
    Type src_list = n.iterable->ty;
    Type src_elem = src_list.list_elem();
    bool lin_src = src_elem.is_linear();
    Wire src = lower_expr(*n.iterable, parent, env);
    // classical context the element expression reads
    std::set<std::string> fr, masked;
    for (const auto& [t, sp] : n.targets) masked.insert(t);
    free_names_expr(*n.element, fr, masked);
    std::map<std::string, Wire> init;
    for (const auto& name : fr) {
      auto it = env.find(name);
      if (it == env.end()) continue;
      if (b.out_port(it->second).is_linear())
        ice("comprehension consumes outer linear '" + name + "'");
      init[name] = it->second;
    }
    init["%acc"] = list_nil(parent, out_list);
    init["%src"] = src;
    if (!lin_src) init["%idx"] = const_int(parent, 0);

    auto bind_targets = [&](NodeId p, WireEnv& be, Wire elem) {
      if (n.targets.size() == 1) {
        be[n.targets[0].first] = elem;
      } else {
        auto parts = unpack_tuple(p, elem);
        for (std::size_t i = 0; i < n.targets.size(); ++i) be[n.targets[i].first] = parts[i];
      }
    };

    // pass 1: consume the source front-to-back, accumulating in reverse
    auto outs = run_simple_loop(
        parent, init,
        [&](NodeId p, WireEnv& be) {
          if (lin_src) {
            auto [cnt, rest] = linear_len(p, be.at("%src"));
            be["%src"] = rest;
            Wire zero = const_int(p, 0);
            return op_node(NodeKind::CmpOp, "gt", p, {cnt, zero}, Type::bool_());
          }
          Wire len = classical_len(p, be.at("%src"));
          return op_node(NodeKind::CmpOp, "lt", p, {be.at("%idx"), len}, Type::bool_());
        },
        [&](NodeId p, WireEnv& be) {
          Wire elem;
          if (lin_src) {
            auto [v, rest] = linear_pop(p, be.at("%src"));
            be["%src"] = rest;
            elem = v;
          } else {
            elem = classical_get(p, be.at("%src"), be.at("%idx"), src_elem);
            Wire one = const_int(p, 1);
            be["%idx"] = op_node(NodeKind::IntOp, "add", p, {be.at("%idx"), one}, Type::int_());
          }
          bind_targets(p, be, elem);
          Wire v = lower_expr(*n.element, p, be);
          be["%acc"] = list_cons(p, v, be.at("%acc"));
        });
    if (lin_src) list_drop(parent, outs.at("%src"));
    Wire acc = outs.at("%acc");

    // pass 2: reverse the accumulator back into source order
    bool lin_out = out_elem.is_linear();
    std::map<std::string, Wire> init2;
    init2["%acc"] = acc;
    init2["%out"] = list_nil(parent, out_list);
    if (!lin_out) init2["%idx"] = const_int(parent, 0);
    auto outs2 = run_simple_loop(
        parent, init2,
        [&](NodeId p, WireEnv& be) {
          if (lin_out) {
            auto [cnt, rest] = linear_len(p, be.at("%acc"));
            be["%acc"] = rest;
            Wire zero = const_int(p, 0);
            return op_node(NodeKind::CmpOp, "gt", p, {cnt, zero}, Type::bool_());
          }
          Wire len = classical_len(p, be.at("%acc"));
          return op_node(NodeKind::CmpOp, "lt", p, {be.at("%idx"), len}, Type::bool_());
        },
        [&](NodeId p, WireEnv& be) {
          Wire elem;
          if (lin_out) {
            auto [v, rest] = linear_pop(p, be.at("%acc"));
            be["%acc"] = rest;
            elem = v;
          } else {
            elem = classical_get(p, be.at("%acc"), be.at("%idx"), out_elem);
            Wire one = const_int(p, 1);
            be["%idx"] = op_node(NodeKind::IntOp, "add", p, {be.at("%idx"), one}, Type::int_());
          }
          be["%out"] = list_cons(p, elem, be.at("%out"));
        });
    if (lin_out) list_drop(parent, outs2.at("%acc"));
    return outs2.at("%out");
  }

  // ---- statements (structured mode) ----

  void bind_pattern(const Pattern& pat, std::vector<Wire> ws, const Type& ty, NodeId parent,
                    WireEnv& env) {
    if (!pat.is_tuple) {
      const std::string& name = pat.names[0].first;
      if (ty.is(Type::Kind::None)) {
        env.erase(name);
        return;
      }
      env[name] = ws.size() == 1 ? ws[0] : pack_tuple(parent, ws);
      return;
    }
    std::size_t k = pat.names.size();
    if (ws.size() != k) {
      Wire w = ws.size() == 1 ? ws[0] : pack_tuple(parent, ws);
      ws = unpack_tuple(parent, w);
    }
    for (std::size_t i = 0; i < k; ++i) env[pat.names[i].first] = ws[i];
  }

  void lower_simple_stmt(const Stmt& s, NodeId parent, WireEnv& env) {
    if (const auto* a = s.as<AssignStmt>()) {
      std::vector<Wire> ws = lower_expr_multi(*a->value, parent, env);
      bind_pattern(a->target, std::move(ws), a->value->ty, parent, env);
    } else if (const auto* ex = s.as<ExprStmt>()) {
      lower_expr_multi(*ex->expr, parent, env);
    } else if (s.as<FuncDefStmt>()) {
      // lifted in the pre-pass
    } else if (const auto* iff = s.as<IfStmt>()) {
      lower_if_plain(*iff, parent, env);
    } else if (const auto* wh = s.as<WhileStmt>()) {
      lower_while(*wh, parent, env);
    } else if (const auto* fr = s.as<ForStmt>()) {
      lower_for(*fr, parent, env);
    } else {
      ice("unexpected control statement outside its context");
    }
  }

  void lower_block(const std::vector<const Stmt*>& stmts, NodeId parent, WireEnv& env) {
    for (const Stmt* s : stmts) lower_simple_stmt(*s, parent, env);
  }

  // if/else with no break/continue escaping to an enclosing loop
  void lower_if_plain(const IfStmt& s, NodeId parent, WireEnv& env) {
    Wire c = lower_expr(*s.cond, parent, env);
    Wire cs = bool_sum(parent, c);
    AbsEnv entry = abs_of(env);
    AbsOut ta = abs_seq(ptrs(s.then_body), entry);
    AbsOut ea = abs_seq(ptrs(s.else_body), entry);
    if (!ta.breaks.empty() || !ea.breaks.empty() || !ta.continues.empty() ||
        !ea.continues.empty() || !ta.fall || !ea.fall)
      ice("escaping if lowered as plain");
    AbsEnv join = *join_abs(ta.fall, ea.fall);
    std::set<std::string> assigned;
    assigned_names(ptrs(s.then_body), assigned);
    assigned_names(ptrs(s.else_body), assigned);
    Row out_row;
    for (const auto& [name, t] : join)
      if (assigned.count(name) && !t.is(Type::Kind::None)) out_row.emplace_back(name, t);
    std::set<std::string> fr;
    free_names_stmts(ptrs(s.then_body), fr);
    free_names_stmts(ptrs(s.else_body), fr);
    for (const auto& [name, t] : out_row) fr.insert(name);
    Row in_row;
    for (const auto& name : fr) {
      auto it = env.find(name);
      if (it != env.end()) in_row.emplace_back(name, b.out_port(it->second).value_type);
    }
    std::vector<PortType> ip{b.out_port(cs)};
    for (const auto& [name, t] : in_row) ip.push_back(vp(t));
    NodeId cnd = add(NodeKind::Conditional, parent, std::move(ip), row_ports(out_row));
    b.connect(cs, cnd, 0);
    for (std::uint32_t i = 0; i < in_row.size(); ++i)
      b.connect(env.at(in_row[i].first), cnd, i + 1);
    // the conditional consumes every linear wire fed into it
    for (const auto& [name, t] : in_row)
      if (t.is_linear()) env.erase(name);
    for (int v = 0; v < 2; ++v) {
      const auto& body = (v == 1) ? s.then_body : s.else_body;
      Payload cp;
      cp.index = v;
      NodeId case_n = add(NodeKind::Case, cnd, {}, {}, std::move(cp));
      NodeId cin = add(NodeKind::Input, case_n, {}, row_ports(in_row));
      NodeId cout = add(NodeKind::Output, case_n, row_ports(out_row), {});
      WireEnv ce;
      for (std::uint32_t i = 0; i < in_row.size(); ++i) ce[in_row[i].first] = {cin, i};
      lower_block(ptrs(body), case_n, ce);
      for (std::uint32_t i = 0; i < out_row.size(); ++i) {
        auto it = ce.find(out_row[i].first);
        if (it == ce.end()) ice("join name '" + out_row[i].first + "' missing in a branch");
        b.connect(it->second, cout, i);
      }
    }
    for (std::uint32_t i = 0; i < out_row.size(); ++i)
      env[out_row[i].first] = {cnd, i};
  }

  // Shared tail-loop plumbing for while/for. `cond` runs in the loop header;
  // `preamble` runs at the top of the taken case (for-loop target binding).
  void lower_tailloop(const std::vector<const Stmt*>& body, NodeId parent, WireEnv& env,
                      const std::vector<std::string>& carried,
                      const std::vector<std::string>& exits,
                      const std::function<Wire(NodeId, WireEnv&)>& cond,
                      const std::function<void(NodeId, WireEnv&)>& preamble,
                      const std::vector<std::string>& drop_after) {
    std::vector<PortType> crow, erow;
    std::vector<Type> ctypes, etypes;
    for (const auto& n : carried) {
      const PortType& p = b.out_port(env.at(n));
      crow.push_back(p);
      ctypes.push_back(p.value_type);
    }
    for (const auto& n : exits) {
      const PortType& p = b.out_port(env.at(n));
      erow.push_back(p);
      etypes.push_back(p.value_type);
    }
    PortType sum = PortType::sum({ctypes, etypes});
    NodeId loop = add(NodeKind::TailLoop, parent, crow, erow);
    for (std::uint32_t i = 0; i < carried.size(); ++i) b.connect(env.at(carried[i]), loop, i);
    NodeId lin = add(NodeKind::Input, loop, {}, crow);
    NodeId lout = add(NodeKind::Output, loop, {sum}, {});
    WireEnv benv;
    for (std::uint32_t i = 0; i < carried.size(); ++i) benv[carried[i]] = {lin, i};
    Wire c = cond(loop, benv);
    Wire cs = bool_sum(loop, c);
    std::vector<PortType> ip{b.out_port(cs)};
    std::vector<Wire> inw;
    for (const auto& n : carried) {
      inw.push_back(benv.at(n));
      ip.push_back(b.out_port(benv.at(n)));
    }
    NodeId cnd = add(NodeKind::Conditional, loop, std::move(ip), {sum});
    b.connect(cs, cnd, 0);
    for (std::uint32_t i = 0; i < inw.size(); ++i) b.connect(inw[i], cnd, i + 1);
    LoopCtx ctx{carried, exits, sum};
    for (int v = 0; v < 2; ++v) {
      Payload cp;
      cp.index = v;
      NodeId case_n = add(NodeKind::Case, cnd, {}, {}, std::move(cp));
      NodeId cin = add(NodeKind::Input, case_n, {}, crow);
      NodeId cout = add(NodeKind::Output, case_n, {sum}, {});
      WireEnv ce;
      for (std::uint32_t i = 0; i < carried.size(); ++i) ce[carried[i]] = {cin, i};
      Wire t;
      if (v == 1) {
        if (preamble) preamble(case_n, ce);
        t = lower_loop_seq(body, case_n, std::move(ce), ctx);
      } else {
        t = emit_tag(case_n, 1, exits, ce, sum);
      }
      b.connect(t, cout, 0);
    }
    b.connect(Wire{cnd, 0}, lout, 0);
    for (const auto& n : carried) env.erase(n);
    for (std::uint32_t i = 0; i < exits.size(); ++i) env[exits[i]] = {loop, i};
    for (const auto& n : drop_after) env.erase(n);
  }

  // Continuation-style lowering of a loop-body statement sequence: every path
  // ends in a Tag selecting continue (0) or break (1).
  Wire lower_loop_seq(const std::vector<const Stmt*>& stmts, NodeId parent, WireEnv env,
                      const LoopCtx& ctx) {
    for (std::size_t i = 0; i < stmts.size(); ++i) {
      const Stmt& s = *stmts[i];
      if (s.as<BreakStmt>()) return emit_tag(parent, 1, ctx.exits, env, ctx.sum);
      if (s.as<ContinueStmt>()) return emit_tag(parent, 0, ctx.carried, env, ctx.sum);
      if (s.as<ReturnStmt>()) ice("return inside a structured loop");
      if (const auto* iff = s.as<IfStmt>()) {
        AbsEnv cur = abs_of(env);
        AbsOut ta = abs_seq(ptrs(iff->then_body), cur);
        AbsOut ea = abs_seq(ptrs(iff->else_body), cur);
        bool escapes = !ta.breaks.empty() || !ea.breaks.empty() || !ta.continues.empty() ||
                       !ea.continues.empty() || !ta.fall || !ea.fall;
        if (!escapes) {
          lower_if_plain(*iff, parent, env);
          continue;
        }
        Wire c = lower_expr(*iff->cond, parent, env);
        Wire cs = bool_sum(parent, c);
        std::vector<const Stmt*> rest(stmts.begin() + i + 1, stmts.end());
        Row in_row;
        for (const auto& [n, w] : env) in_row.emplace_back(n, b.out_port(w).value_type);
        std::vector<PortType> ip{b.out_port(cs)};
        for (const auto& [n2, t] : in_row) ip.push_back(vp(t));
        NodeId cnd = add(NodeKind::Conditional, parent, std::move(ip), {ctx.sum});
        b.connect(cs, cnd, 0);
        for (std::uint32_t k = 0; k < in_row.size(); ++k)
          b.connect(env.at(in_row[k].first), cnd, k + 1);
        for (int v = 0; v < 2; ++v) {
          const auto& branch = (v == 1) ? iff->then_body : iff->else_body;
          Payload cp;
          cp.index = v;
          NodeId case_n = add(NodeKind::Case, cnd, {}, {}, std::move(cp));
          NodeId cin = add(NodeKind::Input, case_n, {}, row_ports(in_row));
          NodeId cout = add(NodeKind::Output, case_n, {ctx.sum}, {});
          WireEnv ce;
          for (std::uint32_t k = 0; k < in_row.size(); ++k) ce[in_row[k].first] = {cin, k};
          std::vector<const Stmt*> seq = ptrs(branch);
          seq.insert(seq.end(), rest.begin(), rest.end());
          Wire t = lower_loop_seq(seq, case_n, std::move(ce), ctx);
          b.connect(t, cout, 0);
        }
        return {Wire{cnd, 0}};
      }
      lower_simple_stmt(s, parent, env);
    }
    return emit_tag(parent, 0, ctx.carried, env, ctx.sum);
  }

  void lower_while(const WhileStmt& s, NodeId parent, WireEnv& env) {
    AbsEnv entry = abs_of(env);
    AbsOut bo = abs_seq(ptrs(s.body), entry);
    std::set<std::string> used;
    {
      std::set<std::string> masked;
      free_names_expr(*s.cond, used, masked);
    }
    free_names_stmts(ptrs(s.body), used);
    assigned_names(ptrs(s.body), used);
    std::vector<std::string> carried;
    for (const auto& [n, w] : env)
      if (used.count(n)) carried.push_back(n);
    std::optional<AbsEnv> ex = entry;
    for (const auto& be : bo.breaks) ex = join_abs(ex, be);
    std::vector<std::string> exits;
    for (const auto& n : carried) {
      auto it = ex->find(n);
      if (it != ex->end() && it->second == entry.at(n)) exits.push_back(n);
    }
    lower_tailloop(ptrs(s.body), parent, env, carried, exits,
                   [&](NodeId p, WireEnv& be) { return lower_expr(*s.cond, p, be); }, {}, {});
  }

  void lower_for(const ForStmt& s, NodeId parent, WireEnv& env) {
    const Expr* range_arg = nullptr;
    if (const auto* ce = s.iterable->as<CallExpr>())
      if (const auto* nx = ce->callee->as<NameExpr>())
        if (nx->binding == NameBinding::Builtin && nx->name == "range")
          range_arg = ce->args[0].get();
    Type elem = elem_type_of(s);
    Wire seq_w = range_arg ? lower_expr(*range_arg, parent, env)
                           : lower_expr(*s.iterable, parent, env);
    std::string si = synth("i");
    std::string s2 = synth(range_arg ? "n" : "xs");
    env[s2] = seq_w;
    env[si] = const_int(parent, 0);
    AbsEnv entry = abs_of(env);
    AbsEnv body_entry = entry;
    abs_bind(s.target, elem, body_entry);
    AbsOut bo = abs_seq(ptrs(s.body), body_entry);
    std::set<std::string> used{si, s2};
    free_names_stmts(ptrs(s.body), used);
    assigned_names(ptrs(s.body), used);
    for (const auto& [n, sp] : s.target.names) used.insert(n);
    std::vector<std::string> carried;
    for (const auto& [n, w] : env)
      if (used.count(n)) carried.push_back(n);
    std::optional<AbsEnv> ex = entry;
    for (const auto& be : bo.breaks) ex = join_abs(ex, be);
    std::vector<std::string> exits;
    for (const auto& n : carried) {
      if (n == si || n == s2) continue;
      auto it = ex->find(n);
      if (it != ex->end() && it->second == entry.at(n)) exits.push_back(n);
    }
    bool is_range = range_arg != nullptr;
    lower_tailloop(
        ptrs(s.body), parent, env, carried, exits,
        [&, si, s2, is_range](NodeId p, WireEnv& be) {
          Wire limit = is_range ? be.at(s2) : classical_len(p, be.at(s2));
          return op_node(NodeKind::CmpOp, "lt", p, {be.at(si), limit}, Type::bool_());
        },
        [&, si, s2, is_range, elem](NodeId p, WireEnv& be) {
          Wire iv = be.at(si);
          Wire ev = is_range ? iv : classical_get(p, be.at(s2), iv, elem);
          bind_pattern(s.target, {ev}, elem, p, be);
          Wire one = const_int(p, 1);
          be[si] = op_node(NodeKind::IntOp, "add", p, {iv, one}, Type::int_());
        },
        {si, s2});
  }

  // ---- whole-function lowering ----

  static bool contains_return_stmt(const Stmt& s) {
    return std::visit(overloaded{
                          [](const ReturnStmt&) { return true; },
                          [](const IfStmt& n) {
                            for (const auto& c : n.then_body)
                              if (contains_return_stmt(*c)) return true;
                            for (const auto& c : n.else_body)
                              if (contains_return_stmt(*c)) return true;
                            return false;
                          },
                          [](const WhileStmt& n) {
                            for (const auto& c : n.body)
                              if (contains_return_stmt(*c)) return true;
                            return false;
                          },
                          [](const ForStmt& n) {
                            for (const auto& c : n.body)
                              if (contains_return_stmt(*c)) return true;
                            return false;
                          },
                          [](const auto&) { return false; },
                      },
                      s.node);
  }

  bool structured_ok() const {
    for (std::size_t i = 0; i < def.body.size(); ++i) {
      bool last = i + 1 == def.body.size();
      if (def.body[i]->as<ReturnStmt>()) {
        if (!last) return false;
      } else if (contains_return_stmt(*def.body[i])) {
        return false;
      }
    }
    return true;
  }

  void bind_captures(NodeId parent, Wire env_tuple, WireEnv& env) {
    auto parts = unpack_tuple(parent, env_tuple);
    for (std::size_t i = 0; i < def.captures.size(); ++i)
      env[def.captures[i].name] = parts[i];
  }

  void lower() {
    collect_nested(def.body);
    if (M.mode == LoweringMode::Cfg || !structured_ok())
      lower_cfg();
    else
      lower_structured();
  }

  void lower_structured() {
    NodeId input = b.node(fn).children[0];
    NodeId output = b.node(fn).children[1];
    WireEnv env;
    std::uint32_t p = 0;
    if (!def.captures.empty()) {
      bind_captures(fn, Wire{input, 0}, env);
      p = 1;
    }
    std::vector<Type> params = def.fn_type.fn_params();
    for (std::size_t i = 0; i < def.params.size(); ++i) {
      if (params[i].is(Type::Kind::None)) continue;
      env[def.params[i].name] = Wire{input, p++};
    }
    std::size_t n = def.body.size();
    const ReturnStmt* ret = n ? def.body[n - 1]->as<ReturnStmt>() : nullptr;
    std::vector<const Stmt*> prefix = ptrs(def.body);
    if (ret) prefix.pop_back();
    lower_block(prefix, fn, env);
    if (result_type.is(Type::Kind::None)) {
      if (ret && ret->value) lower_expr_multi(*ret->value, fn, env);
    } else {
      if (!ret) ice("non-none function without a trailing return in structured mode");
      Wire w = lower_expr(*ret->value, fn, env);
      b.connect(w, output, 0);
    }
  }

  // ---- CFG mode ----

  NodeId cfg_block(const std::vector<const Stmt*>& stmts, const Row& row,
                   const BlockTarget* fall, const LoopTargets* loop,
                   const std::function<void(NodeId, WireEnv&)>& preamble = {},
                   const AbsEnv* entry_override = nullptr);

  void lower_cfg() {
    NodeId input = b.node(fn).children[0];
    NodeId output = b.node(fn).children[1];
    std::vector<PortType> cfg_in = b.node(input).out_ports;
    std::vector<PortType> cfg_out = b.node(output).in_ports;
    cfg = add(NodeKind::CFG, fn, cfg_in, cfg_out);
    for (std::uint32_t i = 0; i < cfg_in.size(); ++i) b.connect(Wire{input, i}, cfg, i);
    for (std::uint32_t i = 0; i < cfg_out.size(); ++i) b.connect(Wire{cfg, i}, output, i);
    {
      Payload p;
      p.role = BlockRole::Exit;
      exit_blk = add(NodeKind::BasicBlock, cfg, {PortType::control()}, {}, std::move(p));
    }
    AbsEnv init;
    for (const auto& c : def.captures) init[c.name] = c.type;
    std::vector<Type> params = def.fn_type.fn_params();
    for (std::size_t i = 0; i < def.params.size(); ++i) init[def.params[i].name] = params[i];
    Row r0 = row_of(init);
    NodeId first = cfg_block(ptrs(def.body), r0, nullptr, nullptr);
    // entry block: unpack parameters, jump unconditionally to the first block
    Payload p;
    p.role = BlockRole::Entry;
    NodeId eb = add(NodeKind::BasicBlock, cfg, {}, {PortType::control()}, std::move(p));
    NodeId ein = add(NodeKind::Input, eb, {}, cfg_in);
    PortType esum = PortType::sum({row_types(r0)});
    NodeId eout = add(NodeKind::Output, eb, {esum}, {});
    WireEnv env;
    std::uint32_t pi = 0;
    if (!def.captures.empty()) {
      bind_captures(eb, Wire{ein, 0}, env);
      pi = 1;
    }
    for (std::size_t i = 0; i < def.params.size(); ++i) {
      if (params[i].is(Type::Kind::None)) continue;
      env[def.params[i].name] = Wire{ein, pi++};
    }
    Wire t = emit_tag(eb, 0, row_names(r0), env, esum);
    b.connect(t, eout, 0);
    b.connect(eb, 0, first, 0);
  }

  // Builds the Conditional gadget that turns a boolean predicate into this
  // block's branch sum. Variant rows may differ (loop headers).
  Wire select_variants(NodeId parent, Wire pred, WireEnv& env,
                       const std::vector<std::vector<std::string>>& variant_names,
                       const PortType& sum) {
    Row in_row;
    for (const auto& [n, w] : env) in_row.emplace_back(n, b.out_port(w).value_type);
    std::vector<PortType> ip{b.out_port(pred)};
    for (const auto& [n, t] : in_row) ip.push_back(vp(t));
    NodeId cnd = add(NodeKind::Conditional, parent, std::move(ip), {sum});
    b.connect(pred, cnd, 0);
    for (std::uint32_t i = 0; i < in_row.size(); ++i)
      b.connect(env.at(in_row[i].first), cnd, i + 1);
    for (std::size_t v = 0; v < variant_names.size(); ++v) {
      Payload cp;
      cp.index = static_cast<int>(v);
      NodeId case_n = add(NodeKind::Case, cnd, {}, {}, std::move(cp));
      NodeId cin = add(NodeKind::Input, case_n, {}, row_ports(in_row));
      NodeId cout = add(NodeKind::Output, case_n, {sum}, {});
      WireEnv ce;
      for (std::uint32_t i = 0; i < in_row.size(); ++i) ce[in_row[i].first] = {cin, i};
      Wire t = emit_tag(case_n, static_cast<int>(v), variant_names[v], ce, sum);
      b.connect(t, cout, 0);
    }
    for (const auto& [n, t] : in_row)
      if (t.is_linear()) env.erase(n);
    return {cnd, 0};
  }
};

NodeId FuncLowerer::cfg_block(const std::vector<const Stmt*>& stmts, const Row& row,
                              const BlockTarget* fall, const LoopTargets* loop,
                              const std::function<void(NodeId, WireEnv&)>& preamble,
                              const AbsEnv* entry_override) {
  AbsEnv aenv = entry_override ? *entry_override : env_of_row(row);
  std::size_t t = 0;
  for (; t < stmts.size(); ++t) {
    const Stmt& s = *stmts[t];
    if (s.as<IfStmt>() || s.as<WhileStmt>() || s.as<ForStmt>() || s.as<BreakStmt>() ||
        s.as<ContinueStmt>() || s.as<ReturnStmt>())
      break;
    abs_simple_stmt(s, aenv);
  }

  std::vector<NodeId> succs;
  std::vector<std::vector<Type>> srows;
  std::function<Wire(NodeId, WireEnv&, const PortType&)> emit;

  if (t == stmts.size()) {
    if (fall) {
      succs = {fall->blk};
      srows = {row_types(fall->row)};
      std::vector<std::string> names = row_names(fall->row);
      emit = [this, names](NodeId blk, WireEnv& env, const PortType& sum) {
        return emit_tag(blk, 0, names, env, sum);
      };
    } else {
      succs = {exit_blk};
      srows = {{}};
      emit = [this](NodeId blk, WireEnv& env, const PortType& sum) {
        (void)env;
        return emit_tag_wires(blk, 0, {}, sum);
      };
    }
  } else if (const auto* ret = stmts[t]->as<ReturnStmt>()) {
    succs = {exit_blk};
    if (result_type.is(Type::Kind::None)) {
      srows = {{}};
      emit = [this, ret](NodeId blk, WireEnv& env, const PortType& sum) {
        if (ret->value) lower_expr_multi(*ret->value, blk, env);
        return emit_tag_wires(blk, 0, {}, sum);
      };
    } else {
      srows = {{result_type}};
      emit = [this, ret](NodeId blk, WireEnv& env, const PortType& sum) {
        Wire w = lower_expr(*ret->value, blk, env);
        return emit_tag_wires(blk, 0, {w}, sum);
      };
    }
  } else if (stmts[t]->as<BreakStmt>()) {
    if (!loop) ice("break outside a loop");
    succs = {loop->after.blk};
    srows = {row_types(loop->after.row)};
    std::vector<std::string> names = row_names(loop->after.row);
    emit = [this, names](NodeId blk, WireEnv& env, const PortType& sum) {
      return emit_tag(blk, 0, names, env, sum);
    };
  } else if (stmts[t]->as<ContinueStmt>()) {
    if (!loop) ice("continue outside a loop");
    succs = {loop->header.blk};
    srows = {row_types(loop->header.row)};
    std::vector<std::string> names = row_names(loop->header.row);
    emit = [this, names](NodeId blk, WireEnv& env, const PortType& sum) {
      return emit_tag(blk, 0, names, env, sum);
    };
  } else if (const auto* iff = stmts[t]->as<IfStmt>()) {
    AbsEnv env_b = aenv;
    abs_consume(*iff->cond, env_b);
    std::vector<const Stmt*> rest(stmts.begin() + t + 1, stmts.end());
    AbsOut ta = abs_seq(ptrs(iff->then_body), env_b);
    AbsOut ea = abs_seq(ptrs(iff->else_body), env_b);
    auto joint = join_abs(ta.fall, ea.fall);
    BlockTarget rest_t;
    const BlockTarget* branch_fall = nullptr;
    if (joint) {
      rest_t.row = row_of(*joint);
      rest_t.blk = cfg_block(rest, rest_t.row, fall, loop);
      branch_fall = &rest_t;
    }
    Row brow = row_of(env_b);
    NodeId then_b = cfg_block(ptrs(iff->then_body), brow, branch_fall, loop);
    NodeId else_b = cfg_block(ptrs(iff->else_body), brow, branch_fall, loop);
    succs = {else_b, then_b};
    srows = {row_types(brow), row_types(brow)};
    std::vector<std::string> names = row_names(brow);
    const Expr* cond = iff->cond.get();
    emit = [this, cond, names](NodeId blk, WireEnv& env, const PortType& sum) {
      Wire c = lower_expr(*cond, blk, env);
      Wire cs = bool_sum(blk, c);
      return select_variants(blk, cs, env, {names, names}, sum);
    };
  } else if (const auto* wh = stmts[t]->as<WhileStmt>()) {
    std::vector<const Stmt*> rest(stmts.begin() + t + 1, stmts.end());
    AbsOut bo = abs_seq(ptrs(wh->body), aenv);
    std::optional<AbsEnv> after_env = aenv;
    for (const auto& be : bo.breaks) after_env = join_abs(after_env, be);
    Row after_row = row_of(*after_env);
    NodeId after_b = cfg_block(rest, after_row, fall, loop);
    Row hrow = row_of(aenv);
    PortType hsum = PortType::sum({row_types(after_row), row_types(hrow)});
    Payload hp;
    NodeId hb = add(NodeKind::BasicBlock, cfg, {PortType::control()},
                    {PortType::control(), PortType::control()}, std::move(hp));
    NodeId hin = add(NodeKind::Input, hb, {}, row_ports(hrow));
    NodeId hout = add(NodeKind::Output, hb, {hsum}, {});
    BlockTarget ht{hb, hrow}, at{after_b, after_row};
    LoopTargets lts{ht, at};
    NodeId body_b = cfg_block(ptrs(wh->body), hrow, &ht, &lts);
    {
      WireEnv henv;
      for (std::uint32_t i = 0; i < hrow.size(); ++i) henv[hrow[i].first] = {hin, i};
      Wire c = lower_expr(*wh->cond, hb, henv);
      Wire cs = bool_sum(hb, c);
      Wire w = select_variants(hb, cs, henv, {row_names(after_row), row_names(hrow)}, hsum);
      b.connect(w, hout, 0);
    }
    b.connect(hb, 0, after_b, 0);
    b.connect(hb, 1, body_b, 0);
    succs = {hb};
    srows = {row_types(hrow)};
    std::vector<std::string> names = row_names(hrow);
    emit = [this, names](NodeId blk, WireEnv& env, const PortType& sum) {
      return emit_tag(blk, 0, names, env, sum);
    };
  } else {
    const auto* fr = stmts[t]->as<ForStmt>();
    if (!fr) ice("unhandled terminator statement");
    const Expr* range_arg = nullptr;
    if (const auto* ce = fr->iterable->as<CallExpr>())
      if (const auto* nx = ce->callee->as<NameExpr>())
        if (nx->binding == NameBinding::Builtin && nx->name == "range")
          range_arg = ce->args[0].get();
    bool is_range = range_arg != nullptr;
    Type elem = elem_type_of(*fr);
    std::string si = synth("i");
    std::string s2 = synth(is_range ? "n" : "xs");
    std::vector<const Stmt*> rest(stmts.begin() + t + 1, stmts.end());
    AbsEnv env_b = aenv;
    abs_consume(*fr->iterable, env_b);
    AbsEnv after0 = env_b;  // without the synthetic counters
    env_b[si] = Type::int_();
    env_b[s2] = is_range ? Type::int_() : fr->iterable->ty;
    AbsEnv body_env = env_b;
    abs_bind(fr->target, elem, body_env);
    AbsOut bo = abs_seq(ptrs(fr->body), body_env);
    std::optional<AbsEnv> after_env = after0;
    for (const auto& be : bo.breaks) after_env = join_abs(after_env, be);
    after_env->erase(si);
    after_env->erase(s2);
    Row after_row = row_of(*after_env);
    NodeId after_b = cfg_block(rest, after_row, fall, loop);
    Row hrow = row_of(env_b);
    PortType hsum = PortType::sum({row_types(after_row), row_types(hrow)});
    NodeId hb = add(NodeKind::BasicBlock, cfg, {PortType::control()},
                    {PortType::control(), PortType::control()});
    NodeId hin = add(NodeKind::Input, hb, {}, row_ports(hrow));
    NodeId hout = add(NodeKind::Output, hb, {hsum}, {});
    BlockTarget ht{hb, hrow}, at{after_b, after_row};
    LoopTargets lts{ht, at};
    auto preamble2 = [this, fr, si, s2, is_range, elem](NodeId blk, WireEnv& env) {
      Wire iv = env.at(si);
      Wire ev = is_range ? iv : classical_get(blk, env.at(s2), iv, elem);
      bind_pattern(fr->target, {ev}, elem, blk, env);
      Wire one = const_int(blk, 1);
      env[si] = op_node(NodeKind::IntOp, "add", blk, {iv, one}, Type::int_());
    };
    NodeId body_b = cfg_block(ptrs(fr->body), hrow, &ht, &lts, preamble2, &body_env);
    {
      WireEnv henv;
      for (std::uint32_t i = 0; i < hrow.size(); ++i) henv[hrow[i].first] = {hin, i};
      Wire limit = is_range ? henv.at(s2) : classical_len(hb, henv.at(s2));
      Wire c = op_node(NodeKind::CmpOp, "lt", hb, {henv.at(si), limit}, Type::bool_());
      Wire cs = bool_sum(hb, c);
      Wire w = select_variants(hb, cs, henv, {row_names(after_row), row_names(hrow)}, hsum);
      b.connect(w, hout, 0);
    }
    b.connect(hb, 0, after_b, 0);
    b.connect(hb, 1, body_b, 0);
    succs = {hb};
    srows = {row_types(hrow)};
    std::vector<std::string> names = row_names(hrow);
    const Expr* iter_expr = is_range ? range_arg : fr->iterable.get();
    emit = [this, names, iter_expr, si, s2](NodeId blk, WireEnv& env, const PortType& sum) {
      Wire seq_w = lower_expr(*iter_expr, blk, env);
      env[s2] = seq_w;
      env[si] = const_int(blk, 0);
      return emit_tag(blk, 0, names, env, sum);
    };
  }

  // materialize the block itself, lower the prefix, emit the terminator
  std::vector<PortType> outs(succs.size(), PortType::control());
  NodeId blk = add(NodeKind::BasicBlock, cfg, {PortType::control()}, outs);
  NodeId bin = add(NodeKind::Input, blk, {}, row_ports(row));
  PortType sum = PortType::sum(srows);
  NodeId bout = add(NodeKind::Output, blk, {sum}, {});
  WireEnv env;
  for (std::uint32_t i = 0; i < row.size(); ++i) env[row[i].first] = {bin, i};
  if (preamble) preamble(blk, env);
  for (std::size_t j = 0; j < t; ++j) lower_simple_stmt(*stmts[j], blk, env);
  Wire w = emit(blk, env, sum);
  b.connect(w, bout, 0);
  for (std::uint32_t k = 0; k < succs.size(); ++k) b.connect(blk, k, succs[k], 0);
  return blk;
}

NodeId ModuleLowerer::gate_wrapper(const std::string& gname) {
  std::string key = "__gate_" + gname;
  auto it = fns.find(key);
  if (it != fns.end()) return it->second;
  const BuiltinGate* g = builtin_gate(gname);
  if (!g) ice("'" + gname + "' has no first-class form");
  std::vector<Type> params(static_cast<std::size_t>(g->num_qubits), Type::qubit());
  if (g->angle_param) params.push_back(Type::float_());
  Type result = Type::none();
  switch (g->result) {
    case BuiltinGate::Result::SameQubits:
      result = g->num_qubits == 1
                   ? Type::qubit()
                   : Type::tuple(std::vector<Type>(static_cast<std::size_t>(g->num_qubits),
                                                   Type::qubit()));
      break;
    case BuiltinGate::Result::Bool:
      result = Type::bool_();
      break;
    case BuiltinGate::Result::None:
      result = Type::none();
      break;
  }
  NodeId f = declare(key, params, result);
  fns[key] = f;
  NodeId input = b.node(f).children[0];
  NodeId output = b.node(f).children[1];
  std::vector<PortType> ip;
  for (const auto& t : params) ip.push_back(vp(t));
  std::vector<PortType> op;
  switch (g->result) {
    case BuiltinGate::Result::SameQubits:
      op.assign(static_cast<std::size_t>(g->num_qubits), vp(Type::qubit()));
      break;
    case BuiltinGate::Result::Bool:
      op.push_back(vp(Type::bool_()));
      break;
    case BuiltinGate::Result::None:
      break;
  }
  Payload p;
  p.name = gname;
  NodeId qn = b.add_node(NodeKind::QuantumOp, f, std::move(ip), op, std::move(p));
  for (std::uint32_t i = 0; i < params.size(); ++i) b.connect(input, i, qn, i);
  if (g->result == BuiltinGate::Result::SameQubits && g->num_qubits > 1) {
    std::vector<PortType> mip(op.begin(), op.end());
    NodeId mt = b.add_node(NodeKind::MakeTuple, f, std::move(mip), {vp(result)});
    for (std::uint32_t i = 0; i < op.size(); ++i) b.connect(qn, i, mt, i);
    b.connect(mt, 0, output, 0);
  } else if (!op.empty()) {
    b.connect(qn, 0, output, 0);
  }
  return f;
}

Graph ModuleLowerer::run() {
  for (const auto& f : m.functions) {
    if (!f->fn_type.is(Type::Kind::Function)) ice("module function without a resolved type");
    fns[f->name] = declare(f->name, f->fn_type.fn_params(), f->fn_type.fn_result());
  }
  for (const auto& f : m.functions) {
    FuncLowerer fl(*this, *f, fns.at(f->name));
    fl.lower();
  }
  return b.finish();
}

}  // namespace

Graph lower_module(const Module& m, LoweringMode mode) {
  ModuleLowerer ml{m, mode, GraphBuilder{}, {}, };
  return ml.run();
}

}  // namespace guppy
