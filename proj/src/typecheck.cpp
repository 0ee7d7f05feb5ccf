#include "guppy/typecheck.hpp"

#include <algorithm>
#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <set>
#include <sstream>

namespace guppy {

namespace {

const BuiltinGate kGates[] = {
    {"h", 1, false, BuiltinGate::Result::SameQubits},
    {"x", 1, false, BuiltinGate::Result::SameQubits},
    {"z", 1, false, BuiltinGate::Result::SameQubits},
    {"t", 1, false, BuiltinGate::Result::SameQubits},
    {"tdg", 1, false, BuiltinGate::Result::SameQubits},
    {"rz", 1, true, BuiltinGate::Result::SameQubits},
    {"cx", 2, false, BuiltinGate::Result::SameQubits},
    {"zz", 2, false, BuiltinGate::Result::SameQubits},
    {"measure", 1, false, BuiltinGate::Result::Bool},
    {"discard", 1, false, BuiltinGate::Result::None},
};

}  // namespace

const BuiltinGate* builtin_gate(const std::string& name) {
  for (const auto& g : kGates)
    if (name == g.name) return &g;
  return nullptr;
}

std::optional<Type> builtin_function_type(const std::string& name) {
  const BuiltinGate* g = builtin_gate(name);
  if (!g) return std::nullopt;
  std::vector<Type> params(g->num_qubits, Type::qubit());
  if (g->angle_param) params.push_back(Type::float_());
  Type result = Type::none();
  switch (g->result) {
    case BuiltinGate::Result::SameQubits:
      result = g->num_qubits == 1 ? Type::qubit()
                                  : Type::tuple(std::vector<Type>(g->num_qubits, Type::qubit()));
      break;
    case BuiltinGate::Result::Bool:
      result = Type::bool_();
      break;
    case BuiltinGate::Result::None:
      result = Type::none();
      break;
  }
  return Type::function(std::move(params), result);
}

std::optional<Type> join_types(const Type& a, const Type& b) {
  if (a == b) return a;
  return std::nullopt;
}

namespace {

int tower_rank(const Type& t) {
  switch (t.kind()) {
    case Type::Kind::Bool: return 0;
    case Type::Kind::Int: return 1;
    case Type::Kind::Float: return 2;
    default: return -1;
  }
}

Type tower_type(int rank) {
  switch (rank) {
    case 0: return Type::bool_();
    case 1: return Type::int_();
    case 2: return Type::float_();
  }
  return Type::error();
}

}  // namespace

std::optional<OperatorResolution> resolve_binary(BinOpKind op, const Type& lhs, const Type& rhs) {
  int lr = tower_rank(lhs), rr = tower_rank(rhs);
  if (lr < 0 || rr < 0) return std::nullopt;
  OperatorResolution res;
  switch (op) {
    case BinOpKind::Add:
    case BinOpKind::Sub:
    case BinOpKind::Mul: {
      int common = std::max({lr, rr, 1});  // bools compute as ints
      res.operand_type = tower_type(common);
      res.result = res.operand_type;
      break;
    }
    case BinOpKind::Div:
      res.operand_type = Type::float_();
      res.result = Type::float_();
      break;
    case BinOpKind::FloorDiv:
    case BinOpKind::Mod:
    case BinOpKind::BitAnd:
    case BinOpKind::BitOr:
    case BinOpKind::BitXor:
    case BinOpKind::Shl:
    case BinOpKind::Shr:
      // integer-only operations; bools coerce upward
      if (lr > 1 || rr > 1) return std::nullopt;
      res.operand_type = Type::int_();
      res.result = Type::int_();
      break;
  }
  res.coerce_lhs = lhs != res.operand_type;
  res.coerce_rhs = rhs != res.operand_type;
  return res;
}

std::optional<OperatorResolution> resolve_compare(CmpOpKind op, const Type& lhs, const Type& rhs) {
  OperatorResolution res;
  res.result = Type::bool_();
  int lr = tower_rank(lhs), rr = tower_rank(rhs);
  if (op == CmpOpKind::Eq || op == CmpOpKind::Ne) {
    if (lr >= 0 && rr >= 0) {
      res.operand_type = tower_type(std::max(lr, rr));
    } else {
      if (lhs != rhs || lhs.is_linear()) return std::nullopt;
      res.operand_type = lhs;
    }
  } else {
    if (lr < 0 || rr < 0) return std::nullopt;
    res.operand_type = tower_type(std::max(lr, rr));
  }
  res.coerce_lhs = lhs != res.operand_type;
  res.coerce_rhs = rhs != res.operand_type;
  return res;
}

std::optional<ConstBindings> parse_bindings(const std::string& json_text, std::string& error) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    error = std::string("malformed bindings file: ") + e.what();
    return std::nullopt;
  }
  if (!doc.is_object()) {
    error = "bindings file must be a JSON object";
    return std::nullopt;
  }
  ConstBindings out;
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    const nlohmann::json& entry = it.value();
    if (!entry.is_object() || !entry.contains("type") || !entry.contains("value")) {
      error = "binding '" + it.key() + "' must have \"type\" and \"value\"";
      return std::nullopt;
    }
    auto cv = typed_literal(entry.at("type").get<std::string>(), entry.at("value"));
    if (!cv) {
      error = "binding '" + it.key() + "' has a value that does not match its type tag";
      return std::nullopt;
    }
    std::string key;
    for (char c : it.key())
      if (!std::isspace(static_cast<unsigned char>(c))) key.push_back(c);
    out.entries.emplace(std::move(key), std::move(*cv));
  }
  return out;
}

namespace {

enum class LinState { NotLinear, Live, Consumed };

struct VarInfo {
  Type type;
  LinState lin = LinState::NotLinear;
  bool conflicted = false;
  Type other_type;
  Span def_span;
};

struct Env {
  std::map<std::string, VarInfo> vars;
  std::set<std::string> maybe;  // assigned on some but not all paths
  bool reachable = true;
};

struct LoopCtx {
  std::vector<Env> break_envs;
  std::vector<Env> continue_envs;
};

struct FnSigs {
  std::map<std::string, const FunctionDef*> fns;
};

struct Checker {
  Module& module;
  const ConstBindings& bindings;
  std::vector<Diagnostic>& diags;
  FnSigs sigs;

  void report(DiagCategory cat, const std::string& msg, Span span) {
    diags.push_back(Diagnostic{cat, msg, span, {}});
  }

  // ---- type annotations ----

  std::optional<Type> annotation_type(const Expr& e) {
    if (const auto* name = e.as<NameExpr>()) {
      if (name->name == "bool") return Type::bool_();
      if (name->name == "int") return Type::int_();
      if (name->name == "float") return Type::float_();
      if (name->name == "Qubit" || name->name == "qubit") return Type::qubit();
      return std::nullopt;
    }
    if (e.as<NoneLitExpr>()) return Type::none();
    if (const auto* sub = e.as<SubscriptExpr>()) {
      const auto* base = sub->base->as<NameExpr>();
      if (!base) return std::nullopt;
      if (base->name == "list") {
        auto elem = annotation_type(*sub->index);
        if (!elem) return std::nullopt;
        return Type::list(*elem);
      }
      if (base->name == "tuple") {
        std::vector<Type> elems;
        if (const auto* tup = sub->index->as<TupleExpr>()) {
          for (const auto& el : tup->elems) {
            auto t = annotation_type(*el);
            if (!t) return std::nullopt;
            elems.push_back(*t);
          }
        } else {
          auto t = annotation_type(*sub->index);
          if (!t) return std::nullopt;
          elems.push_back(*t);
        }
        return Type::tuple(std::move(elems));
      }
      if (base->name == "Callable" || base->name == "callable") {
        const auto* tup = sub->index->as<TupleExpr>();
        if (!tup || tup->elems.size() != 2) return std::nullopt;
        const auto* params_list = tup->elems[0]->as<ListExpr>();
        if (!params_list) return std::nullopt;
        std::vector<Type> params;
        for (const auto& el : params_list->elems) {
          auto t = annotation_type(*el);
          if (!t) return std::nullopt;
          params.push_back(*t);
        }
        auto result = annotation_type(*tup->elems[1]);
        if (!result) return std::nullopt;
        return Type::function(std::move(params), *result);
      }
      return std::nullopt;
    }
    return std::nullopt;
  }

  // Resolves a function signature from annotations; reports missing or bad
  // annotations and fills def.fn_type.
  bool resolve_signature(FunctionDef& def) {
    bool ok = true;
    std::vector<Type> params;
    for (auto& p : def.params) {
      if (!p.ann.present) {
        report(DiagCategory::SignatureMissing,
               "parameter '" + p.name + "' of '" + def.name + "' needs a type annotation",
               p.name_span);
        params.push_back(Type::error());
        ok = false;
        continue;
      }
      auto t = annotation_type(*p.ann.expr);
      if (!t) {
        report(DiagCategory::TypeMismatch, "invalid type annotation", p.ann.span);
        params.push_back(Type::error());
        ok = false;
      } else {
        params.push_back(*t);
      }
    }
    Type ret = Type::error();
    if (!def.ret.present) {
      report(DiagCategory::SignatureMissing,
             "function '" + def.name + "' needs a return type annotation", def.name_span);
      ok = false;
    } else {
      auto t = annotation_type(*def.ret.expr);
      if (!t) {
        report(DiagCategory::TypeMismatch, "invalid type annotation", def.ret.span);
        ok = false;
      } else {
        ret = *t;
      }
    }
    def.fn_type = Type::function(std::move(params), ret);
    return ok;
  }

  void run() {
    for (auto& f : module.functions) {
      if (sigs.fns.count(f->name)) {
        report(DiagCategory::TypeMismatch, "redefinition of function '" + f->name + "'",
               f->name_span);
        continue;
      }
      resolve_signature(*f);
      sigs.fns.emplace(f->name, f.get());
    }
    for (auto& f : module.functions) check_function(*f, nullptr);
  }

  void check_function(FunctionDef& def, const Env* outer);
};

// Flow-sensitive checker for one function body.
struct FnChecker {
  Checker& c;
  FunctionDef& def;
  Type ret_type;
  std::vector<LoopCtx> loops;

  void report(DiagCategory cat, const std::string& msg, Span span) { c.report(cat, msg, span); }

  static LinState lin_for(const Type& t) {
    return t.is_linear() ? LinState::Live : LinState::NotLinear;
  }

  // ---- joins ----

  void join_into(Env& a, const Env& b, Span span) {
    if (!b.reachable) return;
    if (!a.reachable) {
      a = b;
      return;
    }
    std::vector<std::string> drop;
    for (auto& [name, va] : a.vars) {
      auto it = b.vars.find(name);
      if (it == b.vars.end()) {
        if (va.lin == LinState::Live)
          report(DiagCategory::LinearityConditionalUse,
                 "linear variable '" + name + "' is only live on some control paths", span);
        drop.push_back(name);
        continue;
      }
      const VarInfo& vb = it->second;
      if (va.lin != vb.lin && (va.lin == LinState::Live || vb.lin == LinState::Live)) {
        report(DiagCategory::LinearityConditionalUse,
               "linear variable '" + name + "' is consumed on some control paths only", span);
        drop.push_back(name);
        continue;
      }
      if (!(va.type == vb.type)) {
        va.conflicted = true;
        va.other_type = vb.type;
      }
      if (vb.conflicted) {
        va.conflicted = true;
        va.other_type = vb.other_type;
      }
    }
    for (const auto& name : drop) {
      a.vars.erase(name);
      a.maybe.insert(name);
    }
    for (const auto& [name, vb] : b.vars) {
      if (!a.vars.count(name)) {
        if (vb.lin == LinState::Live)
          report(DiagCategory::LinearityConditionalUse,
                 "linear variable '" + name + "' is only live on some control paths", span);
        a.maybe.insert(name);
      }
    }
    for (const auto& name : b.maybe) a.maybe.insert(name);
  }

  // Checks that a back-edge environment is compatible with the loop entry.
  void check_back_edge(const Env& back, const Env& entry, Span span) {
    if (!back.reachable) return;
    for (const auto& [name, ve] : entry.vars) {
      auto it = back.vars.find(name);
      if (it == back.vars.end()) continue;  // cannot happen (no deletes)
      if (!(it->second.type == ve.type))
        report(DiagCategory::BranchTypeConflict,
               "variable '" + name + "' changes type across loop iterations", span);
      else if (it->second.lin != ve.lin)
        report(DiagCategory::LinearityConditionalUse,
               "linear variable '" + name + "' is not live at the end of every loop iteration",
               span);
    }
  }

  // Iteration-local linear values may not outlive the iteration.
  void check_leaves_scope(const Env& env, const Env& entry, Span span, const char* what) {
    for (const auto& [name, v] : env.vars) {
      if (v.lin == LinState::Live && !entry.vars.count(name))
        report(DiagCategory::LinearityDiscard,
               "linear variable '" + name + "' goes out of scope at " + std::string(what) +
                   " without being used",
               span);
    }
  }

  // ---- expressions ----

  Type error_expr(Expr& e) {
    e.ty = Type::error();
    return e.ty;
  }

  Type check_expr(Expr& e, Env& env) {
    Type t = std::visit([&](auto& n) { return check_node(n, e, env); }, e.node);
    e.ty = t;
    return t;
  }

  // Reports use of a value whose type differs between branches.
  bool check_conflict_use(const std::string& name, const VarInfo& v, Span span) {
    if (!v.conflicted) return false;
    report(DiagCategory::BranchTypeConflict,
           "variable '" + name + "' does not have a unique type here: could be `" +
               v.type.tag() + "` or `" + v.other_type.tag() + "`",
           span);
    return true;
  }

  Type check_node(NameExpr& n, Expr& e, Env& env) {
    auto it = env.vars.find(n.name);
    if (it != env.vars.end()) {
      VarInfo& v = it->second;
      n.binding = NameBinding::Local;
      if (check_conflict_use(n.name, v, e.span)) return error_expr(e);
      if (v.lin == LinState::Consumed) {
        report(DiagCategory::LinearityCopy,
               "linear variable '" + n.name + "' is used more than once", e.span);
        return error_expr(e);
      }
      if (v.lin == LinState::Live) v.lin = LinState::Consumed;
      return v.type;
    }
    // captured variable of a nested function
    for (const auto& cap : def.captures) {
      if (cap.name == n.name) {
        n.binding = NameBinding::Capture;
        return cap.type;
      }
    }
    auto fit = c.sigs.fns.find(n.name);
    if (fit != c.sigs.fns.end()) {
      n.binding = NameBinding::Func;
      return fit->second->fn_type;
    }
    if (auto bt = builtin_function_type(n.name)) {
      n.binding = NameBinding::Builtin;
      return *bt;
    }
    if (env.maybe.count(n.name)) {
      report(DiagCategory::NotDefinitelyAssigned,
             "variable '" + n.name + "' is not definitely assigned: it may be unset on some "
             "control paths",
             e.span);
    } else {
      report(DiagCategory::NotDefined, "name '" + n.name + "' is not defined", e.span);
    }
    return error_expr(e);
  }

  Type check_node(IntLitExpr& n, Expr& e, Env&) {
    errno = 0;
    char* end = nullptr;
    n.value = std::strtoll(n.text.c_str(), &end, 10);
    if (errno == ERANGE) {
      report(DiagCategory::OverflowLiteral,
             "integer literal does not fit in 64 bits: " + n.text, e.span);
      return error_expr(e);
    }
    return Type::int_();
  }
  Type check_node(FloatLitExpr&, Expr&, Env&) { return Type::float_(); }
  Type check_node(BoolLitExpr&, Expr&, Env&) { return Type::bool_(); }
  Type check_node(NoneLitExpr&, Expr&, Env&) { return Type::none(); }

  void wrap_coerce(ExprPtr& operand, const Type& target) {
    auto coerce = std::make_unique<Expr>();
    coerce->span = operand->span;
    coerce->ty = target;
    coerce->node = CoerceExpr{std::move(operand)};
    operand = std::move(coerce);
  }

  Type check_node(UnaryExpr& n, Expr& e, Env& env) {
    // fold -literal into the literal itself so INT64_MIN is representable
    if (n.op == UnaryOpKind::Neg) {
      if (auto* lit = n.operand->as<IntLitExpr>()) {
        IntLitExpr folded = std::move(*lit);
        folded.text = "-" + folded.text;
        e.node = std::move(folded);
        return check_node(std::get<IntLitExpr>(e.node), e, env);
      }
    }
    Type t = check_expr(*n.operand, env);
    if (t.is_error()) return error_expr(e);
    if (n.op == UnaryOpKind::Not) {
      if (!t.is(Type::Kind::Bool)) {
        report(DiagCategory::TypeMismatch, "'not' requires a bool operand, got `" + t.tag() + "`",
               e.span);
        return error_expr(e);
      }
      return Type::bool_();
    }
    if (!t.is_numeric()) {
      report(DiagCategory::TypeMismatch, "unary '-' requires a numeric operand, got `" + t.tag() +
                                             "`",
             e.span);
      return error_expr(e);
    }
    if (t.is(Type::Kind::Bool)) {
      wrap_coerce(n.operand, Type::int_());
      return Type::int_();
    }
    return t;
  }

  Type check_node(BinaryExpr& n, Expr& e, Env& env) {
    Type lt = check_expr(*n.lhs, env);
    Type rt = check_expr(*n.rhs, env);
    if (lt.is_error() || rt.is_error()) return error_expr(e);
    auto res = resolve_binary(n.op, lt, rt);
    if (!res) {
      report(DiagCategory::TypeMismatch,
             std::string("operator '") + binop_text(n.op) + "' is not defined for `" + lt.tag() +
                 "` and `" + rt.tag() + "`",
             e.span);
      return error_expr(e);
    }
    if (res->coerce_lhs) wrap_coerce(n.lhs, res->operand_type);
    if (res->coerce_rhs) wrap_coerce(n.rhs, res->operand_type);
    return res->result;
  }

  // Checks an expression that is only conditionally evaluated; rejects
  // linear consumption inside it.
  Type check_conditional_operand(Expr& sub, Env& env, const char* what) {
    Env before = env;
    Type t = check_value_expr(sub, env);
    for (const auto& [name, v] : before.vars) {
      auto it = env.vars.find(name);
      if (it != env.vars.end() && it->second.lin != v.lin) {
        report(DiagCategory::UnsupportedFeature,
               std::string("linear values may not be consumed inside ") + what, sub.span);
        return Type::error();
      }
    }
    return t;
  }

  Type check_node(BoolOpExpr& n, Expr& e, Env& env) {
    Type lt = check_expr(*n.lhs, env);
    Type rt = check_conditional_operand(*n.rhs, env, "'and'/'or' operands");
    if (lt.is_error() || rt.is_error()) return error_expr(e);
    if (!lt.is(Type::Kind::Bool) || !rt.is(Type::Kind::Bool)) {
      report(DiagCategory::TypeMismatch,
             std::string(n.is_and ? "'and'" : "'or'") + " requires bool operands, got `" +
                 lt.tag() + "` and `" + rt.tag() + "`",
             e.span);
      return error_expr(e);
    }
    return Type::bool_();
  }

  Type check_node(CompareExpr& n, Expr& e, Env& env) {
    std::vector<Type> ts;
    bool bad = false;
    for (auto& operand : n.operands) {
      Type t = check_expr(*operand, env);
      if (t.is_error()) bad = true;
      ts.push_back(t);
    }
    if (bad) return error_expr(e);
    for (std::size_t i = 0; i < n.ops.size(); ++i) {
      auto res = resolve_compare(n.ops[i], ts[i], ts[i + 1]);
      if (!res) {
        report(DiagCategory::TypeMismatch,
               std::string("comparison '") + cmpop_text(n.ops[i]) + "' is not defined for `" +
                   ts[i].tag() + "` and `" + ts[i + 1].tag() + "`",
               e.span);
        return error_expr(e);
      }
      // single-comparison coercions become explicit nodes; chains coerce
      // at lowering time because interior operands are shared
      if (n.ops.size() == 1) {
        if (res->coerce_lhs) wrap_coerce(n.operands[0], res->operand_type);
        if (res->coerce_rhs) wrap_coerce(n.operands[1], res->operand_type);
      }
    }
    return Type::bool_();
  }

  Type check_node(CondExpr& n, Expr& e, Env& env) {
    Type ct = check_expr(*n.cond, env);
    if (!ct.is_error() && !ct.is(Type::Kind::Bool))
      report(DiagCategory::TypeMismatch,
             "conditional expression requires a bool condition, got `" + ct.tag() + "`",
             n.cond->span);
    Type tt = check_conditional_operand(*n.then_val, env, "conditional expressions");
    Type et = check_conditional_operand(*n.else_val, env, "conditional expressions");
    if (tt.is_error() || et.is_error()) return error_expr(e);
    if (tt == et) return tt;
    // conflicting arms poison the value; the error surfaces at first use
    e.ty = tt;
    pending_conflict = std::make_pair(tt, et);
    return tt;
  }

  // Set when the most recent expression produced branch-dependent types.
  std::optional<std::pair<Type, Type>> pending_conflict;

  Type check_node(TupleExpr& n, Expr& e, Env& env) {
    std::vector<Type> elems;
    bool bad = false;
    for (auto& el : n.elems) {
      Type t = check_value_expr(*el, env);
      if (t.is_error()) bad = true;
      elems.push_back(t);
    }
    if (bad) return error_expr(e);
    return Type::tuple(std::move(elems));
  }

  Type check_node(ListExpr& n, Expr& e, Env& env) {
    if (n.elems.empty()) {
      report(DiagCategory::TypeMismatch,
             "cannot infer the element type of an empty list display", e.span);
      return error_expr(e);
    }
    Type elem = check_value_expr(*n.elems[0], env);
    if (elem.is_error()) return error_expr(e);
    for (std::size_t i = 1; i < n.elems.size(); ++i) {
      Type t = check_value_expr(*n.elems[i], env);
      if (t.is_error()) return error_expr(e);
      if (!(t == elem)) {
        report(DiagCategory::TypeMismatch,
               "list elements must share one type: `" + elem.tag() + "` vs `" + t.tag() + "`",
               n.elems[i]->span);
        return error_expr(e);
      }
    }
    return Type::list(elem);
  }

  Type check_node(ComprehensionExpr& n, Expr& e, Env& env) {
    Type it = check_value_expr(*n.iterable, env);
    if (it.is_error()) return error_expr(e);
    if (!it.is(Type::Kind::List)) {
      report(DiagCategory::TypeMismatch,
             "comprehension iterable must be a list, got `" + it.tag() + "`", n.iterable->span);
      return error_expr(e);
    }
    Type elem = it.list_elem();
    Env inner = env;
    std::vector<std::string> bound;
    if (n.targets.size() == 1) {
      inner.vars[n.targets[0].first] =
          VarInfo{elem, lin_for(elem), false, {}, n.targets[0].second};
      bound.push_back(n.targets[0].first);
    } else {
      if (!elem.is(Type::Kind::Tuple) || elem.elems().size() != n.targets.size()) {
        report(DiagCategory::TypeMismatch,
               "cannot unpack `" + elem.tag() + "` into " + std::to_string(n.targets.size()) +
                   " names",
               e.span);
        return error_expr(e);
      }
      for (std::size_t i = 0; i < n.targets.size(); ++i) {
        inner.vars[n.targets[i].first] =
            VarInfo{elem.elems()[i], lin_for(elem.elems()[i]), false, {}, n.targets[i].second};
        bound.push_back(n.targets[i].first);
      }
    }
    Type out = check_value_expr(*n.element, inner);
    if (out.is_error()) return error_expr(e);
    // outer linear state may not change across iterations
    for (const auto& [name, v] : env.vars) {
      auto iit = inner.vars.find(name);
      if (iit != inner.vars.end() && iit->second.lin != v.lin &&
          std::find(bound.begin(), bound.end(), name) == bound.end()) {
        report(DiagCategory::UnsupportedFeature,
               "comprehension may not consume outer linear variable '" + name + "'", e.span);
        return error_expr(e);
      }
    }
    for (const auto& name : bound) {
      auto iit = inner.vars.find(name);
      if (iit != inner.vars.end() && iit->second.lin == LinState::Live) {
        report(DiagCategory::LinearityDiscard,
               "comprehension target '" + name + "' is linear but not used", e.span);
        return error_expr(e);
      }
    }
    return Type::list(out);
  }

  bool check_args_against(const std::vector<Type>& params, std::vector<ExprPtr>& args, Env& env,
                          Span span, const std::string& what) {
    if (args.size() != params.size()) {
      report(DiagCategory::Arity, what + " expects " + std::to_string(params.size()) +
                                      " argument(s), got " + std::to_string(args.size()),
             span);
      for (auto& a : args) check_value_expr(*a, env);
      return false;
    }
    bool ok = true;
    for (std::size_t i = 0; i < args.size(); ++i) {
      Type t = check_value_expr(*args[i], env);
      if (t.is_error()) {
        ok = false;
        continue;
      }
      if (!(t == params[i])) {
        report(DiagCategory::TypeMismatch,
               what + " argument " + std::to_string(i + 1) + " must be `" + params[i].tag() +
                   "`, got `" + t.tag() + "`",
               args[i]->span);
        ok = false;
      }
    }
    return ok;
  }

  Type check_list_builtin(const std::string& name, std::vector<ExprPtr>& args, Expr& e, Env& env,
                          Type recv_type, bool has_receiver) {
    // receiver (method form) or first argument (function form) is the list
    std::size_t extra = has_receiver ? 0 : 1;
    if (name == "len") {
      if (args.size() != extra) {
        report(DiagCategory::Arity, "len expects no further arguments", e.span);
        return error_expr(e);
      }
      if (!recv_type.is(Type::Kind::List)) {
        report(DiagCategory::TypeMismatch, "len requires a list, got `" + recv_type.tag() + "`",
               e.span);
        return error_expr(e);
      }
      if (recv_type.list_elem().is_linear())
        return Type::tuple({Type::int_(), recv_type});
      return Type::int_();
    }
    if (name == "get") {
      if (args.size() != extra + 1) {
        report(DiagCategory::Arity, "get expects a list and an index", e.span);
        return error_expr(e);
      }
      Type idx = check_value_expr(*args.back(), env);
      if (!recv_type.is(Type::Kind::List)) {
        report(DiagCategory::TypeMismatch, "get requires a list, got `" + recv_type.tag() + "`",
               e.span);
        return error_expr(e);
      }
      if (!idx.is_error() && !idx.is(Type::Kind::Int)) {
        report(DiagCategory::TypeMismatch, "get index must be `int`, got `" + idx.tag() + "`",
               args.back()->span);
        return error_expr(e);
      }
      if (recv_type.list_elem().is_linear())
        return Type::tuple({recv_type.list_elem(), recv_type});
      return recv_type.list_elem();
    }
    if (name == "apply") {
      if (args.size() != extra + 2) {
        report(DiagCategory::Arity, "apply expects a function and an index tuple", e.span);
        return error_expr(e);
      }
      if (!recv_type.is(Type::Kind::List) || !recv_type.list_elem().is_linear()) {
        report(DiagCategory::TypeMismatch,
               "apply is only available on lists of linear elements, got `" + recv_type.tag() +
                   "`",
               e.span);
        return error_expr(e);
      }
      Type elem = recv_type.list_elem();
      Type ft = check_value_expr(*args[extra], env);
      Type it = check_value_expr(*args[extra + 1], env);
      if (ft.is_error() || it.is_error()) return error_expr(e);
      if (!ft.is(Type::Kind::Function)) {
        report(DiagCategory::TypeMismatch, "apply's first argument must be a function",
               args[extra]->span);
        return error_expr(e);
      }
      std::size_t k = ft.fn_params().size();
      Type expected_fn =
          Type::function(std::vector<Type>(k, elem),
                         k == 1 ? elem : Type::tuple(std::vector<Type>(k, elem)));
      if (k == 0 || !(ft == expected_fn)) {
        report(DiagCategory::TypeMismatch,
               "apply's function must map " + std::to_string(k) + " element(s) to " +
                   std::to_string(k) + " element(s) of `" + elem.tag() + "`",
               args[extra]->span);
        return error_expr(e);
      }
      if (!(it == Type::tuple(std::vector<Type>(k, Type::int_())))) {
        report(DiagCategory::TypeMismatch,
               "apply's index argument must be a tuple of " + std::to_string(k) + " ints",
               args[extra + 1]->span);
        return error_expr(e);
      }
      return recv_type;
    }
    report(DiagCategory::TypeMismatch, "unknown method '" + name + "'", e.span);
    return error_expr(e);
  }

  Type check_node(CallExpr& n, Expr& e, Env& env) {
    if (auto* name = n.callee->as<NameExpr>()) {
      // builtins and named functions resolve before local variables shadow
      // nothing: locals take priority
      if (!env.vars.count(name->name)) {
        if (name->name == "Qubit") {
          name->binding = NameBinding::Builtin;
          n.callee->ty = Type::function({}, Type::qubit());
          if (!n.args.empty()) {
            report(DiagCategory::Arity, "Qubit() takes no arguments", e.span);
            return error_expr(e);
          }
          return Type::qubit();
        }
        if (builtin_gate(name->name)) {
          name->binding = NameBinding::Builtin;
          Type ft = *builtin_function_type(name->name);
          n.callee->ty = ft;
          if (!check_args_against(ft.fn_params(), n.args, env, e.span, name->name))
            return error_expr(e);
          return ft.fn_result();
        }
        if (name->name == "range") {
          name->binding = NameBinding::Builtin;
          if (!check_args_against({Type::int_()}, n.args, env, e.span, "range"))
            return error_expr(e);
          return Type::list(Type::int_());
        }
        if (name->name == "len" || name->name == "get") {
          name->binding = NameBinding::Builtin;
          if (n.args.empty()) {
            report(DiagCategory::Arity, name->name + " expects a list argument", e.span);
            return error_expr(e);
          }
          Type recv = check_value_expr(*n.args[0], env);
          if (recv.is_error()) return error_expr(e);
          return check_list_builtin(name->name, n.args, e, env, recv, false);
        }
      }
      Type ft = check_expr(*n.callee, env);
      if (ft.is_error()) {
        for (auto& a : n.args) check_value_expr(*a, env);
        return error_expr(e);
      }
      if (!ft.is(Type::Kind::Function)) {
        report(DiagCategory::TypeMismatch, "'" + name->name + "' is not callable (type `" +
                                               ft.tag() + "`)",
               e.span);
        return error_expr(e);
      }
      if (!check_args_against(ft.fn_params(), n.args, env, e.span, "'" + name->name + "'"))
        return error_expr(e);
      return ft.fn_result();
    }
    Type ft = check_expr(*n.callee, env);
    if (ft.is_error()) return error_expr(e);
    if (!ft.is(Type::Kind::Function)) {
      report(DiagCategory::TypeMismatch, "expression of type `" + ft.tag() + "` is not callable",
             e.span);
      return error_expr(e);
    }
    if (!check_args_against(ft.fn_params(), n.args, env, e.span, "function"))
      return error_expr(e);
    return ft.fn_result();
  }

  Type check_node(MethodCallExpr& n, Expr& e, Env& env) {
    Type recv = check_value_expr(*n.receiver, env);
    if (recv.is_error()) return error_expr(e);
    return check_list_builtin(n.method, n.args, e, env, recv, true);
  }

  Type check_node(SubscriptExpr& n, Expr& e, Env& env) {
    Type base = check_value_expr(*n.base, env);
    Type idx = check_value_expr(*n.index, env);
    if (base.is_error() || idx.is_error()) return error_expr(e);
    if (!base.is(Type::Kind::List) || base.list_elem().is_linear()) {
      report(DiagCategory::TypeMismatch,
             "subscription requires a classical list (use get on linear lists), got `" +
                 base.tag() + "`",
             e.span);
      return error_expr(e);
    }
    if (!idx.is(Type::Kind::Int)) {
      report(DiagCategory::TypeMismatch, "list index must be `int`, got `" + idx.tag() + "`",
             n.index->span);
      return error_expr(e);
    }
    return base.list_elem();
  }

  Type check_node(PyExpr& n, Expr& e, Env& env);
  Type check_node(CoerceExpr&, Expr& e, Env&) { return e.ty; }
  Type check_node(ConstExpr& n, Expr&, Env&) { return n.value.type; }

  // A value-position expression: a pending conditional-type conflict is an
  // immediate error except when it feeds an assignment (handled there).
  Type check_value_expr(Expr& e, Env& env) {
    Type t = check_expr(e, env);
    if (pending_conflict) {
      auto [a, b] = *pending_conflict;
      pending_conflict.reset();
      report(DiagCategory::BranchTypeConflict,
             "expression does not have a unique type: could be `" + a.tag() + "` or `" + b.tag() +
                 "`",
             e.span);
      return Type::error();
    }
    return t;
  }

  // ---- statements ----

  void bind_name(Env& env, const std::string& name, Span span, Type type, bool conflicted = false,
                 Type other = {}) {
    auto it = env.vars.find(name);
    if (it != env.vars.end() && it->second.lin == LinState::Live) {
      report(DiagCategory::LinearityDiscard,
             "assignment discards the unused linear value previously bound to '" + name + "'",
             span);
    }
    VarInfo v;
    v.type = std::move(type);
    v.lin = lin_for(v.type);
    v.conflicted = conflicted;
    v.other_type = std::move(other);
    v.def_span = span;
    env.vars[name] = std::move(v);
    env.maybe.erase(name);
  }

  void check_stmt(Stmt& s, Env& env) {
    if (!env.reachable) return;  // dead code is not re-checked
    bool compound = s.as<IfStmt>() || s.as<WhileStmt>() || s.as<ForStmt>() || s.as<FuncDefStmt>();
    std::size_t before = c.diags.size();
    std::visit([&](auto& n) { check_stmt_node(n, s, env); }, s.node);
    // at most one diagnostic per simple statement
    if (!compound && c.diags.size() > before + 1) c.diags.resize(before + 1);
  }

  void check_block(std::vector<StmtPtr>& body, Env& env) {
    for (auto& s : body) check_stmt(*s, env);
  }

  void check_stmt_node(AssignStmt& n, Stmt& s, Env& env) {
    Type t = check_expr(*n.value, env);
    bool conflicted = false;
    Type other;
    if (pending_conflict) {
      conflicted = true;
      other = pending_conflict->second;
      t = pending_conflict->first;
      pending_conflict.reset();
    }
    if (t.is_error()) {
      // still bind targets to silence cascades
      for (auto& [name, span] : n.target.names) bind_name(env, name, span, Type::error());
      return;
    }
    if (!n.target.is_tuple) {
      bind_name(env, n.target.names[0].first, n.target.names[0].second, t, conflicted, other);
      return;
    }
    if (!t.is(Type::Kind::Tuple) || t.elems().size() != n.target.names.size()) {
      report(DiagCategory::TypeMismatch,
             "cannot unpack `" + t.tag() + "` into " + std::to_string(n.target.names.size()) +
                 " names",
             s.span);
      for (auto& [name, span] : n.target.names) bind_name(env, name, span, Type::error());
      return;
    }
    for (std::size_t i = 0; i < n.target.names.size(); ++i)
      bind_name(env, n.target.names[i].first, n.target.names[i].second, t.elems()[i]);
  }

  void check_stmt_node(ExprStmt& n, Stmt&, Env& env) {
    Type t = check_value_expr(*n.expr, env);
    if (t.is_linear()) {
      report(DiagCategory::LinearityDiscard,
             "return value of type `" + t.tag() + "` is linear and may not be dropped",
             n.expr->span);
    }
  }

  void check_stmt_node(IfStmt& n, Stmt& s, Env& env) {
    Type ct = check_value_expr(*n.cond, env);
    if (!ct.is_error() && !ct.is(Type::Kind::Bool))
      report(DiagCategory::TypeMismatch, "if condition must be `bool`, got `" + ct.tag() + "`",
             n.cond->span);
    Env then_env = env;
    check_block(n.then_body, then_env);
    Env else_env = env;
    check_block(n.else_body, else_env);
    if (!then_env.reachable && !else_env.reachable) {
      env.reachable = false;
      return;
    }
    Env joined = then_env;
    join_into(joined, else_env, s.span);
    env = std::move(joined);
  }

  void check_stmt_node(WhileStmt& n, Stmt& s, Env& env) {
    Env entry = env;
    // the condition re-runs every iteration, so it may not consume anything
    Type ct = check_conditional_operand(*n.cond, env, "while conditions");
    if (!ct.is_error() && !ct.is(Type::Kind::Bool))
      report(DiagCategory::TypeMismatch, "while condition must be `bool`, got `" + ct.tag() + "`",
             n.cond->span);
    env = entry;
    loops.emplace_back();
    push_loop_entry(entry);
    Env body_env = entry;
    check_block(n.body, body_env);
    loop_entry_names.pop_back();
    LoopCtx ctx = std::move(loops.back());
    loops.pop_back();
    if (body_env.reachable) {
      check_leaves_scope(body_env, entry, s.span, "the end of the loop body");
      ctx.continue_envs.push_back(body_env);
    }
    for (const auto& ce : ctx.continue_envs) check_back_edge(ce, entry, s.span);
    Env exit_env = entry;  // condition-false path
    for (auto& be : ctx.break_envs) join_into(exit_env, be, s.span);
    env = std::move(exit_env);
  }

  void check_stmt_node(ForStmt& n, Stmt& s, Env& env) {
    Type it = check_value_expr(*n.iterable, env);
    Env entry = env;  // iterable consumed before the first iteration
    Type elem = Type::error();
    if (!it.is_error()) {
      if (!it.is(Type::Kind::List)) {
        report(DiagCategory::TypeMismatch,
               "for iterable must be a list, got `" + it.tag() + "`", n.iterable->span);
      } else if (it.list_elem().is_linear()) {
        report(DiagCategory::UnsupportedFeature,
               "for may not iterate a list of linear values; use apply or a comprehension",
               n.iterable->span);
      } else {
        elem = it.list_elem();
      }
    }
    loops.emplace_back();
    push_loop_entry(entry);
    Env body_env = entry;
    if (!n.target.is_tuple) {
      bind_name(body_env, n.target.names[0].first, n.target.names[0].second, elem);
    } else if (elem.is(Type::Kind::Tuple) && elem.elems().size() == n.target.names.size()) {
      for (std::size_t i = 0; i < n.target.names.size(); ++i)
        bind_name(body_env, n.target.names[i].first, n.target.names[i].second, elem.elems()[i]);
    } else {
      if (!elem.is_error())
        report(DiagCategory::TypeMismatch,
               "cannot unpack `" + elem.tag() + "` into " + std::to_string(n.target.names.size()) +
                   " loop variables",
               n.target.span);
      for (auto& [name, span] : n.target.names) bind_name(body_env, name, span, Type::error());
    }
    check_block(n.body, body_env);
    loop_entry_names.pop_back();
    LoopCtx ctx = std::move(loops.back());
    loops.pop_back();
    if (body_env.reachable) {
      check_leaves_scope(body_env, entry, s.span, "the end of the loop body");
      ctx.continue_envs.push_back(body_env);
    }
    for (const auto& ce : ctx.continue_envs) check_back_edge(ce, entry, s.span);
    Env exit_env = entry;  // zero iterations possible
    for (auto& be : ctx.break_envs) join_into(exit_env, be, s.span);
    env = std::move(exit_env);
  }

  void check_stmt_node(BreakStmt&, Stmt& s, Env& env) {
    if (loops.empty()) return;  // parser already rejected
    // entry env of the innermost loop is the first continue/break baseline:
    // iteration-local linear values must be dead by now
    Env stripped = env;
    loop_exit_env(stripped, s.span, "break");
    loops.back().break_envs.push_back(std::move(stripped));
    env.reachable = false;
  }

  void check_stmt_node(ContinueStmt&, Stmt& s, Env& env) {
    if (loops.empty()) return;
    Env stripped = env;
    loop_exit_env(stripped, s.span, "continue");
    loops.back().continue_envs.push_back(std::move(stripped));
    env.reachable = false;
  }

  // Loop-entry variable sets are recorded per loop so iteration locals can
  // be screened at break/continue.
  std::vector<std::set<std::string>> loop_entry_names;

  void push_loop_entry(const Env& entry) {
    std::set<std::string> names;
    for (const auto& [name, v] : entry.vars) names.insert(name);
    loop_entry_names.push_back(std::move(names));
  }

  void loop_exit_env(Env& env, Span span, const char* what) {
    if (loop_entry_names.empty()) return;
    const auto& entry = loop_entry_names.back();
    std::vector<std::string> drop;
    for (const auto& [name, v] : env.vars) {
      if (!entry.count(name)) {
        if (v.lin == LinState::Live)
          report(DiagCategory::LinearityDiscard,
                 "linear variable '" + name + "' goes out of scope at " + std::string(what) +
                     " without being used",
                 span);
        drop.push_back(name);
      }
    }
    for (const auto& d : drop) env.vars.erase(d);
  }

  void check_stmt_node(ReturnStmt& n, Stmt& s, Env& env) {
    Type t = Type::none();
    Span span = s.span;
    if (n.value) {
      t = check_value_expr(*n.value, env);
      span = n.value->span;
    }
    if (!t.is_error() && !ret_type.is_error() && !(t == ret_type)) {
      report(DiagCategory::TypeMismatch,
             "return value must be `" + ret_type.tag() + "`, got `" + t.tag() + "`", span);
    }
    for (const auto& [name, v] : env.vars) {
      if (v.lin == LinState::Live)
        report(DiagCategory::LinearityDiscard,
               "linear variable '" + name + "' is still live at return", s.span);
    }
    env.reachable = false;
  }

  void check_stmt_node(FuncDefStmt& n, Stmt& s, Env& env) {
    FunctionDef& nested = *n.def;
    if (!c.resolve_signature(nested)) {
      bind_name(env, nested.name, nested.name_span, Type::error());
      return;
    }
    // captures: free names bound in the enclosing environment
    std::set<std::string> free;
    collect_free_names(nested, free);
    nested.captures.clear();
    for (const auto& name : free) {
      auto it = env.vars.find(name);
      if (it == env.vars.end()) continue;  // module fn / builtin / undefined
      if (it->second.type.is_linear()) {
        report(DiagCategory::LinearityCopy,
               "nested function '" + nested.name + "' may not capture linear variable '" + name +
                   "'",
               s.span);
        bind_name(env, nested.name, nested.name_span, Type::error());
        return;
      }
      if (check_conflict_use(name, it->second, s.span)) {
        bind_name(env, nested.name, nested.name_span, Type::error());
        return;
      }
      nested.captures.push_back(Capture{name, it->second.type});
    }
    c.check_function(nested, &env);
    bind_name(env, nested.name, nested.name_span, nested.fn_type);
  }

  static void collect_free_names(const FunctionDef& def, std::set<std::string>& out);

  // ---- driver ----

  void run() {
    ret_type = def.fn_type.is(Type::Kind::Function) ? def.fn_type.fn_result() : Type::error();
    Env env;
    std::vector<Type> params =
        def.fn_type.is(Type::Kind::Function) ? def.fn_type.fn_params() : std::vector<Type>{};
    for (std::size_t i = 0; i < def.params.size(); ++i) {
      Type t = i < params.size() ? params[i] : Type::error();
      env.vars[def.params[i].name] = VarInfo{t, lin_for(t), false, {}, def.params[i].name_span};
    }
    for (auto& s : def.body) check_stmt(*s, env);
    if (env.reachable) {
      if (!ret_type.is_error() && !ret_type.is(Type::Kind::None)) {
        report(DiagCategory::TypeMismatch,
               "function '" + def.name + "' may finish without returning `" + ret_type.tag() +
                   "`",
               def.name_span);
      }
      for (const auto& [name, v] : env.vars) {
        if (v.lin == LinState::Live)
          report(DiagCategory::LinearityDiscard,
                 "linear variable '" + name + "' is still live at function exit", def.name_span);
      }
    }
  }
};

void FnChecker::collect_free_names(const FunctionDef& def, std::set<std::string>& out) {
  struct Walker {
    std::set<std::string> bound;
    std::set<std::string>& free;

    void expr(const Expr& e) {
      std::visit([&](const auto& n) { visit(n); }, e.node);
    }
    void visit(const NameExpr& n) {
      if (!bound.count(n.name)) free.insert(n.name);
    }
    void visit(const IntLitExpr&) {}
    void visit(const FloatLitExpr&) {}
    void visit(const BoolLitExpr&) {}
    void visit(const NoneLitExpr&) {}
    void visit(const UnaryExpr& n) { expr(*n.operand); }
    void visit(const BinaryExpr& n) {
      expr(*n.lhs);
      expr(*n.rhs);
    }
    void visit(const BoolOpExpr& n) {
      expr(*n.lhs);
      expr(*n.rhs);
    }
    void visit(const CompareExpr& n) {
      for (const auto& o : n.operands) expr(*o);
    }
    void visit(const CondExpr& n) {
      expr(*n.cond);
      expr(*n.then_val);
      expr(*n.else_val);
    }
    void visit(const CallExpr& n) {
      expr(*n.callee);
      for (const auto& a : n.args) expr(*a);
    }
    void visit(const MethodCallExpr& n) {
      expr(*n.receiver);
      for (const auto& a : n.args) expr(*a);
    }
    void visit(const TupleExpr& n) {
      for (const auto& el : n.elems) expr(*el);
    }
    void visit(const ListExpr& n) {
      for (const auto& el : n.elems) expr(*el);
    }
    void visit(const ComprehensionExpr& n) {
      expr(*n.iterable);
      auto saved = bound;
      for (const auto& t : n.targets) bound.insert(t.first);
      expr(*n.element);
      bound = saved;
    }
    void visit(const SubscriptExpr& n) {
      expr(*n.base);
      expr(*n.index);
    }
    void visit(const PyExpr&) {}
    void visit(const CoerceExpr& n) { expr(*n.operand); }
    void visit(const ConstExpr&) {}

    void stmt(const Stmt& s) {
      std::visit([&](const auto& n) { visit_stmt(n); }, s.node);
    }
    void visit_stmt(const AssignStmt& n) {
      expr(*n.value);
      for (const auto& [name, span] : n.target.names) bound.insert(name);
    }
    void visit_stmt(const ExprStmt& n) { expr(*n.expr); }
    void visit_stmt(const IfStmt& n) {
      expr(*n.cond);
      for (const auto& s : n.then_body) stmt(*s);
      for (const auto& s : n.else_body) stmt(*s);
    }
    void visit_stmt(const WhileStmt& n) {
      expr(*n.cond);
      for (const auto& s : n.body) stmt(*s);
    }
    void visit_stmt(const ForStmt& n) {
      expr(*n.iterable);
      for (const auto& [name, span] : n.target.names) bound.insert(name);
      for (const auto& s : n.body) stmt(*s);
    }
    void visit_stmt(const BreakStmt&) {}
    void visit_stmt(const ContinueStmt&) {}
    void visit_stmt(const ReturnStmt& n) {
      if (n.value) expr(*n.value);
    }
    void visit_stmt(const FuncDefStmt& n) {
      std::set<std::string> inner_free;
      collect_free_names(*n.def, inner_free);
      for (const auto& name : inner_free)
        if (!bound.count(name)) free.insert(name);
      bound.insert(n.def->name);
    }
  };

  Walker w{{}, out};
  for (const auto& p : def.params) w.bound.insert(p.name);
  for (const auto& s : def.body) w.stmt(*s);
}

// ---- py(...) ----

namespace pyeval {

// Tiny evaluator for pure literal arithmetic: ints, floats, bools and
// + - * / ( ).
struct Lit {
  bool is_bool = false;
  bool is_float = false;
  bool b = false;
  long long i = 0;
  double f = 0;
};

struct Eval {
  const std::vector<Token>& toks;
  std::size_t pos = 0;
  bool failed = false;

  const Token* peek() const { return pos < toks.size() ? &toks[pos] : nullptr; }
  bool at(const char* text) const {
    const Token* t = peek();
    return t && t->text == text;
  }

  Lit fail() {
    failed = true;
    return {};
  }

  Lit atom() {
    const Token* t = peek();
    if (!t) return fail();
    if (t->is(TokenKind::IntLit)) {
      ++pos;
      Lit l;
      errno = 0;
      l.i = std::strtoll(t->text.c_str(), nullptr, 10);
      if (errno == ERANGE) return fail();
      return l;
    }
    if (t->is(TokenKind::FloatLit)) {
      ++pos;
      Lit l;
      l.is_float = true;
      l.f = std::stod(t->text);
      return l;
    }
    if (t->is(TokenKind::BoolLit)) {
      ++pos;
      Lit l;
      l.is_bool = true;
      l.b = t->text == "True";
      return l;
    }
    if (t->is(TokenKind::Delim, "(")) {
      ++pos;
      Lit l = sum();
      if (!at(")")) return fail();
      ++pos;
      return l;
    }
    if (t->is(TokenKind::Op, "-")) {
      ++pos;
      Lit l = atom();
      if (failed) return l;
      if (l.is_bool) return fail();
      if (l.is_float)
        l.f = -l.f;
      else
        l.i = -l.i;
      return l;
    }
    return fail();
  }

  static double as_float(const Lit& l) { return l.is_float ? l.f : static_cast<double>(l.i); }

  Lit product() {
    Lit l = atom();
    while (!failed && (at("*") || at("/"))) {
      bool div = at("/");
      ++pos;
      Lit r = atom();
      if (failed) return l;
      if (l.is_bool || r.is_bool) return fail();
      if (div) {
        if (as_float(r) == 0) return fail();
        Lit out;
        out.is_float = true;
        out.f = as_float(l) / as_float(r);
        l = out;
      } else if (l.is_float || r.is_float) {
        Lit out;
        out.is_float = true;
        out.f = as_float(l) * as_float(r);
        l = out;
      } else {
        l.i *= r.i;
      }
    }
    return l;
  }

  Lit sum() {
    Lit l = product();
    while (!failed && (at("+") || at("-"))) {
      bool sub = at("-");
      ++pos;
      Lit r = product();
      if (failed) return l;
      if (l.is_bool || r.is_bool) return fail();
      if (l.is_float || r.is_float) {
        Lit out;
        out.is_float = true;
        out.f = sub ? as_float(l) - as_float(r) : as_float(l) + as_float(r);
        l = out;
      } else {
        l.i = sub ? l.i - r.i : l.i + r.i;
      }
    }
    return l;
  }
};

std::optional<ConstValue> evaluate(const std::vector<Token>& toks) {
  Eval ev{toks};
  Lit l = ev.sum();
  if (ev.failed || ev.pos != toks.size()) return std::nullopt;
  if (l.is_bool) return ConstValue{Type::bool_(), l.b};
  if (l.is_float) return ConstValue{Type::float_(), l.f};
  return ConstValue{Type::int_(), l.i};
}

}  // namespace pyeval

Type FnChecker::check_node(PyExpr& n, Expr& e, Env& env) {
  for (const Token& t : n.tokens) {
    if (t.is(TokenKind::Identifier) && env.vars.count(t.text)) {
      report(DiagCategory::PyUsesGuppyVar,
             "`" + t.text + "` is a variable and may not be used inside `py(...)`", t.span);
      return error_expr(e);
    }
  }
  std::string key;
  for (const Token& t : n.tokens) key += t.text;
  if (const ConstValue* cv = c.bindings.lookup(key)) {
    ConstValue copy = *cv;
    e.node = ConstExpr{std::move(copy)};
    return cv->type;
  }
  if (auto cv = pyeval::evaluate(n.tokens)) {
    Type t = cv->type;
    e.node = ConstExpr{std::move(*cv)};
    return t;
  }
  report(DiagCategory::PyBindingMissing,
         "no binding supplied for py expression `" + key + "`", e.span);
  return error_expr(e);
}

void Checker::check_function(FunctionDef& def, const Env*) {
  if (!def.fn_type.is(Type::Kind::Function)) return;  // signature already failed
  FnChecker fc{*this, def, Type::error(), {}, {}, {}};
  fc.run();
}

}  // namespace

CheckResult check_module(Module& m, const ConstBindings& bindings) {
  CheckResult result;
  Checker checker{m, bindings, result.diagnostics, {}};
  checker.run();
  // Join analyses can report the same defect once per incoming path, with
  // cascaded wording; keep the first report per (category, span).
  auto& ds = result.diagnostics;
  auto dup = [](const Diagnostic& a, const Diagnostic& b) {
    return a.category == b.category && a.span.start == b.span.start && a.span.end == b.span.end;
  };
  std::vector<Diagnostic> unique;
  for (auto& d : ds) {
    bool seen = false;
    for (const auto& u : unique) seen = seen || dup(u, d);
    if (!seen) unique.push_back(std::move(d));
  }
  ds = std::move(unique);
  return result;
}

}  // namespace guppy
