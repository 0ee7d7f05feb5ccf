#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "guppy/ast.hpp"
#include "guppy/const_value.hpp"
#include "guppy/diagnostics.hpp"
#include "guppy/types.hpp"

namespace guppy {

// Compile-time constants injected into py(...) expressions, keyed by the
// whitespace-stripped expression text.
struct ConstBindings {
  std::map<std::string, ConstValue> entries;

  const ConstValue* lookup(const std::string& normalized_key) const {
    auto it = entries.find(normalized_key);
    return it == entries.end() ? nullptr : &it->second;
  }
};

// Loads a bindings JSON document; returns nullopt and sets `error` on
// malformed documents or untypeable literals.
std::optional<ConstBindings> parse_bindings(const std::string& json_text, std::string& error);

struct CheckResult {
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return diagnostics.empty(); }
};

// Type checks the module in place, annotating every expression with its type,
// resolving name bindings, inserting coercion nodes, and replacing py(...)
// expressions with typed constants.
CheckResult check_module(Module& m, const ConstBindings& bindings);

// Two control paths join only when the variable has the identical type on
// both; there is no join-point coercion.
std::optional<Type> join_types(const Type& a, const Type& b);

struct OperatorResolution {
  Type result;
  bool coerce_lhs = false;  // operand must be coerced to `operand_type`
  bool coerce_rhs = false;
  Type operand_type;
};

std::optional<OperatorResolution> resolve_binary(BinOpKind op, const Type& lhs, const Type& rhs);
std::optional<OperatorResolution> resolve_compare(CmpOpKind op, const Type& lhs, const Type& rhs);

// Signature of a quantum builtin, or nullptr for unknown names.
struct BuiltinGate {
  const char* name;
  int num_qubits;       // qubit inputs
  bool angle_param;     // trailing float parameter (rz)
  enum class Result { SameQubits, Bool, None } result;
};
const BuiltinGate* builtin_gate(const std::string& name);

// Type of a builtin used as a first-class function value (gates only).
std::optional<Type> builtin_function_type(const std::string& name);

}  // namespace guppy
