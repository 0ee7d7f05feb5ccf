#include <stdexcept>

#include "guppy/compile.hpp"
#include "guppy/token.hpp"

namespace guppy {

CompileResult compile_source(const std::string& source, const ConstBindings& bindings,
                             LoweringMode mode) {
  CompileResult out;
  TokenizeResult toks = tokenize(source);
  if (!toks.ok()) {
    out.diagnostics = std::move(toks.diagnostics);
    return out;
  }
  ParseResult parsed = parse_module(toks.tokens);
  if (!parsed.ok()) {
    out.diagnostics = std::move(parsed.diagnostics);
    return out;
  }
  CheckResult checked = check_module(parsed.module, bindings);
  if (!checked.ok()) {
    out.diagnostics = std::move(checked.diagnostics);
    return out;
  }
  Graph g = lower_module(parsed.module, mode);
  auto violations = validate(g);
  if (!violations.empty())
    throw std::logic_error("lowering produced invalid IR: rule " +
                           std::to_string(violations.front().rule) + ": " +
                           violations.front().message);
  out.graph = std::move(g);
  return out;
}

}  // namespace guppy
