#pragma once

#include <optional>
#include <string>
#include <vector>

#include "guppy/diagnostics.hpp"
#include "guppy/ir.hpp"
#include "guppy/lower.hpp"
#include "guppy/typecheck.hpp"

namespace guppy {

struct CompileResult {
  std::optional<Graph> graph;  // present iff no diagnostics
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return graph.has_value(); }
};

// Full front-to-IR pipeline: tokenize, parse, type check, lower, validate.
// A validation failure on freshly lowered IR is a compiler bug and throws
// std::logic_error.
CompileResult compile_source(const std::string& source, const ConstBindings& bindings,
                             LoweringMode mode = LoweringMode::Structured);

}  // namespace guppy
