#pragma once

#include "guppy/ast.hpp"
#include "guppy/ir.hpp"

namespace guppy {

// Structured emits Conditional/TailLoop nodes where control flow permits and
// falls back to a whole-function CFG otherwise; Cfg forces the fallback for
// every function (debugging / equivalence testing).
enum class LoweringMode { Structured, Cfg };

// Lowers a type-checked module into IR. The input must have been accepted by
// check_module; structural impossibilities indicate a compiler bug and throw
// std::logic_error.
Graph lower_module(const Module& m, LoweringMode mode = LoweringMode::Structured);

}  // namespace guppy
