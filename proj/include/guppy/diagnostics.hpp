#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace guppy {

// Byte range plus 1-based line/column of its start.
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;
  int line = 1;
  int col = 1;
};

enum class DiagCategory {
  Syntax,
  NotDefined,
  NotDefinitelyAssigned,
  TypeMismatch,
  BranchTypeConflict,
  LinearityCopy,
  LinearityDiscard,
  LinearityConditionalUse,
  SignatureMissing,
  PyBindingMissing,
  PyUsesGuppyVar,
  UnsupportedFeature,
  Arity,
  OverflowLiteral,
};

// Stable machine-readable code for each category.
const char* diag_code(DiagCategory cat);

struct DiagNote {
  Span span;
  std::string text;
};

struct Diagnostic {
  DiagCategory category;
  std::string message;
  Span span;
  std::vector<DiagNote> notes;
};

// `file:line:col: error[CODE]: message` plus one indented line per note.
std::string render_diagnostic(const Diagnostic& d, const std::string& file);

}  // namespace guppy
