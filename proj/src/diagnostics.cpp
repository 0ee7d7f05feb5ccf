#include "guppy/diagnostics.hpp"

#include <sstream>

namespace guppy {

const char* diag_code(DiagCategory cat) {
  switch (cat) {
    case DiagCategory::Syntax: return "SYN001";
    case DiagCategory::NotDefined: return "DEF001";
    case DiagCategory::NotDefinitelyAssigned: return "DEF002";
    case DiagCategory::TypeMismatch: return "TYP001";
    case DiagCategory::BranchTypeConflict: return "TYP002";
    case DiagCategory::SignatureMissing: return "TYP003";
    case DiagCategory::UnsupportedFeature: return "TYP004";
    case DiagCategory::LinearityCopy: return "LIN001";
    case DiagCategory::LinearityDiscard: return "LIN002";
    case DiagCategory::LinearityConditionalUse: return "LIN003";
    case DiagCategory::PyUsesGuppyVar: return "PY001";
    case DiagCategory::PyBindingMissing: return "PY002";
    case DiagCategory::Arity: return "ARI001";
    case DiagCategory::OverflowLiteral: return "OVF001";
  }
  return "UNK000";
}

std::string render_diagnostic(const Diagnostic& d, const std::string& file) {
  std::ostringstream out;
  out << file << ":" << d.span.line << ":" << d.span.col << ": error[" << diag_code(d.category)
      << "]: " << d.message;
  for (const auto& note : d.notes) {
    out << "\n" << file << ":" << note.span.line << ":" << note.span.col
        << ": note: " << note.text;
  }
  return out.str();
}

}  // namespace guppy
