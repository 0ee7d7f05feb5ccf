#pragma once

#include <string>
#include <vector>

#include "guppy/diagnostics.hpp"

namespace guppy {

enum class TokenKind {
  Keyword,
  Identifier,
  IntLit,
  FloatLit,
  BoolLit,
  NoneLit,
  Op,
  Delim,
  Newline,
  Indent,
  Dedent,
  Eof,
};

struct Token {
  TokenKind kind;
  std::string text;
  Span span;

  bool is(TokenKind k) const { return kind == k; }
  bool is(TokenKind k, const char* t) const { return kind == k && text == t; }
};

struct TokenizeResult {
  std::vector<Token> tokens;
  std::vector<Diagnostic> diagnostics;
  bool ok() const { return diagnostics.empty(); }
};

// Significant-indentation tokenizer. Blank lines and `#` comments are
// skipped; newlines inside brackets are not significant; tabs in leading
// whitespace are rejected.
TokenizeResult tokenize(const std::string& source);

}  // namespace guppy
