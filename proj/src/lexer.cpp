#include <cctype>

#include "guppy/token.hpp"

namespace guppy {

namespace {

const char* kKeywords[] = {"def",   "return", "if",  "elif", "else", "while", "for",
                           "in",    "break",  "continue", "and", "or", "not"};

bool is_keyword(const std::string& s) {
  for (const char* k : kKeywords)
    if (s == k) return true;
  return false;
}

// Multi-character operators, longest first.
const char* kOps[] = {"//", "<<", ">>", "->", "==", "!=", "<=", ">=", "+=", "-=",
                      "*=", "/=", "+",  "-",  "*",  "/",  "%",  "<",  ">",  "=",
                      "&",  "|",  "^"};

struct Lexer {
  const std::string& src;
  std::size_t pos = 0;
  int line = 1;
  int col = 1;
  int bracket_depth = 0;
  bool at_line_start = true;
  std::vector<int> indents{0};
  TokenizeResult result;

  explicit Lexer(const std::string& s) : src(s) {}

  char peek(std::size_t ahead = 0) const {
    return pos + ahead < src.size() ? src[pos + ahead] : '\0';
  }
  void advance() {
    if (src[pos] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
    ++pos;
  }

  Span span_here(std::size_t len) const {
    return Span{pos, pos + len, line, col};
  }

  bool last_sig_colon = false;

  void push(TokenKind kind, std::string text, Span sp) {
    if (kind != TokenKind::Newline && kind != TokenKind::Indent && kind != TokenKind::Dedent &&
        kind != TokenKind::Eof) {
      last_sig_colon = (kind == TokenKind::Delim && text == ":");
    }
    result.tokens.push_back(Token{kind, std::move(text), sp});
  }

  void error(const std::string& msg, Span sp) {
    result.diagnostics.push_back(Diagnostic{DiagCategory::Syntax, msg, sp, {}});
  }

  // Consumes leading whitespace of a logical line and emits indent/dedent.
  // Returns false if the line is blank or comment-only (and consumes it).
  bool handle_indent() {
    std::size_t start = pos;
    int width = 0;
    Span sp = span_here(0);
    while (peek() == ' ' || peek() == '\t') {
      if (peek() == '\t') {
        error("tab in leading whitespace", span_here(1));
        while (peek() != '\n' && peek() != '\0') advance();
        if (peek() == '\n') advance();
        return false;
      }
      ++width;
      advance();
    }
    if (peek() == '\n' || peek() == '#' || peek() == '\0') {
      // blank or comment-only line
      while (peek() != '\n' && peek() != '\0') advance();
      if (peek() == '\n') advance();
      return false;
    }
    sp.end = start + static_cast<std::size_t>(width);
    if (width > indents.back()) {
      if (!last_sig_colon && !result.tokens.empty()) {
        error("inconsistent indentation: unexpected indent", Span{sp.start, sp.end, sp.line, 1});
      }
      indents.push_back(width);
      push(TokenKind::Indent, "", Span{sp.start, sp.start, sp.line, 1});
    } else {
      while (width < indents.back()) {
        indents.pop_back();
        push(TokenKind::Dedent, "", Span{sp.start, sp.start, sp.line, 1});
      }
      if (width != indents.back()) {
        error("inconsistent indentation", Span{sp.start, sp.end, sp.line, 1});
        indents.push_back(width);  // resync so later lines still lex
      }
    }
    return true;
  }

  void lex_number() {
    Span sp = span_here(0);
    std::size_t start = pos;
    bool is_float = false;
    while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    if (peek() == '.' && std::isdigit(static_cast<unsigned char>(peek(1)))) {
      is_float = true;
      advance();
      while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
    }
    if (peek() == 'e' || peek() == 'E') {
      std::size_t save = pos;
      int save_line = line, save_col = col;
      advance();
      if (peek() == '+' || peek() == '-') advance();
      if (std::isdigit(static_cast<unsigned char>(peek()))) {
        is_float = true;
        while (std::isdigit(static_cast<unsigned char>(peek()))) advance();
      } else {
        pos = save;
        line = save_line;
        col = save_col;
      }
    }
    sp.end = pos;
    push(is_float ? TokenKind::FloatLit : TokenKind::IntLit, src.substr(start, pos - start), sp);
  }

  void lex_word() {
    Span sp = span_here(0);
    std::size_t start = pos;
    while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_') advance();
    sp.end = pos;
    std::string text = src.substr(start, pos - start);
    if (text == "True" || text == "False") {
      push(TokenKind::BoolLit, text, sp);
    } else if (text == "None") {
      push(TokenKind::NoneLit, text, sp);
    } else if (is_keyword(text)) {
      push(TokenKind::Keyword, text, sp);
    } else {
      push(TokenKind::Identifier, text, sp);
    }
  }

  void run() {
    while (pos < src.size()) {
      if (at_line_start && bracket_depth == 0) {
        if (!handle_indent()) continue;
        at_line_start = false;
        continue;
      }
      char c = peek();
      if (c == '\n') {
        advance();
        if (bracket_depth == 0) {
          // avoid double newlines (e.g. after a dedent-only line)
          push(TokenKind::Newline, "\n", Span{pos - 1, pos, line - 1, col});
          at_line_start = true;
        }
        continue;
      }
      if (c == ' ' || c == '\t' || c == '\r') {
        advance();
        continue;
      }
      if (c == '#') {
        while (peek() != '\n' && peek() != '\0') advance();
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c))) {
        lex_number();
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        lex_word();
        continue;
      }
      if (c == '(' || c == '[') {
        ++bracket_depth;
        push(TokenKind::Delim, std::string(1, c), span_here(1));
        advance();
        continue;
      }
      if (c == ')' || c == ']') {
        if (bracket_depth > 0) --bracket_depth;
        push(TokenKind::Delim, std::string(1, c), span_here(1));
        advance();
        continue;
      }
      if (c == ',' || c == ':' || c == '.' || c == '@') {
        push(TokenKind::Delim, std::string(1, c), span_here(1));
        advance();
        continue;
      }
      bool matched = false;
      for (const char* op : kOps) {
        std::size_t len = std::string(op).size();
        if (src.compare(pos, len, op) == 0) {
          push(TokenKind::Op, op, span_here(len));
          for (std::size_t i = 0; i < len; ++i) advance();
          matched = true;
          break;
        }
      }
      if (matched) continue;
      error(std::string("illegal character '") + c + "'", span_here(1));
      advance();
    }
    // close the final logical line and any open blocks
    if (!result.tokens.empty() && !at_line_start &&
        result.tokens.back().kind != TokenKind::Newline) {
      push(TokenKind::Newline, "\n", Span{pos, pos, line, col});
    }
    while (indents.back() > 0) {
      indents.pop_back();
      push(TokenKind::Dedent, "", Span{pos, pos, line, 1});
    }
    push(TokenKind::Eof, "", Span{pos, pos, line, col});
  }
};

}  // namespace

TokenizeResult tokenize(const std::string& source) {
  Lexer lex(source);
  lex.run();
  return lex.result;
}

}  // namespace guppy
