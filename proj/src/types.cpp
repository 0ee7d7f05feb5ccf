#include "guppy/types.hpp"

#include <cctype>
#include <sstream>

namespace guppy {

bool Type::is_linear() const {
  switch (kind_) {
    case Kind::Qubit:
      return true;
    case Kind::Tuple:
    case Kind::List:
      for (const auto& e : elems_)
        if (e.is_linear()) return true;
      return false;
    default:
      return false;
  }
}

bool Type::operator==(const Type& o) const {
  if (kind_ != o.kind_) return false;
  if (elems_.size() != o.elems_.size()) return false;
  for (std::size_t i = 0; i < elems_.size(); ++i)
    if (!(elems_[i] == o.elems_[i])) return false;
  return true;
}

std::string Type::tag() const {
  switch (kind_) {
    case Kind::Bool: return "bool";
    case Kind::Int: return "int";
    case Kind::Float: return "float";
    case Kind::None: return "none";
    case Kind::Qubit: return "qubit";
    case Kind::Error: return "<error>";
    case Kind::List: return "list[" + elems_[0].tag() + "]";
    case Kind::Tuple: {
      std::ostringstream out;
      out << "tuple[";
      for (std::size_t i = 0; i < elems_.size(); ++i) {
        if (i) out << ",";
        out << elems_[i].tag();
      }
      out << "]";
      return out.str();
    }
    case Kind::Function: {
      std::ostringstream out;
      out << "callable[[";
      for (std::size_t i = 0; i + 1 < elems_.size(); ++i) {
        if (i) out << ",";
        out << elems_[i].tag();
      }
      out << "]," << elems_.back().tag() << "]";
      return out.str();
    }
  }
  return "<error>";
}

namespace {

struct TagParser {
  const std::string& s;
  std::size_t pos = 0;

  void skip_ws() {
    while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
  }
  bool eat(char c) {
    skip_ws();
    if (pos < s.size() && s[pos] == c) {
      ++pos;
      return true;
    }
    return false;
  }
  std::string word() {
    skip_ws();
    std::size_t start = pos;
    while (pos < s.size() && (std::isalnum(static_cast<unsigned char>(s[pos])) || s[pos] == '_'))
      ++pos;
    return s.substr(start, pos - start);
  }

  std::optional<Type> type() {
    std::string w = word();
    if (w == "bool") return Type::bool_();
    if (w == "int") return Type::int_();
    if (w == "float") return Type::float_();
    if (w == "none" || w == "None") return Type::none();
    if (w == "qubit" || w == "Qubit") return Type::qubit();
    if (w == "list") {
      if (!eat('[')) return std::nullopt;
      auto e = type();
      if (!e || !eat(']')) return std::nullopt;
      return Type::list(*e);
    }
    if (w == "tuple") {
      if (!eat('[')) return std::nullopt;
      std::vector<Type> elems;
      if (!eat(']')) {
        do {
          auto e = type();
          if (!e) return std::nullopt;
          elems.push_back(*e);
        } while (eat(','));
        if (!eat(']')) return std::nullopt;
      }
      return Type::tuple(std::move(elems));
    }
    if (w == "callable") {
      if (!eat('[') || !eat('[')) return std::nullopt;
      std::vector<Type> params;
      if (!eat(']')) {
        do {
          auto e = type();
          if (!e) return std::nullopt;
          params.push_back(*e);
        } while (eat(','));
        if (!eat(']')) return std::nullopt;
      }
      if (!eat(',')) return std::nullopt;
      auto res = type();
      if (!res || !eat(']')) return std::nullopt;
      return Type::function(std::move(params), *res);
    }
    return std::nullopt;
  }
};

}  // namespace

std::optional<Type> parse_type_tag(const std::string& text) {
  TagParser p{text};
  auto t = p.type();
  if (!t) return std::nullopt;
  p.skip_ws();
  if (p.pos != text.size()) return std::nullopt;
  return t;
}

}  // namespace guppy
