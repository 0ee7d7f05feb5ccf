#include "guppy/const_value.hpp"

namespace guppy {

namespace {

bool value_matches(const Type& t, const nlohmann::json& v) {
  switch (t.kind()) {
    case Type::Kind::Bool:
      return v.is_boolean();
    case Type::Kind::Int:
      return v.is_number_integer() && !v.is_number_float();
    case Type::Kind::Float:
      return v.is_number();
    case Type::Kind::None:
      return v.is_null();
    case Type::Kind::List: {
      if (!v.is_array()) return false;
      for (const auto& e : v)
        if (!value_matches(t.list_elem(), e)) return false;
      return true;
    }
    case Type::Kind::Tuple: {
      if (!v.is_array() || v.size() != t.elems().size()) return false;
      for (std::size_t i = 0; i < v.size(); ++i)
        if (!value_matches(t.elems()[i], v[i])) return false;
      return true;
    }
    default:
      return false;  // qubit / callable / error cannot be constants
  }
}

}  // namespace

std::optional<ConstValue> typed_literal(const std::string& tag, const nlohmann::json& value) {
  auto t = parse_type_tag(tag);
  if (!t || t->is_linear()) return std::nullopt;
  if (!value_matches(*t, value)) return std::nullopt;
  return ConstValue{*t, value};
}

}  // namespace guppy
