#pragma once

#include <optional>
#include <string>
#include <vector>

namespace guppy {

// Semantic type lattice. Tuple holds its element types in `elems`; List
// holds exactly one; Function holds the parameter types followed by the
// result type. Error is the internal poison type used to silence cascades.
class Type {
 public:
  enum class Kind { Bool, Int, Float, None, Tuple, List, Qubit, Function, Error };

  Type() : kind_(Kind::Error) {}
  explicit Type(Kind k) : kind_(k) {}

  static Type bool_() { return Type(Kind::Bool); }
  static Type int_() { return Type(Kind::Int); }
  static Type float_() { return Type(Kind::Float); }
  static Type none() { return Type(Kind::None); }
  static Type qubit() { return Type(Kind::Qubit); }
  static Type error() { return Type(Kind::Error); }
  static Type tuple(std::vector<Type> elems) {
    Type t(Kind::Tuple);
    t.elems_ = std::move(elems);
    return t;
  }
  static Type list(Type elem) {
    Type t(Kind::List);
    t.elems_.push_back(std::move(elem));
    return t;
  }
  static Type function(std::vector<Type> params, Type result) {
    Type t(Kind::Function);
    t.elems_ = std::move(params);
    t.elems_.push_back(std::move(result));
    return t;
  }

  Kind kind() const { return kind_; }
  bool is(Kind k) const { return kind_ == k; }
  bool is_error() const { return kind_ == Kind::Error; }
  bool is_numeric() const {
    return kind_ == Kind::Bool || kind_ == Kind::Int || kind_ == Kind::Float;
  }

  const std::vector<Type>& elems() const { return elems_; }
  const Type& list_elem() const { return elems_[0]; }
  std::vector<Type> fn_params() const {
    return {elems_.begin(), elems_.end() - 1};
  }
  const Type& fn_result() const { return elems_.back(); }

  // Qubit is linear; tuples/lists are linear iff any element is.
  bool is_linear() const;

  bool operator==(const Type& o) const;
  bool operator!=(const Type& o) const { return !(*this == o); }

  // Textual tag, e.g. "int", "list[qubit]", "tuple[int,bool]",
  // "callable[[qubit,float],qubit]". No whitespace.
  std::string tag() const;

 private:
  Kind kind_;
  std::vector<Type> elems_;
};

// Parses a type tag produced by Type::tag() (whitespace is ignored).
// Returns nullopt on malformed input.
std::optional<Type> parse_type_tag(const std::string& text);

}  // namespace guppy
