#pragma once

#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "guppy/types.hpp"

namespace guppy {

// A compile-time constant: a literal in the bindings-file shape (bools,
// numbers, nested arrays) together with its semantic type.
struct ConstValue {
  Type type;
  nlohmann::json value;

  bool operator==(const ConstValue& o) const {
    return type == o.type && value == o.value;
  }
};

// Types a tagged literal, e.g. {"type": "list[tuple[int,int]]",
// "value": [[0,1],[1,2]]}. Fails if the value does not match the tag or
// the tag names a non-constant type (qubit, callable).
std::optional<ConstValue> typed_literal(const std::string& tag, const nlohmann::json& value);

}  // namespace guppy
