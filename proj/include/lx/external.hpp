#pragma once

#include <json.hpp>
#include <string>
#include <vector>

#include "lx/types.hpp"
#include "lx/value.hpp"

namespace lx {

// External data format: none as null, Bool as bool, Nat/Int/Float as
// numbers, BigNat/BigInt/Decimal/Rational as strings (numbers accepted),
// strings as strings, typedecls as their base, tuples and lists as arrays,
// records and entities as objects, maps as arrays of [key, value] pairs.
// An entity whose static type is not exactly that entity carries its name
// in a `$type` member; Ok/Err are objects with `$type` and `value`.
//
// Values are built without running any checks. Throws std::invalid_argument
// naming the offending JSON path on shape errors.
Value value_from_json(const nlohmann::json& j, const Type& t, const TypeUniverse& u);
nlohmann::json value_to_json(const Value& v, const Type& t, const TypeUniverse& u);

std::vector<Value> args_from_json(const std::string& text, const std::vector<Type>& params, const TypeUniverse& u);

}  // namespace lx
