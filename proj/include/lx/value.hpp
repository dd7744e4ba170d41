#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lx/types.hpp"

namespace lx {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

// Decimal values are fixed-point integers scaled by 10^19.
inline constexpr int kDecimalDigits = 19;
const BigInt& decimal_scale();
const BigInt& decimal_limit();  // exclusive magnitude bound (2^127)

enum class ValueKind {
    None,
    Bool,
    Nat,
    Int,
    BigNat,
    BigInt,
    Float,
    Decimal,
    Rational,
    String,
    StringOf,
    Typedecl,
    Tuple,
    Record,
    Entity,  // nominal entities and Ok/Err
    List,
    Map,
};

struct ValueRep;

// Immutable runtime value. Compound values carry their static type so that
// runtime type tests are exact (tuples/records are invariant).
class Value {
public:
    Value();  // none

    static Value none();
    static Value boolean(bool b);
    static Value nat(std::uint64_t n);
    static Value int_(std::int64_t n);
    static Value big_nat(BigInt n);
    static Value big_int(BigInt n);
    static Value float_(double d);
    static Value decimal_scaled(BigInt scaled);
    static Value rational(Rational q);
    static Value string(std::string s);
    static Value string_of(std::string validator, std::string s);
    static Value typedecl(std::string name, Value base);
    static Value tuple(Type type, std::vector<Value> elems);
    // `fields` follow the record type's (sorted) field order.
    static Value record(Type type, std::vector<Value> fields);
    // `fields` follow the entity's constructor order.
    static Value entity(Type type, std::vector<Value> fields);
    static Value list(Type type, std::vector<Value> elems);
    // Entries are sorted by key_compare; later duplicates replace earlier ones.
    static Value map(Type type, std::vector<std::pair<Value, Value>> entries);

    ValueKind kind() const;
    bool as_bool() const;
    std::uint64_t as_nat() const;
    std::int64_t as_int() const;
    const BigInt& as_big() const;   // BigNat, BigInt, Decimal (scaled)
    double as_float() const;
    const Rational& as_rational() const;
    const std::string& as_string() const;  // String, StringOf
    const std::string& name() const;       // StringOf validator, Typedecl name
    const Value& base() const;             // Typedecl payload
    const Type& type() const;              // compound values
    const std::vector<Value>& items() const;  // Tuple/Record/Entity/List; Map keys/values interleaved
    std::size_t map_size() const;
    const Value& map_key(std::size_t i) const;
    const Value& map_value(std::size_t i) const;

private:
    explicit Value(std::shared_ptr<const ValueRep> r) : rep_(std::move(r)) {}
    std::shared_ptr<const ValueRep> rep_;
};

Type value_type(const Value& v);
bool value_has_type(const Value& v, const Type& t, const TypeUniverse& u);

// Canonical literal spelling, e.g. `5i`, `"a"`, `Node{size=1n, ...}`.
std::string to_string(const Value& v);

// Total order: none < bool < numerics (by value, then kind rank) < strings
// (by code point) < typedecl (by name, then base) < compounds (structural).
int key_compare(const Value& a, const Value& b);
bool value_equal(const Value& a, const Value& b);
inline bool operator==(const Value& a, const Value& b) { return value_equal(a, b); }

std::string format_float(double d);
std::string format_decimal(const BigInt& scaled);
// Count of Unicode code points in a UTF-8 string.
std::size_t utf8_length(const std::string& s);
std::vector<std::uint32_t> utf8_decode(const std::string& s);
std::string utf8_encode(const std::vector<std::uint32_t>& cps);

}  // namespace lx
