#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lx/types.hpp"
#include "lx/value.hpp"

namespace lx {

struct GenOptions {
    std::int64_t magnitude = 100;  // typical |n| for numbers; edge values are mixed in
    int max_list = 4;
    int max_string = 6;
    int max_map = 3;
    int max_depth = 4;  // nesting of nominal values
};

// A random value of `t`. No invariants are run: typedecls and entities may
// violate their checks, and callers filter when they need valid values.
Value random_value(const Type& t, std::mt19937_64& rng, const TypeUniverse& u, const GenOptions& o = {});

struct EnumDomain {
    std::vector<std::int64_t> ints{-1, 0, 1};
    std::vector<std::uint64_t> nats{0, 1};
    std::vector<double> floats{0.0, 1.5};
    std::vector<std::string> strings{"", "a"};
    int max_list = 2;
    int max_map = 2;
    int max_depth = 2;
};

// Every value of `t` over the domain, in a fixed order. Throws
// std::length_error past `cap` values.
std::vector<Value> enumerate_values(const Type& t, const TypeUniverse& u, const EnumDomain& d, std::size_t cap = 200000);

// Cartesian product of per-parameter value lists, in odometer order.
std::vector<std::vector<Value>> cartesian(const std::vector<std::vector<Value>>& columns, std::size_t cap = 200000);

// Shortest string accepted by a validator regex, choosing the first
// alternative and the lowest character of each class.
std::string regex_minimal_string(const std::string& regex_source);
std::string regex_random_string(const std::string& regex_source, std::mt19937_64& rng);

}  // namespace lx
