#include <doctest.h>

#include <set>

#include "lx/check.hpp"
#include "lx/eval.hpp"
#include "lx/gen.hpp"
#include "lx/lower.hpp"
#include "lx/regex.hpp"
#include "test_support.hpp"

using namespace lx;

TEST_CASE("enumeration counts") {
    TypeUniverse u;
    EnumDomain d;
    CHECK(enumerate_values(Type::boolean(), u, d).size() == 2);
    CHECK(enumerate_values(Type::int_(), u, d).size() == 3);
    // 1 + 3 + 9 lists of length <= 2 over three ints.
    CHECK(enumerate_values(Type::list(Type::int_()), u, d).size() == 13);
    CHECK(enumerate_values(Type::tuple({Type::boolean(), Type::nat()}), u, d).size() == 4);
    CHECK(enumerate_values(Type::union_of({Type::none(), Type::boolean()}), u, d).size() == 3);
    // Maps over 2 Bool keys, size <= 2, values in {0n, 1n}: 1 + 2*2 + 4.
    CHECK(enumerate_values(Type::map(Type::boolean(), Type::nat()), u, d).size() == 9);
    d.max_list = 5;
    CHECK_THROWS_AS(enumerate_values(Type::list(Type::int_()), u, d, 100), std::length_error);
}

TEST_CASE("enumerated values are distinct and well typed") {
    Diagnostics diag;
    auto cp = check_source(read_fixture("programs/itree.lx"), "itree.lx", diag);
    auto p = lower_program(cp);
    EnumDomain d;
    d.max_depth = 1;
    auto vs = enumerate_values(Type::nominal("ITree"), p.universe, d);
    // Nil and Leaf: 2 + 6 at any depth; a root Node has 6 * 8 * 8 choices.
    CHECK(vs.size() == 8 + 384);
    std::set<std::string> seen;
    for (const auto& v : vs) {
        CHECK(value_has_type(v, Type::nominal("ITree"), p.universe));
        seen.insert(to_string(v));
    }
    CHECK(seen.size() == vs.size());
}

TEST_CASE("regex generation produces matching strings") {
    std::mt19937_64 rng(7);
    for (const char* src : {"[0-9]{5}(-[0-9]{4})?", "[a-z][a-z0-9_]*", "(ab|c)+x?", "[^a-c]{2}", ".*"}) {
        auto re = Regex::parse(src);
        REQUIRE(re);
        CHECK(re->full_match(regex_minimal_string(src)));
        for (int i = 0; i < 50; ++i) CHECK(re->full_match(regex_random_string(src, rng)));
    }
    CHECK(regex_minimal_string("[0-9]{5}(-[0-9]{4})?") == "00000");
}

TEST_CASE("random values are well typed and reproducible") {
    Diagnostics diag;
    auto cp = check_source(read_fixture("programs/trading.lx"), "trading.lx", diag);
    auto p = lower_program(cp);
    Type t = Type::nominal("SaleInfo");
    std::mt19937_64 a(42), b(42);
    for (int i = 0; i < 100; ++i) {
        Value x = random_value(t, a, p.universe);
        CHECK(value_has_type(x, t, p.universe));
        CHECK(to_string(x) == to_string(random_value(t, b, p.universe)));
    }
}

TEST_CASE("cartesian product is in odometer order") {
    auto rows = cartesian({{Value::int_(1), Value::int_(2)}, {Value::boolean(false), Value::boolean(true)}});
    REQUIRE(rows.size() == 4);
    CHECK(to_string(rows[1][0]) == "1i");
    CHECK(to_string(rows[1][1]) == "true");
    CHECK(to_string(rows[2][0]) == "2i");
    CHECK(cartesian({}).size() == 1);
    CHECK(cartesian({{}, {Value::int_(1)}}).empty());
}
