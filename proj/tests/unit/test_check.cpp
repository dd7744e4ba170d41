#include <doctest.h>

#include "lx/check.hpp"
#include "test_support.hpp"

using namespace lx;

namespace {

// Returns all diagnostics (errors and warnings) for a source text.
std::string diags_of(const std::string& src) {
    Diagnostics d;
    try {
        check_source(src, "t.lx", d);
    } catch (const CompileError& e) {
        return e.diagnostics().str();
    }
    return d.str();
}

bool has(const std::string& hay, const std::string& needle) { return hay.find(needle) != std::string::npos; }

CheckedProgram checked(const std::string& rel) {
    Diagnostics d;
    return check_source(read_fixture(rel), rel, d);
}

}  // namespace

TEST_CASE("fixture programs typecheck") {
    for (const char* f : {"programs/itree.lx", "programs/greetings.lx", "programs/counter.lx", "programs/abs.lx",
                          "programs/zipcode.lx", "programs/maxpair.lx", "programs/trading.lx",
                          "programs/trading_fixed.lx"}) {
        INFO(f);
        Diagnostics d;
        std::string text;
        try {
            check_source(read_fixture(f), f, d);
        } catch (const CompileError& e) {
            text = e.diagnostics().str();
        }
        CHECK(text == "");
    }
}

TEST_CASE("greetings subtyping") {
    auto p = checked("programs/greetings.lx");
    const auto& u = p.universe;
    auto named = Type::nominal("NamedGreeting");
    auto generic = Type::nominal("GenericGreeting");
    CHECK(subtype(named, Type::nominal("WithName"), u));
    CHECK(subtype(named, Type::nominal("Greeting"), u));
    CHECK(subtype(generic, Type::nominal("Greeting"), u));
    CHECK_FALSE(subtype(generic, Type::nominal("WithName"), u));
    // greet dispatches over both implementations
    CHECK(p.dispatchers.count("Greeting::sayHello$dispatch") == 1);
}

TEST_CASE("datatype cases inherit the using fields") {
    auto p = checked("programs/itree.lx");
    for (const char* c : {"Nil", "Leaf", "Node"}) {
        INFO(c);
        const auto* info = p.universe.nominal(c);
        REQUIRE(info);
        REQUIRE(!info->fields.empty());
        CHECK(info->fields[0].name == "size");
        CHECK(p.universe.is_entity(c));
    }
    CHECK(p.universe.nominal("ITree")->is_concept);
    CHECK(p.functions.at("ITree::has").is_recursive);
    CHECK(p.functions.at("ITree::isEmpty").result == Type::boolean());
}

TEST_CASE("removing the recursive call tag is an error") {
    auto src = read_fixture("programs/itree.lx");
    auto pos = src.find("has[recursive](x)");
    REQUIRE(pos != std::string::npos);
    src.replace(pos, std::string("has[recursive](x)").size(), "has(x)");
    CHECK(has(diags_of(src), "needs the [recursive] tag"));
}

TEST_CASE("recursion without the declaration flag is an error") {
    auto d = diags_of("function f(x: Nat): Nat { if (x == 0n) { return 0n; } return f[recursive](x - 1n); }");
    CHECK(has(d, "not declared recursive"));
}

TEST_CASE("superfluous recursive tag is a warning") {
    auto d = diags_of("function g(): Nat { return 1n; }\nfunction f(): Nat { return g[recursive](); }");
    CHECK(has(d, "warning"));
    CHECK_FALSE(has(d, "error"));
}

TEST_CASE("mutual recursion needs flags on both sides") {
    auto ok = diags_of(
        "recursive function even(n: Nat): Bool { if (n == 0n) { return true; } return odd[recursive](n - 1n); }\n"
        "recursive function odd(n: Nat): Bool { if (n == 0n) { return false; } return even[recursive](n - 1n); }");
    CHECK(ok == "");
    auto bad = diags_of(
        "recursive function even(n: Nat): Bool { if (n == 0n) { return true; } return odd[recursive](n - 1n); }\n"
        "function odd(n: Nat): Bool { if (n == 0n) { return false; } return even[recursive](n - 1n); }");
    CHECK(has(bad, "odd is part of a call cycle"));
}

TEST_CASE("typedecl values do not unify with their base") {
    auto src = std::string(
        "typedecl ZipcodeValidator = /[0-9]{5}(-[0-9]{4})?/;\n"
        "typedecl Zipcode = StringOf<ZipcodeValidator>;\n"
        "function isNYZipcode(zc: Zipcode): Bool { return false; }\n");
    CHECK(diags_of(src + "let a = isNYZipcode(\"40502\"Zipcode);") == "");
    CHECK(has(diags_of(src + "let a = isNYZipcode(\"40502\");"), "argument is String, expected Zipcode"));
    CHECK(has(diags_of(src + "let a = \"ABC\"Zipcode;"), "is not a valid Zipcode"));
}

TEST_CASE("typedecl arithmetic needs the same typedecl") {
    auto src = std::string("typedecl Celsius = Float;\ntypedecl Fahrenheit = Float;\n");
    CHECK(diags_of(src + "let t = 10_Celsius + 1_Celsius;") == "");
    CHECK(has(diags_of(src + "let t = 10_Celsius + 1_Fahrenheit;"), "same type"));
    CHECK(has(diags_of(src + "let t = 10_Celsius + 1.0f;"), "same type"));
}

TEST_CASE("explicit narrowing") {
    auto before = diags_of("function f(x: Nat?): Nat { let e = x + 2n; return e; }");
    CHECK(has(before, "requires numeric operands"));
    auto after = diags_of("function f(x: Nat?): Nat { x@<Nat>; let y = x + 2n; return y; }");
    CHECK(after == "");
    auto early = diags_of("function f(x: Nat|Int): Nat|Int|None { x @@ <Nat>; return x + 2n; }");
    CHECK(early == "");
}

TEST_CASE("if none binds the remaining type in else") {
    auto d = diags_of("function f(x: Nat?): Nat { if none (x) { return 0n; } else { return $ + 10n; } }");
    CHECK(d == "");
}

TEST_CASE("trivial flow tests are errors") {
    CHECK(has(diags_of("function f(x: Int): Bool { return x?<Int>; }"), "always succeeds"));
    CHECK(has(diags_of("function f(x: Int): Bool { return x?<Nat>; }"), "can never succeed"));
}

TEST_CASE("lambda restrictions") {
    CHECK(diags_of("function f(l: List<Int>): Bool { return l.allOf(pred(x) => x >= 0i); }") == "");
    CHECK(diags_of("function f(l: List<Int>): List<Int> { return l.map<Int>(fn(x) => x + 1i); }") == "");
    CHECK(has(diags_of("function f(): Int { let f = fn(x) => x; return 1i; }"), "lambda stored in local"));
    CHECK(has(diags_of("function f(): Int { return fn(x) => x; }"), "lambda returned"));
    CHECK(has(diags_of("function g(x: Int): Int { return x; }\nfunction f(): Int { return g(fn(x) => x); }"),
              "lambda passed to a non-functor call"));
    CHECK(has(diags_of("function f(l: List<Int>): Bool { return l.allOf(pred(x) => x + 1i); }"), "pred body"));
}

TEST_CASE("equality needs key types") {
    CHECK(has(diags_of("function f(a: List<Int>, b: List<Int>): Bool { return a == b; }"), "key types"));
    CHECK(has(diags_of("function f(a: Float, b: Float): Bool { return a == b; }"), "key types"));
    CHECK(diags_of("function f(a: Int, b: Int): Bool { return a == b; }") == "");
}

TEST_CASE("definite assignment") {
    CHECK(has(diags_of("function f(b: Bool): Int { var x: Int; if (b) { x = 1i; } return x; }"),
              "may be read before assignment"));
    CHECK(diags_of("function f(b: Bool): Int { var x: Int; if (b) { x = 1i; } else { x = 2i; } return x; }") == "");
}

TEST_CASE("literal typing") {
    CHECK(has(diags_of("let x = 5;"), "needs a type suffix"));
    CHECK(diags_of("let x: Int = 5;") == "");
    CHECK(has(diags_of("let x: Nat = 18446744073709551616;"), "out of range"));
    CHECK(diags_of("let x: Nat = 18446744073709551615;") == "");
}

TEST_CASE("misc checker errors") {
    CHECK(has(diags_of("function f(): Int { return 1i; return 2i; }"), "unreachable statement"));
    CHECK(has(diags_of("function f(b: Bool): Int { if (b) { return 1i; } }"), "missing return"));
    CHECK(has(diags_of("function f(x: Int): Int { let x = 1i; return x; }"), "duplicate binding"));
    CHECK(has(diags_of("function f(x: Int): Int { x + 1i; return x; }"), "no effect"));
    CHECK(has(diags_of("concept C { field a: Int; }\nlet c = C{1i};"), "cannot be constructed"));
    CHECK(has(diags_of("entity A provides B {}\nentity B provides A {}"), "provide"));
}

TEST_CASE("ref calls") {
    auto p = checked("programs/counter.lx");
    CHECK(p.functions.at("Counter::generateNextID").is_ref);
    auto d = diags_of(read_fixture("programs/counter.lx") + "\nlet id3 = ctr.generateNextID();");
    CHECK(has(d, "must be tagged ref"));
    auto d2 = diags_of(read_fixture("programs/counter.lx") + "\nlet c2 = Counter::create();\nlet id4 = ref c2.generateNextID();");
    CHECK(has(d2, "var-bound"));
}

TEST_CASE("examples are checked against the signature") {
    CHECK(checked("programs/maxpair.lx").functions.at("maxPair").deferred);
    auto d = diags_of("function f(x: Int): Int examples [ [1i] => \"a\" ]; { return x; }");
    CHECK(has(d, "example value"));
}

TEST_CASE("canonical type strings parse back") {
    auto p = checked("programs/trading.lx");
    for (std::string s : {"Int", "Int|None", "[Int,String]", "{a:Int,b:Bool}", "List<SaleOrder>", "Map<Int,Nat>",
                          "None|SaleInfo", "StringOf<ValidID>"}) {
        INFO(s);
        auto t = parse_type_string(s, p.universe);
        REQUIRE(t);
        CHECK(t->str() == s);
    }
}
