#include <doctest.h>

#include <climits>

#include "lx/check.hpp"
#include "lx/eval.hpp"
#include "lx/lower.hpp"
#include "lx/parser.hpp"
#include "test_support.hpp"

using namespace lx;

namespace {

IrProgram lower_text(const std::string& src, const LowerOptions& o = {}) {
    Diagnostics d;
    auto cp = check_source(src, "t.lx", d);
    return lower_program(cp, o);
}

IrProgram lower_fixture(const std::string& rel) {
    Diagnostics d;
    auto cp = check_source(read_fixture(rel), rel, d);
    return lower_program(cp);
}

std::string violations(const IrProgram& p) {
    std::string out;
    for (const auto& v : validate_ir(p)) out += v.function + ":" + v.path + ": " + v.rule + "\n";
    return out;
}

std::size_t count_named(const IrProgram& p, const std::string& part) {
    std::size_t n = 0;
    for (const auto& [name, _] : p.functions) {
        if (name.find(part) != std::string::npos) ++n;
    }
    return n;
}

IrPtr parse_expr_ir(const std::string& fn_src) {
    // Reads back a single-function program's body.
    auto p = lower_text(fn_src);
    return p.functions.begin()->second.body;
}

}  // namespace

TEST_CASE("fixtures lower to valid IR that round-trips") {
    for (const char* f : {"programs/itree.lx", "programs/greetings.lx", "programs/counter.lx", "programs/abs.lx",
                          "programs/zipcode.lx", "programs/maxpair.lx", "programs/trading.lx",
                          "programs/trading_fixed.lx"}) {
        INFO(f);
        auto p = lower_fixture(f);
        CHECK(violations(p) == "");
        auto text = serialize_ir(p);
        auto back = parse_ir(text, p.universe);
        CHECK(ir_equal(p, back));
        CHECK(serialize_ir(back) == text);
    }
}

TEST_CASE("abs lowers to a single conditional") {
    auto p = lower_fixture("programs/abs.lx");
    const auto& body = *p.functions.at("abs").body;
    CHECK(ir_pretty(body) == "let y = x in if y < 0i then -y else y");
    Outcome o = evaluate(p, "abs", {Value::int_(-5)});
    REQUIRE(o.ok());
    CHECK(to_string(*o.value) == "5i");
    Outcome m = evaluate(p, "abs", {Value::int_(INT64_MIN)});
    REQUIRE(m.error);
    CHECK(m.error->code == ErrorCode::Overflow);
    CHECK(m.error->site.rfind("abs:b", 0) == 0);
}

TEST_CASE("alpha equality ignores binder names") {
    auto a = parse_expr_ir("function f(x: Int): Int { let a = x + 1i; return a * 2i; }");
    auto b = parse_expr_ir("function f(x: Int): Int { let b = x + 1i; return b * 2i; }");
    auto c = parse_expr_ir("function f(x: Int): Int { let b = x + 1i; return x * 2i; }");
    CHECK(ir_alpha_equal(*a, *b));
    CHECK_FALSE(ir_alpha_equal(*a, *c));
}

TEST_CASE("counter threads the receiver through ref calls") {
    auto p = lower_fixture("programs/counter.lx");
    CHECK(p.functions.at("Counter::generateNextID").result.str() == "[Counter,Nat]");
    Outcome o = evaluate(p, "main", {});
    REQUIRE(o.ok());
    CHECK(to_string(*o.value) == "{ctr=Counter{2n}, id1=0n, id2=1n}");
}

TEST_CASE("itree membership and invariants") {
    auto p = lower_fixture("programs/itree.lx");
    auto leaf = [](std::int64_t v) { return Value::entity(Type::nominal("Leaf"), {Value::nat(1), Value::int_(v)}); };
    auto nil = Value::entity(Type::nominal("Nil"), {Value::nat(0)});
    auto node = Value::entity(Type::nominal("Node"), {Value::nat(3), Value::int_(5), leaf(2), leaf(8)});
    auto has = [&](const Value& t, std::int64_t x) {
        auto o = evaluate(p, "ITree::has", {t, Value::int_(x)});
        REQUIRE(o.ok());
        return o.value->as_bool();
    };
    CHECK(has(node, 8));
    CHECK(has(node, 2));
    CHECK(has(node, 5));
    CHECK_FALSE(has(node, 3));
    CHECK_FALSE(has(nil, 3));
    auto bad = construct_checked(p, "Node", {Value::nat(7), Value::int_(5), leaf(2), leaf(8)});
    REQUIRE(bad.error);
    CHECK(bad.error->code == ErrorCode::InvariantFail);
    auto good = construct_checked(p, "Node", {Value::nat(3), Value::int_(5), leaf(2), leaf(8)});
    CHECK(good.ok());
}

TEST_CASE("concept calls dispatch on the entity") {
    auto p = lower_fixture("programs/greetings.lx");
    auto named = Value::entity(Type::nominal("NamedGreeting"), {Value::string("bob")});
    auto generic = Value::entity(Type::nominal("GenericGreeting"), {});
    CHECK(to_string(*evaluate(p, "greet", {named}).value) == "\"hello bob\"");
    CHECK(to_string(*evaluate(p, "greet", {generic}).value) == "\"hello world\"");
}

TEST_CASE("typedecls and validators at runtime") {
    auto p = lower_fixture("programs/zipcode.lx");
    Outcome o = evaluate(p, "main", {});
    REQUIRE(o.ok());
    CHECK(to_string(*o.value).find("a=false") != std::string::npos);
    CHECK(eval_string_validator(p.universe, "ZipcodeValidator", "40502-1234"));
    CHECK_FALSE(eval_string_validator(p.universe, "ZipcodeValidator", "4050"));
}

TEST_CASE("join points: phi, duplication and continuations") {
    // Both paths rejoin without exits: one merged binding.
    auto phi = lower_text(
        "function f(b: Bool, x: Int): Int { var y: Int; if (b) { y = x; } else { y = 0i; } return y + 1i; }");
    CHECK(ir_pretty(*phi.functions.at("f").body) == "let y = if b then x else 0i in y + 1i");
    CHECK(count_named(phi, "$k$") == 0);

    // Early return on one path, two paths reach a large rest: continuation.
    const char* big =
        "function f(a: Int, b: Int): Int {\n"
        "  var y = 0i;\n"
        "  if (a < 0i) { return 0i; } elif (a == 0i) { y = b; } else { y = a; }\n"
        "  let z = y * y + y * 2i + b * b + a;\n"
        "  return z * z + y;\n"
        "}";
    auto cont = lower_text(big);
    CHECK(count_named(cont, "f$k$") == 1);
    CHECK(violations(cont) == "");
    auto dup = lower_text(big, LowerOptions{1000});
    CHECK(count_named(dup, "f$k$") == 0);
    for (std::int64_t a : {-3, 0, 4}) {
        for (std::int64_t b : {-2, 5}) {
            auto x = evaluate(cont, "f", {Value::int_(a), Value::int_(b)});
            auto y = evaluate(dup, "f", {Value::int_(a), Value::int_(b)});
            CHECK(outcome_key(x) == outcome_key(y));
        }
    }
}

TEST_CASE("flow operators lower to tests and early returns") {
    auto p = lower_text(
        "function f(x: Nat|Int): Nat|Int|None { x @@ <Nat>; return x + 2n; }\n"
        "function g(x: Nat?): Nat { if none (x) { return 0n; } else { return $ + 10n; } }\n"
        "function h(x: Int?): Int? { let y = x ?? !none; return y + 1i; }\n"
        "function c(x: Nat|Int): Nat { return x@<Nat>; }");
    CHECK(violations(p) == "");
    CHECK(to_string(*evaluate(p, "f", {Value::nat(3)}).value) == "5n");
    CHECK(to_string(*evaluate(p, "f", {Value::int_(-3)}).value) == "-3i");
    CHECK(to_string(*evaluate(p, "g", {Value::none()}).value) == "0n");
    CHECK(to_string(*evaluate(p, "g", {Value::nat(1)}).value) == "11n");
    CHECK(to_string(*evaluate(p, "h", {Value::none()}).value) == "none");
    CHECK(to_string(*evaluate(p, "h", {Value::int_(1)}).value) == "2i");
    auto bad = evaluate(p, "c", {Value::int_(1)});
    REQUIRE(bad.error);
    CHECK(bad.error->code == ErrorCode::CastFail);
}

TEST_CASE("lambdas become specialization functions with captures") {
    auto p = lower_text(
        "function f(l: List<Int>, k: Int): List<Int> { return l.map<Int>(fn(x) => x + k).filter(pred(x) => x > k); }");
    CHECK(violations(p) == "");
    CHECK(count_named(p, "f$lam$") == 2);
    CHECK(p.functions.at("f$lam$0").params.size() == 2);
    auto l = Value::list(Type::list(Type::int_()), {Value::int_(1), Value::int_(-1), Value::int_(3)});
    CHECK(to_string(*evaluate(p, "f", {l, Value::int_(1)}).value) == "List<Int>{2i, 4i}");
}

TEST_CASE("lowering leaves the surface tree alone") {
    Diagnostics d;
    auto src = read_fixture("programs/itree.lx");
    auto prog = parse_source(src, "itree.lx");
    auto cp = check_program(prog, d);
    auto before = dump(prog);
    lower_program(cp);
    CHECK(dump(prog) == before);
}

TEST_CASE("validator rejects malformed IR") {
    auto p = lower_fixture("programs/abs.lx");
    auto& f = p.functions.at("abs");
    auto dup = ir_let("x", ir_const(Value::int_(1), Type::int_(), {}), f.body);
    f.body = dup;
    finalize_paths(p);
    CHECK(violations(p).find("abs") != std::string::npos);
    auto q = lower_fixture("programs/abs.lx");
    auto& g = q.functions.at("abs");
    auto lst = ir_node(IrKind::List, Type::list(Type::int_()), {}, {});
    g.body = ir_ite(ir_node(IrKind::Eq, Type::boolean(), {}, {lst, ir_clone(lst)}), ir_var("x", Type::int_(), {}),
                    ir_var("x", Type::int_(), {}), Type::int_());
    finalize_paths(q);
    CHECK(violations(q) != "");
}

TEST_CASE("recursion budget is enforced") {
    auto p = lower_text("recursive function f(n: Nat): Nat { if (n == 0n) { return 0n; } return f[recursive](n - 1n) + 1n; }");
    CheckConfig cfg;
    cfg.recursion_budget = 50;
    CHECK(evaluate(p, "f", {Value::nat(20)}, cfg).ok());
    auto o = evaluate(p, "f", {Value::nat(200)}, cfg);
    REQUIRE(o.error);
    CHECK(o.error->code == ErrorCode::RecursionBudgetExceeded);
}
