#include <doctest.h>

#include <climits>
#include <thread>

#include "lx/check.hpp"
#include "lx/lower.hpp"
#include "lx/verify.hpp"
#include "test_support.hpp"

using namespace lx;

namespace {

IrProgram compile(const std::string& src, const std::string& file = "t.lx") {
    Diagnostics d;
    return lower_program(check_source(src, file, d));
}

const SiteReport& site_with(const VerifyReport& r, const std::string& fn, ErrorCode code) {
    for (const auto& s : r.sites) {
        if (s.site.function == fn && s.site.code == code) return s;
    }
    FAIL("no site " << fn << " " << error_code_name(code));
    throw std::logic_error("unreachable");
}

}  // namespace

TEST_CASE("solver answers simple scripts") {
    auto solver = default_solver_path();
    REQUIRE(solver_available(solver));
    CHECK(invoke_solver(solver, "(assert false)\n(check-sat)\n", 5).status == SolverResult::Status::Unsat);
    auto r = invoke_solver(solver, "(declare-const x Int)\n(assert (> x 5))\n(check-sat)\n(get-value (x))\n", 5);
    REQUIRE(r.status == SolverResult::Status::Sat);
    auto body = parse_sexprs(r.output.substr(r.output.find('\n') + 1));
    REQUIRE(body.size() == 1);
    auto x = sexpr_int(body[0].items[0].items[1]);
    REQUIRE(x);
    CHECK(*x > 5);
    CHECK(invoke_solver("/nonexistent/solver", "(check-sat)\n", 5).status == SolverResult::Status::Error);
}

TEST_CASE("concurrent solver processes each see their own end of input") {
    auto solver = default_solver_path();
    std::vector<SolverResult::Status> got(16, SolverResult::Status::Error);
    std::vector<std::thread> ts;
    for (std::size_t t = 0; t < 4; ++t) {
        ts.emplace_back([&, t]() {
            for (std::size_t i = t; i < got.size(); i += 4) {
                got[i] = invoke_solver(solver, "(declare-const x Int)\n(assert (> x " + std::to_string(i) + "))\n(check-sat)\n", 5).status;
            }
        });
    }
    for (auto& t : ts) t.join();
    for (auto s : got) CHECK(s == SolverResult::Status::Sat);
}

TEST_CASE("s-expression parsing") {
    auto xs = parse_sexprs("((a \"x\"\"y\") (b (- 3)) (c \"\\u{41}\\u0042\")) |q r|");
    REQUIRE(xs.size() == 2);
    CHECK(xs[0].items[0].items[1].atom == "x\"y");
    CHECK(*sexpr_int(xs[0].items[1].items[1]) == -3);
    CHECK(xs[0].items[2].items[1].atom == "AB");
    CHECK(xs[1].atom == "q r");
    CHECK_THROWS(parse_sexprs("(a"));
    CHECK(smt_int(BigInt(-4)) == "(- 4)");
}

TEST_CASE("site enumeration is deterministic and covers codes") {
    auto p = compile(read_fixture("programs/trading.lx"), "trading.lx");
    auto a = enumerate_error_sites(p, CheckConfig{}, {"process"});
    auto b = enumerate_error_sites(p, CheckConfig{}, {"process"});
    REQUIRE(a.size() == b.size());
    std::set<ErrorCode> codes;
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].name() == b[i].name());
        CHECK(a[i].id == static_cast<int>(i + 1));
        codes.insert(a[i].code);
    }
    CHECK(codes.count(ErrorCode::PostconditionFail));
    CHECK(codes.count(ErrorCode::InvariantFail));
    CHECK(codes.count(ErrorCode::ValidateFail));
    CHECK(enumerate_error_sites(p, CheckConfig{}).size() < a.size());
}

TEST_CASE("trading postcondition has a witness with a negative quantity") {
    auto p = compile(read_fixture("programs/trading.lx"), "trading.lx");
    VerifyOptions o;
    o.ingest = {"process"};
    auto r = verify_program(p, o);
    const auto& s = site_with(r, "process", ErrorCode::PostconditionFail);
    REQUIRE(s.verdict.kind == VerdictKind::Witness);
    const auto& cx = *s.verdict.witness;
    CHECK(cx.entry == "process");
    CHECK(cx.args[1].items()[1].as_big() < 0);
    CHECK(confirm_witness(p, s.site, cx, o));
    // A fabricated input that does not reach the failure is refuted.
    Counterexample fake = cx;
    fake.args[1] = Value::entity(cx.args[1].type(), {cx.args[1].items()[0], Value::big_int(BigInt(1))});
    Outcome actual;
    CHECK_FALSE(confirm_witness(p, s.site, fake, o, &actual));
    INFO(report_text(p, r));
    CHECK(r.count(VerdictKind::Unsupported) == 0);
}

TEST_CASE("trading with natural quantities has no postcondition witness") {
    auto p = compile(read_fixture("programs/trading_fixed.lx"), "trading_fixed.lx");
    VerifyOptions o;
    o.ingest = {"process"};
    auto r = verify_program(p, o);
    INFO(report_text(p, r));
    CHECK(site_with(r, "process", ErrorCode::PostconditionFail).verdict.kind == VerdictKind::NoWitness);
}

TEST_CASE("division by zero witness") {
    auto p = compile("function f(x: Int): Int {\n    return 100i / x;\n}\n");
    auto r = verify_program(p, VerifyOptions{});
    INFO(report_text(p, r));
    const auto& dz = site_with(r, "f", ErrorCode::DivZero);
    REQUIRE(dz.verdict.kind == VerdictKind::Witness);
    CHECK(dz.verdict.witness->args[0].as_int() == 0);
    CHECK(site_with(r, "f", ErrorCode::Overflow).verdict.kind == VerdictKind::NoWitness);
}

TEST_CASE("abs overflows only at the minimum integer") {
    auto p = compile(read_fixture("programs/abs.lx"), "abs.lx");
    auto r = verify_program(p, VerifyOptions{});
    INFO(report_text(p, r));
    REQUIRE(r.sites.size() == 1);
    REQUIRE(r.sites[0].verdict.kind == VerdictKind::Witness);
    CHECK(r.sites[0].verdict.witness->args[0].as_int() == INT64_MIN);
}

TEST_CASE("reports do not depend on the number of jobs") {
    auto p = compile(read_fixture("programs/trading.lx"), "trading.lx");
    VerifyOptions o;
    o.ingest = {"process"};
    auto one = report_text(p, verify_program(p, o));
    o.jobs = 4;
    CHECK(report_text(p, verify_program(p, o)) == one);
}

TEST_CASE("missing solver is reported") {
    auto p = compile(read_fixture("programs/abs.lx"), "abs.lx");
    VerifyOptions o;
    o.solver = "/nonexistent/solver";
    CHECK_THROWS_AS(verify_program(p, o), SolverMissing);
}
