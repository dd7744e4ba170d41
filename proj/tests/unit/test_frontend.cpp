#include <doctest.h>

#include "lx/parser.hpp"
#include "test_support.hpp"

using namespace lx;

namespace {

SurfaceProgram parse_fixture(const std::string& rel) { return parse_source(read_fixture(rel), rel); }

std::vector<std::string> token_summary(const std::string& src) {
    std::vector<std::string> out;
    for (const auto& t : tokenize(src)) {
        if (t.kind == TokKind::End) break;
        out.push_back(t.text);
    }
    return out;
}

}  // namespace

TEST_CASE("typed string literal is one token") {
    auto toks = tokenize("\"40502\"Zipcode");
    REQUIRE(toks.size() == 2);
    CHECK(toks[0].kind == TokKind::TypedString);
    CHECK(toks[0].text == "40502");
    CHECK(toks[0].suffix == "Zipcode");
}

TEST_CASE("empty input has no tokens") {
    auto toks = tokenize("");
    REQUIRE(toks.size() == 1);
    CHECK(toks[0].kind == TokKind::End);
}

TEST_CASE("early-return cast tokens") {
    auto toks = tokenize("x @@ <Nat>;");
    REQUIRE(toks.size() == 7);
    CHECK(toks[0].kind == TokKind::Ident);
    CHECK(toks[1].text == "@@");
    CHECK(toks[2].text == "<");
    CHECK(toks[3].kind == TokKind::Ident);
    CHECK(toks[4].text == ">");
    CHECK(toks[5].text == ";");
}

TEST_CASE("numeric suffixes") {
    auto toks = tokenize("5i 0n 5I 0N 1.0f 2.5d 1/2R 10_Celsius 3.5f_Temp");
    CHECK(toks[0].suffix == "i");
    CHECK(toks[1].suffix == "n");
    CHECK(toks[2].suffix == "I");
    CHECK(toks[3].suffix == "N");
    CHECK(toks[4].suffix == "f");
    CHECK(toks[5].suffix == "d");
    CHECK(toks[6].kind == TokKind::Rational);
    CHECK(toks[6].text == "1/2");
    CHECK(toks[7].kind == TokKind::TypedNumber);
    CHECK(toks[7].suffix == "Celsius");
    CHECK(toks[8].kind == TokKind::TypedNumber);
    CHECK(toks[8].text == "3.5f");
}

TEST_CASE("tuple index after dot is a plain integer") {
    CHECK(token_summary("v.0 + v.1") == std::vector<std::string>{"v", ".", "0", "+", "v", ".", "1"});
}

TEST_CASE("lexical errors carry positions") {
    try {
        tokenize("let x = \"abc\nlet y = 1i;\nlet z = #;", "f.lx");
        FAIL("expected a lexical error");
    } catch (const CompileError& e) {
        auto s = e.diagnostics().str();
        CHECK(s.find("f.lx:1:9: error: unterminated string literal") != std::string::npos);
        CHECK(s.find("f.lx:3:9: error: unknown character '#'") != std::string::npos);
    }
    CHECK_THROWS_AS(tokenize("5q"), CompileError);
    CHECK_THROWS_AS(tokenize("1.5i"), CompileError);
}

TEST_CASE("regex literal only after typedecl") {
    auto toks = tokenize("typedecl V = /[a-z]+_[0-9]+/; x / y");
    CHECK(toks[3].kind == TokKind::Regex);
    CHECK(toks[3].text == "[a-z]+_[0-9]+");
    CHECK(toks[6].text == "/");
}

TEST_CASE("binary tree listing parses") {
    auto p = parse_fixture("listings/itree.lx");
    REQUIRE(p.decls.size() == 1);
    const auto& d = p.decls[0];
    CHECK(d.kind == DeclKind::Datatype);
    CHECK(d.cases.size() == 3);
    int consts = 0, methods = 0;
    for (const auto& m : d.members) {
        consts += m.kind == MemberKind::Const;
        methods += m.kind == MemberKind::Method;
    }
    CHECK(consts == 1);
    CHECK(methods == 2);
    CHECK(d.using_members.size() == 1);
    CHECK_FALSE(d.using_members[0].field_keyword);
}

TEST_CASE("sale info listing parses") {
    auto p = parse_fixture("listings/saleinfo.lx");
    REQUIRE(p.decls.size() == 2);
    const auto& info = p.decls[1];
    int fields = 0, invariants = 0, validates = 0, test_level = 0;
    for (const auto& m : info.members) {
        fields += m.kind == MemberKind::Field;
        invariants += m.kind == MemberKind::Invariant;
        validates += m.kind == MemberKind::Validate;
        test_level += m.level == CheckLevel::Test;
    }
    CHECK(fields == 3);
    CHECK(invariants == 2);
    CHECK(validates == 2);
    CHECK(test_level == 1);
}

TEST_CASE("trivial function parses") {
    auto p = parse_source("function f(): Int { return 1i; }");
    REQUIRE(p.decls.size() == 1);
    CHECK(p.decls[0].kind == DeclKind::Function);
    CHECK(p.decls[0].fn->body.size() == 1);
}

TEST_CASE("every listing parses and round-trips") {
    for (const char* f : {"itree.lx", "greetings.lx", "zipcode.lx", "flow_tests.lx", "narrow.lx", "if_none.lx", "bar.lx",
                          "lambdas.lx", "abs.lx", "baz.lx", "saleinfo.lx", "counter.lx", "process.lx", "maxpair.lx"}) {
        CAPTURE(f);
        auto p = parse_fixture(std::string("listings/") + f);
        auto text = render(p);
        auto q = parse_source(text);
        CHECK(dump(p) == dump(q));
        CHECK(render(q) == text);
    }
}

TEST_CASE("empty program renders empty") {
    auto p = parse_source("");
    CHECK(p.decls.empty());
    CHECK(render(p).empty());
}

TEST_CASE("syntax errors report expected tokens and recover") {
    try {
        parse_source("function f(: Int { }\nfunction g(): Int { return 1i }\nfunction h(): Int { return 2i; }", "e.lx");
        FAIL("expected syntax errors");
    } catch (const CompileError& e) {
        CHECK(e.diagnostics().error_count() == 2);
        auto s = e.diagnostics().str();
        CHECK(s.find("e.lx:1:12: error: expected parameter name") != std::string::npos);
        CHECK(s.find("expected ';'") != std::string::npos);
    }
}

TEST_CASE("flow ops in every position") {
    const char* forms[] = {"none", "some", "ok", "err", "result", "<Nat>", "[5i]", "!none", "!some", "!ok",
                           "!err", "!result", "!<Nat | None>", "![\"a\"]"};
    for (const char* f : forms) {
        CAPTURE(f);
        std::string src = std::string("function f(x: Int): Bool { let a = x?") + f + "; let b = x@" + f + "; let c = x??" +
                          f + "; let d = x@@" + f + "; if " + f + " (x) { return true; } return false; }";
        auto p = parse_source(src);
        CHECK(dump(parse_source(render(p))) == dump(p));
    }
}

TEST_CASE("nullable type sugar normalizes to a union with None") {
    auto p = parse_source("function f(x: Nat?): Nat | None { return x; }");
    auto q = parse_source("function f(x: Nat | None): Nat | None { return x; }");
    CHECK(dump(p) == dump(q));
}
