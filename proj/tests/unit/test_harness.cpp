#include <doctest.h>

#include "lx/harness.hpp"
#include "test_support.hpp"

using namespace lx;

namespace {

const char* kMax = "return [x.max(), y.max()];";
const char* kZip = "return List::zip<Int, Int>(x, y).maxArg<Int>(fn(v) => v.0 + v.1);";

}  // namespace

TEST_CASE("hole discovery") {
    auto src = read_fixture("programs/maxpair.lx");
    auto h = find_hole(src, "maxpair.lx");
    CHECK(h.function == "maxPair");
    CHECK(src.substr(h.offset, h.length) == "defer;");
    CHECK_THROWS_AS(find_hole("function f(): Int { return 1i; }", "x.lx"), std::invalid_argument);
}

TEST_CASE("splicing and examples") {
    auto src = read_fixture("programs/maxpair.lx");
    auto h = find_hole(src, "maxpair.lx");
    std::string diag;
    auto one = splice_candidate(src, "maxpair.lx", h, kMax, diag);
    REQUIRE(one);
    REQUIRE(one->examples.size() == 1);
    auto r1 = run_examples(*one, h, CheckConfig{});
    CHECK_FALSE(r1[0].passed);
    CHECK(to_string(*r1[0].actual.value) == "[3i, 5i]");
    auto two = splice_candidate(src, "maxpair.lx", h, kZip, diag);
    REQUIRE(two);
    auto r2 = run_examples(*two, h, CheckConfig{});
    CHECK(r2[0].passed);
    CHECK(r2[0].ensures_ok);
    CHECK_FALSE(splice_candidate(src, "maxpair.lx", h, "return [x.max(, 1i];", diag));
    CHECK_FALSE(diag.empty());
}

TEST_CASE("re-ranking puts the example-passing candidate first") {
    auto src = read_fixture("programs/maxpair.lx");
    auto ranked = evaluate_candidates(src, "maxpair.lx", {kMax, kZip}, VerifyOptions{});
    REQUIRE(ranked.size() == 2);
    CHECK(ranked[0].index == 1);
    CHECK(ranked[0].examples_passed == 1);
    CHECK(ranked[0].ensures_clean());
    CHECK(ranked[1].index == 0);
    CHECK_FALSE(ranked[1].verified);
}

TEST_CASE("an ensures witness ranks below a clean candidate") {
    auto src = read_fixture("programs/maxpair.lx");
    // Passes the example but returns values absent from the inputs elsewhere.
    auto ranked = evaluate_candidates(src, "maxpair.lx", {"return [2i, 5i];", kZip, "return"}, VerifyOptions{});
    REQUIRE(ranked.size() == 3);
    CHECK(ranked[0].index == 1);
    CHECK(ranked[1].index == 0);
    CHECK(ranked[1].verified);
    CHECK_FALSE(ranked[1].ensures_clean());
    bool witnessed = false;
    for (const auto& s : ranked[1].ensures) witnessed = witnessed || s.verdict.kind == VerdictKind::Witness;
    CHECK(witnessed);
    CHECK(ranked[2].index == 2);
    CHECK_FALSE(ranked[2].compiles);
    for (std::size_t i = 0; i < ranked.size(); ++i) CHECK(ranked[i].rank == i + 1);
}

TEST_CASE("ranking is stable for identical reports") {
    std::vector<CandidateReport> rs(4);
    for (std::size_t i = 0; i < rs.size(); ++i) rs[i].index = i;
    auto ranked = rank_candidates(rs);
    for (std::size_t i = 0; i < ranked.size(); ++i) CHECK(ranked[i].index == i);
}

TEST_CASE("ranking is monotone in each component") {
    CandidateReport base;
    base.compiles = true;
    base.examples.resize(2);
    base.examples_passed = 1;
    std::vector<CandidateReport> variants;
    for (int c = 0; c < 2; ++c) {
        for (int e = 0; e <= 2; ++e) {
            for (int v = 0; v < 2; ++v) {
                CandidateReport r = base;
                r.compiles = c;
                r.examples_passed = static_cast<std::size_t>(e);
                r.verified = v;
                variants.push_back(r);
            }
        }
    }
    for (std::size_t i = 0; i < variants.size(); ++i) {
        for (std::size_t j = 0; j < variants.size(); ++j) {
            auto a = variants[i], b = variants[j];
            bool dominates = a.compiles >= b.compiles && a.examples_passed >= b.examples_passed &&
                             a.ensures_clean() >= b.ensures_clean();
            if (!dominates) continue;
            a.index = 1;
            b.index = 0;
            auto ranked = rank_candidates({b, a});
            // a sits no lower than b except when they tie and b came first.
            bool tie = a.compiles == b.compiles && a.examples_passed == b.examples_passed &&
                       a.ensures_clean() == b.ensures_clean();
            CHECK(ranked[0].index == (tie ? 0u : 1u));
        }
    }
}

TEST_CASE("candidate files split on separator lines") {
    auto xs = split_candidates("return 1i;\n---\n\n  return 2i;\n---  \n---\nreturn 3i;");
    REQUIRE(xs.size() == 3);
    CHECK(xs[1] == "return 2i;");
    CHECK(xs[2] == "return 3i;");
}
