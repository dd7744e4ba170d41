#include <climits>
#include <random>

#include "acceptance.hpp"
#include "lx/cli.hpp"
#include "lx/harness.hpp"
#include "lx/interp.hpp"
#include "lx/verify.hpp"

using namespace lx;

namespace acceptance {

namespace {

const SiteReport* find_site(const VerifyReport& r, const std::string& fn, ErrorCode code) {
    for (const auto& s : r.sites) {
        if (s.site.function == fn && s.site.code == code) return &s;
    }
    return nullptr;
}

// Verifies only the ensures site of `process`, timing the whole query.
std::pair<VerifyReport, double> verify_process_ensures(const IrProgram& p) {
    VerifyOptions o;
    o.ingest = {"process"};
    o.site_filter = [](const ErrorSite& s) { return s.function == "process" && s.code == ErrorCode::PostconditionFail; };
    auto start = std::chrono::steady_clock::now();
    auto r = verify_program(p, o);
    return {r, seconds_since(start)};
}

}  // namespace

Result trading_case_study() {
    auto buggy = compile_fixture("programs/trading.lx");
    auto [r, t1] = verify_process_ensures(buggy.ir);
    const auto* s = find_site(r, "process", ErrorCode::PostconditionFail);
    if (!s) return {false, "no ensures site in process"};
    if (s->verdict.kind != VerdictKind::Witness) return {false, std::string("buggy version: ") + verdict_name(s->verdict.kind)};
    const auto& cx = *s->verdict.witness;
    const Value& order = cx.args.at(1);
    BigInt quantity = order.items().at(1).as_big();
    VerifyOptions o;
    o.ingest = {"process"};
    if (!confirm_witness(buggy.ir, s->site, cx, o)) return {false, "witness does not replay"};
    if (quantity >= 0) return {false, "witness quantity " + quantity.str() + " is not negative"};

    auto fixed = compile_fixture("programs/trading_fixed.lx");
    auto [rf, t2] = verify_process_ensures(fixed.ir);
    const auto* sf = find_site(rf, "process", ErrorCode::PostconditionFail);
    if (!sf) return {false, "no ensures site in fixed process"};
    if (sf->verdict.kind != VerdictKind::NoWitness) {
        return {false, std::string("fixed version: ") + verdict_name(sf->verdict.kind)};
    }
    char buf[200];
    std::snprintf(buf, sizeof buf, "witness order %s; fixed: no-witness; %.2fs and %.2fs per site",
                  to_string(order).c_str(), t1, t2);
    return {t1 <= 10 && t2 <= 10, buf};
}

Result maxpair_ranking() {
    const std::string rel = "programs/maxpair.lx";
    auto source = read_text(fixture_path(rel));
    std::vector<std::string> candidates = {
        "return [x.max(), y.max()];",
        "return List::zip<Int, Int>(x, y).maxArg<Int>(fn(v) => v.0 + v.1);",
    };
    auto start = std::chrono::steady_clock::now();
    auto ranked = evaluate_candidates(source, rel, candidates, VerifyOptions{});
    double t = seconds_since(start);
    if (ranked.size() != 2) return {false, "expected two reports"};
    const auto& first = ranked[0];
    const auto& second = ranked[1];
    std::string detail = "order " + std::to_string(first.index + 1) + "," + std::to_string(second.index + 1);
    if (first.index != 1) return {false, detail};
    if (second.examples.size() != 1 || second.examples[0].passed) return {false, "candidate 1 does not fail the example"};
    detail += "; candidate 1 gave " + outcome_str(second.examples[0].actual);
    if (!first.all_examples_pass() || first.examples.empty()) return {false, "candidate 2 fails the example"};
    if (first.ensures.empty() || !first.ensures_clean()) return {false, "candidate 2 has no clean ensures verdict"};
    char buf[64];
    std::snprintf(buf, sizeof buf, "; %.2fs", t);
    return {t <= 10, detail + "; candidate 2 passes with no ensures witness" + buf};
}

Result abs_lowering() {
    std::ostringstream out, err;
    int code = run_cli({"ir", fixture_path("listings/abs.lx")}, out, err);
    if (code != kExitOk) return {false, "ir exited " + std::to_string(code) + ": " + err.str()};
    auto p = parse_ir(out.str(), TypeUniverse{});
    // let (y = x) in if y < 0 then -y else y, with its own binder name.
    const char* expected =
        "(ir \"expected\"\n(entries abs)\n(function abs\n  (pos 1:1)\n  (recursive false)\n  (params (x \"Int\"))\n"
        "  (result \"Int\")\n  (body\n    (let \"Int\" 1:1 t\n      (var \"Int\" 1:1 x)\n      (ite \"Int\" 1:1\n"
        "        (prim \"Bool\" 1:1 < (var \"Int\" 1:1 t) (const \"Int\" 1:1 0i))\n"
        "        (prim \"Int\" 1:1 neg (var \"Int\" 1:1 t))\n        (var \"Int\" 1:1 t)))))\n)\n";
    auto want = parse_ir(expected, TypeUniverse{});
    if (!p.functions.count("abs")) return {false, "no abs function in the IR"};
    if (!ir_alpha_equal(*p.functions.at("abs").body, *want.functions.at("abs").body)) {
        return {false, "IR shape differs: " + ir_pretty(*p.functions.at("abs").body)};
    }

    auto c = compile_fixture("listings/abs.lx");
    std::vector<std::int64_t> xs = {0, 1, -1, std::int64_t(1) << 62, -(std::int64_t(1) << 62), INT64_MIN, INT64_MAX};
    std::mt19937_64 rng(20240601);
    std::uniform_int_distribution<std::int64_t> any(INT64_MIN, INT64_MAX);
    for (int i = 0; i < 1000; ++i) xs.push_back(any(rng));
    int errors = 0;
    for (auto x : xs) {
        auto a = interpret(c.checked, "abs", {Value::int_(x)});
        auto b = evaluate(c.ir, "abs", {Value::int_(x)});
        if (outcome_key(a) != outcome_key(b)) {
            return {false, "surface and IR disagree at " + std::to_string(x) + ": " + outcome_key(a) + " vs " + outcome_key(b)};
        }
        if (b.error) ++errors;
    }
    return {true, ir_pretty(*p.functions.at("abs").body) + "; " + std::to_string(xs.size()) + " inputs agree (" +
                      std::to_string(errors) + " overflow)"};
}

namespace {

struct TreeGen {
    std::mt19937_64 rng;
    std::vector<std::int64_t> keys;

    Value nil() { return Value::entity(Type::nominal("Nil"), {Value::nat(0)}); }

    static std::uint64_t size_of(const Value& t) { return t.items()[0].as_nat(); }

    // Search tree over keys[lo, hi).
    Value build(std::size_t lo, std::size_t hi) {
        if (lo == hi) return nil();
        if (hi - lo == 1 && rng() % 2 == 0) return Value::entity(Type::nominal("Leaf"), {Value::nat(1), Value::int_(keys[lo])});
        std::size_t m = lo + rng() % (hi - lo);
        Value l = build(lo, m), r = build(m + 1, hi);
        std::uint64_t n = size_of(l) + size_of(r) + 1;
        return Value::entity(Type::nominal("Node"), {Value::nat(n), Value::int_(keys[m]), l, r});
    }

    Value tree() {
        std::vector<std::int64_t> pool;
        for (std::int64_t k = -20; k <= 20; ++k) pool.push_back(k);
        std::shuffle(pool.begin(), pool.end(), rng);
        keys.assign(pool.begin(), pool.begin() + static_cast<long>(rng() % 8));
        std::sort(keys.begin(), keys.end());
        return build(0, keys.size());
    }
};

void flatten(const Value& t, std::vector<std::int64_t>& out) {
    const auto& name = t.type().name();
    if (name == "Leaf") out.push_back(t.items()[1].as_int());
    if (name == "Node") {
        out.push_back(t.items()[1].as_int());
        flatten(t.items()[2], out);
        flatten(t.items()[3], out);
    }
}

std::size_t count_nodes(const Value& t) {
    if (t.type().name() != "Node") return 1;
    return 1 + count_nodes(t.items()[2]) + count_nodes(t.items()[3]);
}

}  // namespace

Result itree_membership() {
    auto c = compile_fixture("programs/itree.lx");
    TreeGen gen{std::mt19937_64(515), {}};
    Evaluator checker(c.ir, CheckConfig{});
    std::size_t queries = 0, max_nodes = 0, rejected = 0;
    for (int i = 0; i < 500; ++i) {
        Value t = gen.tree();
        max_nodes = std::max(max_nodes, count_nodes(t));
        if (count_nodes(t) > 15) return {false, "generated a tree with more than 15 nodes"};
        auto valid = checker.check_value(t, false);
        if (!valid.ok()) return {false, "generated tree is invalid: " + outcome_str(valid)};
        std::vector<std::int64_t> flat;
        flatten(t, flat);
        for (std::int64_t x = -21; x <= 21; ++x) {
            auto o = evaluate(c.ir, "ITree::has", {t, Value::int_(x)});
            if (!o.ok()) return {false, "has failed: " + outcome_str(o)};
            bool oracle = std::find(flat.begin(), flat.end(), x) != flat.end();
            if (o.value->as_bool() != oracle) return {false, "has(" + std::to_string(x) + ") differs on " + to_string(t)};
            ++queries;
        }
        if (t.type().name() == "Node") {
            auto f = t.items();
            auto ok = construct_checked(c.ir, "Node", f);
            f[0] = Value::nat(f[0].as_nat() + 1 + gen.rng() % 3);
            auto bad = construct_checked(c.ir, "Node", f);
            if (!ok.ok()) return {false, "consistent node rejected: " + outcome_str(ok)};
            if (!bad.error || bad.error->code != ErrorCode::InvariantFail) {
                return {false, "inconsistent size gave " + outcome_str(bad)};
            }
            ++rejected;
        }
    }
    return {true, "500 trees (up to " + std::to_string(max_nodes) + " nodes), " + std::to_string(queries) +
                      " queries agree; " + std::to_string(rejected) + " inconsistent sizes give invariant-fail"};
}

}  // namespace acceptance
