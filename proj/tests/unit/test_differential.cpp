#include <doctest.h>

#include <climits>
#include <random>

#include "lx/check.hpp"
#include "lx/eval.hpp"
#include "lx/gen.hpp"
#include "lx/interp.hpp"
#include "lx/lower.hpp"
#include "test_support.hpp"

using namespace lx;

namespace {

// Random straight-line and branching programs over Int, Nat and Bool.
class ProgramGen {
public:
    explicit ProgramGen(std::uint64_t seed) : rng_(seed) {}

    std::string program() {
        std::string out =
            "function g(x: Int): Int\n"
            "    requires x != 7i;\n"
            "    ensures $return != 12i;\n"
            "{\n    return x * 2i;\n}\n\n";
        out += "function f(a: Int, b: Int, n: Nat, c: Bool): Int {\n";
        scopes_ = {{{"a", 'I', false}, {"b", 'I', false}, {"n", 'N', false}, {"c", 'B', false}}};
        out += block_body(1, 4);
        out += "    return " + expr('I', 2) + ";\n}\n";
        return out;
    }

private:
    struct Var {
        std::string name;
        char type;
        bool mut;
    };
    std::mt19937_64 rng_;
    std::vector<std::vector<Var>> scopes_;
    int counter_ = 0;

    int roll(int n) { return std::uniform_int_distribution<int>(0, n - 1)(rng_); }

    std::vector<Var> visible(char t, bool need_mut) {
        std::vector<Var> out;
        for (const auto& s : scopes_) {
            for (const auto& v : s) {
                if (v.type == t && (!need_mut || v.mut)) out.push_back(v);
            }
        }
        return out;
    }

    std::string literal(char t) {
        static const char* ints[] = {"0i", "1i", "-1i", "2i", "3i", "7i", "-6i", "9223372036854775807i",
                                     "-9223372036854775807i", "4611686018427387904i"};
        static const char* nats[] = {"0n", "1n", "2n", "5n", "18446744073709551615n"};
        if (t == 'I') return ints[roll(10)];
        if (t == 'N') return nats[roll(5)];
        return roll(2) ? "true" : "false";
    }

    std::string expr(char t, int depth) {
        auto vars = visible(t, false);
        if (depth == 0 || roll(3) == 0) {
            if (!vars.empty() && roll(3) != 0) return vars[roll(static_cast<int>(vars.size()))].name;
            return literal(t);
        }
        if (t == 'B') {
            switch (roll(5)) {
                case 0: {
                    char s = roll(2) ? 'I' : 'N';
                    static const char* cmp[] = {"<", "<=", ">", ">=", "==", "!="};
                    return "(" + expr(s, depth - 1) + " " + cmp[roll(6)] + " " + expr(s, depth - 1) + ")";
                }
                case 1: return "!" + expr('B', depth - 1);
                case 2: return "(" + expr('B', depth - 1) + " && " + expr('B', depth - 1) + ")";
                case 3: return "(" + expr('B', depth - 1) + " || " + expr('B', depth - 1) + ")";
                default: return "(" + expr('B', depth - 1) + " ==> " + expr('B', depth - 1) + ")";
            }
        }
        static const char* ops[] = {"+", "-", "*", "/", "%"};
        if (t == 'I') {
            switch (roll(6)) {
                case 0: return "-" + expr('I', depth - 1);
                case 1: return "g(" + expr('I', depth - 1) + ")";
                case 2: return "(if (" + expr('B', depth - 1) + ") then " + expr('I', depth - 1) + " else " + expr('I', depth - 1) + ")";
                default: break;
            }
        }
        return "(" + expr(t, depth - 1) + " " + ops[roll(5)] + " " + expr(t, depth - 1) + ")";
    }

    std::string indent(int d) { return std::string(static_cast<std::size_t>(4 * d), ' '); }

    std::string block_body(int d, int budget) {
        std::string out;
        int n = 1 + roll(3);
        for (int i = 0; i < n; ++i) out += stmt(d, budget);
        return out;
    }

    std::string nested_block(int d, int budget) {
        scopes_.emplace_back();
        std::string out = "{\n" + block_body(d + 1, budget - 1) + indent(d) + "}";
        scopes_.pop_back();
        return out;
    }

    std::string stmt(int d, int budget) {
        int k = roll(budget > 0 ? 7 : 4);
        static const char types[] = {'I', 'N', 'B'};
        switch (k) {
            case 0:
            case 1: {
                char t = types[roll(3)];
                std::string name = "v" + std::to_string(counter_++);
                bool mut = k == 0;
                std::string s = indent(d) + (mut ? "var " : "let ") + name + " = " + expr(t, 2) + ";\n";
                scopes_.back().push_back({name, t, mut});
                return s;
            }
            case 2: {
                char t = types[roll(3)];
                auto vs = visible(t, true);
                if (vs.empty()) return stmt(d, 0);
                return indent(d) + vs[roll(static_cast<int>(vs.size()))].name + " = " + expr(t, 2) + ";\n";
            }
            case 3: {
                static const char* levels[] = {"", "spec ", "debug ", "test ", "release "};
                return indent(d) + "assert " + levels[roll(5)] + expr('B', 2) + ";\n";
            }
            case 4:
                if (roll(2) == 0) return indent(d) + "if (" + expr('B', 2) + ") { return " + expr('I', 2) + "; }\n";
                [[fallthrough]];
            default: {
                std::string s = indent(d) + "if (" + expr('B', 2) + ") " + nested_block(d, budget);
                if (roll(2)) s += " elif (" + expr('B', 2) + ") " + nested_block(d, budget);
                if (roll(2)) s += " else " + nested_block(d, budget);
                return s + "\n";
            }
        }
    }
};

std::vector<Value> edge_args(std::mt19937_64& rng) {
    static const std::int64_t ints[] = {0, 1, -1, 2, 7, -7, 6, INT64_MAX, INT64_MIN, std::int64_t(1) << 62};
    auto pick_int = [&]() {
        if (rng() % 3 == 0) return Value::int_(static_cast<std::int64_t>(rng() % 21) - 10);
        return Value::int_(ints[rng() % 10]);
    };
    static const std::uint64_t nats[] = {0, 1, 2, 5, UINT64_MAX};
    return {pick_int(), pick_int(), Value::nat(nats[rng() % 5]), Value::boolean(rng() % 2 == 0)};
}

}  // namespace

TEST_CASE("abs: surface and IR agree on random and edge inputs") {
    Diagnostics d;
    auto cp = check_source(read_fixture("programs/abs.lx"), "abs.lx", d);
    auto p = lower_program(cp);
    std::vector<std::int64_t> xs = {0, 1, -1, std::int64_t(1) << 62, -(std::int64_t(1) << 62), INT64_MIN, INT64_MAX};
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<std::int64_t> any(INT64_MIN, INT64_MAX);
    for (int i = 0; i < 1000; ++i) xs.push_back(any(rng));
    for (auto x : xs) {
        auto a = interpret(cp, "abs", {Value::int_(x)});
        auto b = evaluate(p, "abs", {Value::int_(x)});
        REQUIRE(outcome_key(a) == outcome_key(b));
    }
}

TEST_CASE("generated programs: surface and IR agree") {
    int compiled = 0;
    for (std::uint64_t seed = 1; seed <= 300; ++seed) {
        ProgramGen gen(seed);
        std::string src = gen.program();
        Diagnostics d;
        CheckedProgram cp;
        try {
            cp = check_source(src, "gen.lx", d);
        } catch (const CompileError& e) {
            FAIL("generated program does not compile: " << e.what() << "\n" << src);
        }
        ++compiled;
        for (std::size_t limit : {std::size_t(8), std::size_t(0), std::size_t(1000)}) {
            auto p = lower_program(cp, LowerOptions{limit});
            REQUIRE(validate_ir(p).empty());
            std::mt19937_64 rng(seed);
            for (int i = 0; i < 20; ++i) {
                auto args = edge_args(rng);
                for (const auto& cfg : {CheckConfig{}, CheckConfig::all()}) {
                    auto a = interpret(cp, "f", args, cfg);
                    auto b = evaluate(p, "f", args, cfg);
                    if (outcome_key(a) != outcome_key(b)) {
                        std::string shown;
                        for (const auto& v : args) shown += to_string(v) + " ";
                        FAIL("args " << shown << "; "
                                     << "mismatch on seed " << seed << " limit " << limit << ": " << outcome_key(a) << " vs "
                                                 << outcome_key(b) << "\n" << src);
                    }
                }
            }
        }
    }
    CHECK(compiled == 300);
}

TEST_CASE("listings: surface and IR agree on random inputs") {
    struct Case {
        const char* file;
        const char* entry;
    };
    for (auto c : {Case{"programs/itree.lx", "ITree::has"}, Case{"programs/trading.lx", "process"},
                   Case{"programs/trading_fixed.lx", "process"}, Case{"programs/greetings.lx", "greet"},
                   Case{"programs/counter.lx", "main"}, Case{"programs/zipcode.lx", "main"}}) {
        INFO(c.file);
        Diagnostics d;
        auto cp = check_source(read_fixture(c.file), c.file, d);
        auto p = lower_program(cp);
        const auto& fn = p.functions.at(c.entry);
        std::mt19937_64 rng(99);
        GenOptions o;
        o.magnitude = 20;
        for (int i = 0; i < 300; ++i) {
            std::vector<Value> args;
            for (const auto& [_, t] : fn.params) args.push_back(random_value(t, rng, p.universe, o));
            auto a = interpret(cp, c.entry, args);
            auto b = evaluate(p, c.entry, args);
            REQUIRE(outcome_key(a) == outcome_key(b));
        }
    }
}
