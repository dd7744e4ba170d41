#include <algorithm>
#include <map>
#include <optional>
#include <set>

#include "acceptance.hpp"
#include "lx/eval.hpp"
#include "lx/interp.hpp"

using namespace lx;

namespace acceptance {

namespace {

using Ints = std::vector<std::int64_t>;
using IntMap = std::map<std::int64_t, std::int64_t>;

// A reference result: a value or the error code it must fail with.
struct Expect {
    std::optional<Value> value;
    ErrorCode code = ErrorCode::AssertFail;

    std::string key() const { return value ? "value " + to_string(*value) : std::string("error ") + error_code_name(code); }
};

Expect ok(Value v) { return {std::move(v), {}}; }
Expect fail(ErrorCode c) { return {std::nullopt, c}; }

Type int_list() { return Type::list(Type::int_()); }
Type pair_type() { return Type::tuple({Type::int_(), Type::int_()}); }
Type int_map() { return Type::map(Type::int_(), Type::int_()); }

Value ints(const Ints& xs) {
    std::vector<Value> v;
    for (auto x : xs) v.push_back(Value::int_(x));
    return Value::list(int_list(), v);
}

Value bools(const std::vector<bool>& xs) {
    std::vector<Value> v;
    for (bool x : xs) v.push_back(Value::boolean(x));
    return Value::list(Type::list(Type::boolean()), v);
}

Value pairs(const std::vector<std::pair<std::int64_t, std::int64_t>>& xs) {
    std::vector<Value> v;
    for (auto [a, b] : xs) v.push_back(Value::tuple(pair_type(), {Value::int_(a), Value::int_(b)}));
    return Value::list(Type::list(pair_type()), v);
}

Value int_map_value(const IntMap& m) {
    std::vector<std::pair<Value, Value>> v;
    for (auto [k, x] : m) v.emplace_back(Value::int_(k), Value::int_(x));
    return Value::map(int_map(), v);
}

std::vector<Ints> all_lists(std::size_t max_len, const Ints& domain) {
    std::vector<Ints> out{{}};
    std::vector<Ints> layer{{}};
    for (std::size_t n = 1; n <= max_len; ++n) {
        std::vector<Ints> next;
        for (const auto& l : layer) {
            for (auto x : domain) {
                auto e = l;
                e.push_back(x);
                next.push_back(e);
            }
        }
        out.insert(out.end(), next.begin(), next.end());
        layer = std::move(next);
    }
    return out;
}

std::vector<IntMap> all_maps(const Ints& keys, const Ints& values) {
    std::vector<IntMap> out{{}};
    for (auto k : keys) {
        std::vector<IntMap> next = out;
        for (const auto& m : out) {
            for (auto v : values) {
                auto e = m;
                e[k] = v;
                next.push_back(e);
            }
        }
        out = std::move(next);
    }
    return out;
}

template <class P>
Ints keep(const Ints& xs, P p) {
    Ints out;
    for (auto x : xs) {
        if (p(x)) out.push_back(x);
    }
    return out;
}

template <class F>
Ints each(const Ints& xs, F f) {
    Ints out;
    for (auto x : xs) out.push_back(f(x));
    return out;
}

template <class P>
Expect join(const Ints& xs, const Ints& ys, P p) {
    std::vector<std::pair<std::int64_t, std::int64_t>> out;
    for (auto x : xs) {
        for (auto y : ys) {
            if (p(x, y)) out.emplace_back(x, y);
        }
    }
    return ok(pairs(out));
}

template <class P>
Expect first(const Ints& xs, P p) {
    auto it = std::find_if(xs.begin(), xs.end(), p);
    return ok(it == xs.end() ? Value::none() : Value::int_(*it));
}

template <class P>
bool pairwise(const Ints& xs, P p) {
    for (std::size_t i = 0; i < xs.size(); ++i) {
        for (std::size_t j = i + 1; j < xs.size(); ++j) {
            if (!p(xs[i], xs[j])) return false;
        }
    }
    return true;
}

template <class F>
Expect arg_max(const Ints& xs, F key) {
    if (xs.empty()) return fail(ErrorCode::EmptyCollection);
    return ok(Value::int_(*std::max_element(xs.begin(), xs.end(), [&](auto a, auto b) { return key(a) < key(b); })));
}

template <class P>
Expect map_keep(const IntMap& m, P p) {
    IntMap out;
    for (auto [k, v] : m) {
        if (p(k, v)) out[k] = v;
    }
    return ok(int_map_value(out));
}

template <class F>
Expect map_each(const IntMap& m, F f) {
    IntMap out;
    for (auto [k, v] : m) out[k] = f(k, v);
    return ok(int_map_value(out));
}

class Runner {
public:
    explicit Runner(const Compiled& c) : c_(c) {}

    void check(const std::string& fn, const std::vector<Value>& args, const Expect& want) {
        ++cases_;
        used_.insert(fn);
        auto a = evaluate(c_.ir, fn, args);
        auto b = interpret(c_.checked, fn, args);
        if (outcome_key(a) == want.key() && outcome_key(b) == want.key()) return;
        if (mismatches_.size() < 3) {
            std::string call = fn + "(";
            for (std::size_t i = 0; i < args.size(); ++i) call += (i ? ", " : "") + to_string(args[i]);
            mismatches_.push_back(call + ") = " + outcome_key(a) + " / " + outcome_key(b) + ", expected " + want.key());
        }
    }

    std::size_t cases() const { return cases_; }
    const std::vector<std::string>& mismatches() const { return mismatches_; }
    const std::set<std::string>& used() const { return used_; }

private:
    const Compiled& c_;
    std::size_t cases_ = 0;
    std::vector<std::string> mismatches_;
    std::set<std::string> used_;
};

void functor_uses(const IrNode& e, std::set<std::string>& out) {
    if (e.kind == IrKind::Functor) out.insert((e.on_map ? "Map." : "List.") + e.name);
    for (const auto& k : e.kids) functor_uses(*k, out);
}

}  // namespace

Result functor_oracle() {
    auto c = compile_fixture("oracle/functors.lx");
    Runner run(c);
    const Ints domain{-1, 0, 1};
    const auto lists = all_lists(5, domain);
    const Ints smalls{-2, -1, 0, 1, 2};

    for (const auto& xs : lists) {
        Value l = ints(xs);
        auto n = static_cast<std::int64_t>(xs.size());
        run.check("size", {l}, ok(Value::nat(xs.size())));
        for (std::uint64_t i = 0; i <= 6; ++i) {
            run.check("get", {l, Value::nat(i)},
                      i < xs.size() ? ok(Value::int_(xs[i])) : fail(ErrorCode::IndexOutOfBounds));
            for (std::uint64_t j = 0; j <= 6; ++j) {
                Expect want = fail(ErrorCode::IndexOutOfBounds);
                if (i <= j && j <= xs.size()) want = ok(ints(Ints(xs.begin() + static_cast<long>(i), xs.begin() + static_cast<long>(j))));
                run.check("slice", {l, Value::nat(i), Value::nat(j)}, want);
            }
        }
        for (auto x : smalls) {
            auto pushed = xs;
            pushed.push_back(x);
            run.check("pushBack", {l, Value::int_(x)}, ok(ints(pushed)));
            run.check("contains", {l, Value::int_(x)},
                      ok(Value::boolean(std::count(xs.begin(), xs.end(), x) > 0)));
            run.check("mapAdd", {l, Value::int_(x)}, ok(ints(each(xs, [&](auto v) { return v + x; }))));
            run.check("filterAbove", {l, Value::int_(x)}, ok(ints(keep(xs, [&](auto v) { return v > x; }))));
            run.check("findAbove", {l, Value::int_(x)}, first(xs, [&](auto v) { return v > x; }));
        }
        std::int64_t total = 0;
        for (auto x : xs) total += x;
        run.check("sum", {l}, ok(Value::int_(total)));
        run.check("max", {l}, xs.empty() ? fail(ErrorCode::EmptyCollection) : ok(Value::int_(*std::max_element(xs.begin(), xs.end()))));

        run.check("mapDouble", {l}, ok(ints(each(xs, [](auto v) { return v * 2; }))));
        run.check("mapNeg", {l}, ok(ints(each(xs, [](auto v) { return -v; }))));
        std::vector<bool> pos;
        for (auto x : xs) pos.push_back(x > 0);
        run.check("mapPos", {l}, ok(bools(pos)));

        run.check("filterPos", {l}, ok(ints(keep(xs, [](auto v) { return v > 0; }))));
        run.check("filterNonZero", {l}, ok(ints(keep(xs, [](auto v) { return v != 0; }))));
        auto has = [&](auto p) { return ok(Value::boolean(std::any_of(xs.begin(), xs.end(), p))); };
        auto count = [&](auto p) { return ok(Value::nat(static_cast<std::uint64_t>(std::count_if(xs.begin(), xs.end(), p)))); };
        auto all = [&](auto p) { return ok(Value::boolean(std::all_of(xs.begin(), xs.end(), p))); };
        run.check("hasNeg", {l}, has([](auto v) { return v < 0; }));
        run.check("hasOne", {l}, has([](auto v) { return v == 1; }));
        run.check("findNeg", {l}, first(xs, [](auto v) { return v < 0; }));
        run.check("countPos", {l}, count([](auto v) { return v > 0; }));
        run.check("countZero", {l}, count([](auto v) { return v == 0; }));
        run.check("allNonNeg", {l}, all([](auto v) { return v >= 0; }));
        run.check("allNotOne", {l}, all([](auto v) { return v != 1; }));

        run.check("uniqueNe", {l}, ok(Value::boolean(pairwise(xs, [](auto a, auto b) { return a != b; }))));
        run.check("uniqueNoPair", {l}, ok(Value::boolean(pairwise(xs, [](auto a, auto b) { return a + b != 0; }))));

        std::int64_t horner = 0, minus = 5, squares = 0, succ = 0;
        for (auto x : xs) {
            horner = horner * 2 + x;
            minus -= x;
            squares += x * x;
            succ += x + 1;
        }
        run.check("reduceHorner", {l}, ok(Value::int_(horner)));
        run.check("reduceMinus", {l}, ok(Value::int_(minus)));
        run.check("sumSquares", {l}, ok(Value::int_(squares)));
        run.check("sumSucc", {l}, ok(Value::int_(succ)));
        run.check("maxArgNeg", {l}, arg_max(xs, [](auto v) { return -v; }));
        run.check("maxArgSquare", {l}, arg_max(xs, [](auto v) { return v * v; }));
        (void)n;

        for (const auto& ys : lists) {
            Value m = ints(ys);
            auto cat = xs;
            cat.insert(cat.end(), ys.begin(), ys.end());
            run.check("concat", {l, m}, ok(ints(cat)));
            std::vector<std::pair<std::int64_t, std::int64_t>> zipped;
            for (std::size_t i = 0; i < std::min(xs.size(), ys.size()); ++i) zipped.emplace_back(xs[i], ys[i]);
            run.check("zip", {l, m}, ok(pairs(zipped)));
            run.check("joinEq", {l, m}, join(xs, ys, [](auto a, auto b) { return a == b; }));
            run.check("joinLt", {l, m}, join(xs, ys, [](auto a, auto b) { return a < b; }));
        }
    }

    std::size_t map_count = 0;
    for (const auto& mm : all_maps(domain, domain)) {
        ++map_count;
        Value m = int_map_value(mm);
        run.check("msize", {m}, ok(Value::nat(mm.size())));
        for (auto k : smalls) {
            auto it = mm.find(k);
            run.check("mget", {m, Value::int_(k)}, it == mm.end() ? fail(ErrorCode::IndexOutOfBounds) : ok(Value::int_(it->second)));
            run.check("mhas", {m, Value::int_(k)}, ok(Value::boolean(it != mm.end())));
            run.check("mmapScaled", {m, Value::int_(k)}, map_each(mm, [&](auto, auto v) { return v * k; }));
            run.check("mfilterKey", {m, Value::int_(k)}, map_keep(mm, [&](auto key, auto) { return key != k; }));
        }
        run.check("mmapSum", {m}, map_each(mm, [](auto k, auto v) { return k + v; }));
        run.check("mfilterAbove", {m}, map_keep(mm, [](auto k, auto v) { return v > k; }));
    }

    std::set<std::string> declared;
    for (const auto& [name, f] : c.checked.functions) declared.insert(name);
    std::string unchecked;
    for (const auto& d : declared) {
        if (!run.used().count(d)) unchecked += " " + d;
    }
    std::string detail = std::to_string(lists.size()) + " lists, " + std::to_string(map_count) + " maps, " +
                         std::to_string(run.cases()) + " calls on both evaluators";
    if (!unchecked.empty()) return {false, "functions without oracle:" + unchecked};
    std::set<std::string> covered;
    for (const auto& [name, f] : c.ir.functions) functor_uses(*f.body, covered);
    std::string missing;
    for (const auto& f : list_functors()) {
        if (!covered.count("List." + f.name)) missing += " List." + f.name;
    }
    for (const auto& f : map_functors()) {
        if (!covered.count("Map." + f.name)) missing += " Map." + f.name;
    }
    if (!missing.empty()) return {false, "catalog functors not exercised:" + missing};
    if (!run.mismatches().empty()) {
        for (const auto& m : run.mismatches()) detail += "; " + m;
        return {false, detail};
    }
    return {true, detail};
}

}  // namespace acceptance
