#include "lx/gen.hpp"

#include <algorithm>
#include <climits>
#include <stdexcept>

#include "lx/regex.hpp"

namespace lx {

namespace {

template <class T>
T pick(const std::vector<T>& xs, std::mt19937_64& rng) {
    return xs[std::uniform_int_distribution<std::size_t>(0, xs.size() - 1)(rng)];
}

bool chance(std::mt19937_64& rng, double p) { return std::uniform_real_distribution<double>(0, 1)(rng) < p; }

void gen_regex(const RegexNode& n, std::mt19937_64* rng, std::vector<std::uint32_t>& out) {
    switch (n.kind) {
        case RegexNode::Kind::Empty: return;
        case RegexNode::Kind::Any:
            out.push_back(rng ? static_cast<std::uint32_t>('a' + (*rng)() % 26) : 'a');
            return;
        case RegexNode::Kind::Chars: {
            if (n.negated) {
                // Smallest printable code point outside the ranges.
                for (std::uint32_t c = 'a'; c < 0x7f; ++c) {
                    bool in = false;
                    for (const auto& [lo, hi] : n.ranges) in = in || (c >= lo && c <= hi);
                    if (!in) {
                        out.push_back(c);
                        return;
                    }
                }
                out.push_back('~');
                return;
            }
            if (!rng) {
                out.push_back(n.ranges.front().first);
                return;
            }
            const auto& r = pick(n.ranges, *rng);
            out.push_back(std::uniform_int_distribution<std::uint32_t>(r.first, r.second)(*rng));
            return;
        }
        case RegexNode::Kind::Concat:
            for (const auto& c : n.children) gen_regex(c, rng, out);
            return;
        case RegexNode::Kind::Alt:
            gen_regex(rng ? pick(n.children, *rng) : n.children.front(), rng, out);
            return;
        case RegexNode::Kind::Repeat: {
            int count = n.min;
            if (rng) {
                int hi = n.max < 0 ? n.min + 3 : n.max;
                count = std::uniform_int_distribution<int>(n.min, hi)(*rng);
            }
            for (int i = 0; i < count; ++i) gen_regex(n.children.front(), rng, out);
            return;
        }
    }
}

std::string regex_string(const std::string& src, std::mt19937_64* rng) {
    auto re = Regex::parse(src);
    if (!re) throw std::invalid_argument("malformed regex " + src);
    std::vector<std::uint32_t> cps;
    gen_regex(re->root(), rng, cps);
    return utf8_encode(cps);
}

Value random_numeric(TypeKind k, std::mt19937_64& rng, const GenOptions& o) {
    std::uniform_int_distribution<std::int64_t> small(-o.magnitude, o.magnitude);
    switch (k) {
        case TypeKind::Nat: {
            if (chance(rng, 0.15)) return Value::nat(pick<std::uint64_t>({0, 1, 2, UINT64_MAX, std::uint64_t(1) << 62}, rng));
            return Value::nat(static_cast<std::uint64_t>(std::llabs(small(rng))));
        }
        case TypeKind::Int: {
            if (chance(rng, 0.15)) {
                return Value::int_(pick<std::int64_t>({0, 1, -1, 2, -2, INT64_MIN, INT64_MAX, std::int64_t(1) << 62,
                                                       -(std::int64_t(1) << 62)},
                                                      rng));
            }
            return Value::int_(small(rng));
        }
        case TypeKind::BigNat: {
            BigInt v = std::llabs(small(rng));
            if (chance(rng, 0.15)) v = BigInt(1) << 70;
            return Value::big_nat(v);
        }
        case TypeKind::BigInt: {
            BigInt v = small(rng);
            if (chance(rng, 0.15)) v = (BigInt(1) << 70) * (chance(rng, 0.5) ? 1 : -1);
            return Value::big_int(v);
        }
        case TypeKind::Float: return Value::float_(static_cast<double>(small(rng)) / 4.0);
        case TypeKind::Decimal: return Value::decimal_scaled(BigInt(small(rng)) * decimal_scale() / 100);
        case TypeKind::Rational: {
            std::int64_t d = std::uniform_int_distribution<std::int64_t>(1, 9)(rng);
            return Value::rational(Rational(small(rng), d));
        }
        default: throw std::logic_error("not numeric");
    }
}

// Entity cases of a nominal type, preferring ones without nominal fields
// once the depth budget runs out.
std::vector<std::string> entity_choices(const std::string& name, const TypeUniverse& u, bool shallow) {
    std::vector<std::string> all = u.is_entity(name) ? std::vector<std::string>{name} : u.entities_providing(name);
    if (!shallow) return all;
    std::vector<std::string> flat;
    for (const auto& e : all) {
        bool nested = false;
        for (const auto& f : u.nominal(e)->fields) {
            for (const auto& m : f.type.members()) nested = nested || m.kind() == TypeKind::Nominal;
        }
        if (!nested) flat.push_back(e);
    }
    return flat.empty() ? all : flat;
}

Value random_at(const Type& t, std::mt19937_64& rng, const TypeUniverse& u, const GenOptions& o, int depth) {
    switch (t.kind()) {
        case TypeKind::Never: throw std::invalid_argument("no values of Never");
        case TypeKind::None: return Value::none();
        case TypeKind::Bool: return Value::boolean(chance(rng, 0.5));
        case TypeKind::Nat:
        case TypeKind::Int:
        case TypeKind::BigNat:
        case TypeKind::BigInt:
        case TypeKind::Float:
        case TypeKind::Decimal:
        case TypeKind::Rational: return random_numeric(t.kind(), rng, o);
        case TypeKind::String:
        case TypeKind::ASCIIString: {
            static const std::string alphabet = "ab01 _";
            int n = std::uniform_int_distribution<int>(0, o.max_string)(rng);
            std::string s;
            for (int i = 0; i < n; ++i) s += alphabet[rng() % alphabet.size()];
            return Value::string(s);
        }
        case TypeKind::StringOf: {
            const auto* v = u.validator(t.name());
            return Value::string_of(t.name(), regex_string(v->regex, &rng));
        }
        case TypeKind::Typedecl: return Value::typedecl(t.name(), random_at(u.typedecl(t.name())->base, rng, u, o, depth));
        case TypeKind::Tuple:
        case TypeKind::Record: {
            std::vector<Value> xs;
            for (const auto& a : t.args()) xs.push_back(random_at(a, rng, u, o, depth));
            return t.kind() == TypeKind::Tuple ? Value::tuple(t, xs) : Value::record(t, xs);
        }
        case TypeKind::Union: return random_at(pick(t.args(), rng), rng, u, o, depth);
        case TypeKind::Nominal: {
            auto ent = pick(entity_choices(t.name(), u, depth >= o.max_depth), rng);
            std::vector<Value> xs;
            for (const auto& f : u.nominal(ent)->fields) xs.push_back(random_at(f.type, rng, u, o, depth + 1));
            return Value::entity(Type::nominal(ent), xs);
        }
        case TypeKind::List: {
            int n = std::uniform_int_distribution<int>(0, o.max_list)(rng);
            std::vector<Value> xs;
            for (int i = 0; i < n; ++i) xs.push_back(random_at(t.args()[0], rng, u, o, depth + 1));
            return Value::list(t, xs);
        }
        case TypeKind::Map: {
            int n = std::uniform_int_distribution<int>(0, o.max_map)(rng);
            std::vector<std::pair<Value, Value>> es;
            for (int i = 0; i < n; ++i) {
                es.emplace_back(random_at(t.args()[0], rng, u, o, depth + 1), random_at(t.args()[1], rng, u, o, depth + 1));
            }
            return Value::map(t, es);
        }
        case TypeKind::Ok:
        case TypeKind::Err: return Value::entity(t, {random_at(t.args()[0], rng, u, o, depth)});
    }
    throw std::logic_error("unknown type kind");
}

struct Enumerator {
    const TypeUniverse& u;
    const EnumDomain& d;
    std::size_t cap;

    void check(std::size_t n) const {
        if (n > cap) throw std::length_error("enumeration exceeds " + std::to_string(cap) + " values");
    }

    std::vector<Value> values(const Type& t, int depth) {
        std::vector<Value> out;
        switch (t.kind()) {
            case TypeKind::Never: return out;
            case TypeKind::None: return {Value::none()};
            case TypeKind::Bool: return {Value::boolean(false), Value::boolean(true)};
            case TypeKind::Nat:
                for (auto n : d.nats) out.push_back(Value::nat(n));
                return out;
            case TypeKind::Int:
                for (auto n : d.ints) out.push_back(Value::int_(n));
                return out;
            case TypeKind::BigNat:
                for (auto n : d.nats) out.push_back(Value::big_nat(BigInt(n)));
                return out;
            case TypeKind::BigInt:
                for (auto n : d.ints) out.push_back(Value::big_int(BigInt(n)));
                return out;
            case TypeKind::Float:
                for (auto f : d.floats) out.push_back(Value::float_(f));
                return out;
            case TypeKind::Decimal:
                for (auto n : d.ints) out.push_back(Value::decimal_scaled(BigInt(n) * decimal_scale()));
                return out;
            case TypeKind::Rational:
                for (auto n : d.ints) out.push_back(Value::rational(Rational(n)));
                return out;
            case TypeKind::String:
            case TypeKind::ASCIIString:
                for (const auto& s : d.strings) out.push_back(Value::string(s));
                return out;
            case TypeKind::StringOf: {
                const auto* v = u.validator(t.name());
                auto re = Regex::parse(v->regex);
                std::vector<std::string> ss;
                for (const auto& s : d.strings) {
                    if (re && re->full_match(s)) ss.push_back(s);
                }
                auto m = regex_string(v->regex, nullptr);
                if (std::find(ss.begin(), ss.end(), m) == ss.end()) ss.push_back(m);
                for (const auto& s : ss) out.push_back(Value::string_of(t.name(), s));
                return out;
            }
            case TypeKind::Typedecl:
                for (auto& b : values(u.typedecl(t.name())->base, depth)) out.push_back(Value::typedecl(t.name(), b));
                return out;
            case TypeKind::Tuple:
            case TypeKind::Record: {
                std::vector<std::vector<Value>> cols;
                for (const auto& a : t.args()) cols.push_back(values(a, depth));
                for (auto& row : cartesian(cols, cap)) {
                    out.push_back(t.kind() == TypeKind::Tuple ? Value::tuple(t, row) : Value::record(t, row));
                }
                return out;
            }
            case TypeKind::Union:
                for (const auto& m : t.args()) {
                    auto vs = values(m, depth);
                    out.insert(out.end(), vs.begin(), vs.end());
                    check(out.size());
                }
                return out;
            case TypeKind::Nominal: {
                if (depth > d.max_depth) return out;
                std::vector<std::string> ents =
                    u.is_entity(t.name()) ? std::vector<std::string>{t.name()} : u.entities_providing(t.name());
                for (const auto& ent : ents) {
                    std::vector<std::vector<Value>> cols;
                    bool empty = false;
                    for (const auto& f : u.nominal(ent)->fields) {
                        cols.push_back(values(f.type, depth + 1));
                        empty = empty || cols.back().empty();
                    }
                    if (empty) continue;
                    for (auto& row : cartesian(cols, cap)) out.push_back(Value::entity(Type::nominal(ent), row));
                    check(out.size());
                }
                return out;
            }
            case TypeKind::List: {
                auto elems = values(t.args()[0], depth + 1);
                out.push_back(Value::list(t, {}));
                std::vector<std::vector<Value>> layer{{}};
                for (int len = 1; len <= d.max_list; ++len) {
                    std::vector<std::vector<Value>> next;
                    for (const auto& prefix : layer) {
                        for (const auto& e : elems) {
                            auto xs = prefix;
                            xs.push_back(e);
                            next.push_back(std::move(xs));
                            check(next.size() + out.size());
                        }
                    }
                    for (const auto& xs : next) out.push_back(Value::list(t, xs));
                    layer = std::move(next);
                }
                return out;
            }
            case TypeKind::Map: {
                auto keys = values(t.args()[0], depth + 1);
                auto vals = values(t.args()[1], depth + 1);
                // Subsets of keys of size <= max_map (in index order), each with
                // every assignment of values.
                std::vector<std::vector<std::size_t>> subsets{{}};
                for (std::size_t i = 0; i < keys.size(); ++i) {
                    auto n = subsets.size();
                    for (std::size_t j = 0; j < n; ++j) {
                        if (static_cast<int>(subsets[j].size()) >= d.max_map) continue;
                        auto s = subsets[j];
                        s.push_back(i);
                        subsets.push_back(std::move(s));
                        check(subsets.size());
                    }
                }
                for (const auto& s : subsets) {
                    std::vector<std::vector<Value>> cols(s.size(), vals);
                    for (auto& row : cartesian(cols, cap)) {
                        std::vector<std::pair<Value, Value>> es;
                        for (std::size_t j = 0; j < s.size(); ++j) es.emplace_back(keys[s[j]], row[j]);
                        out.push_back(Value::map(t, es));
                    }
                    check(out.size());
                }
                return out;
            }
            case TypeKind::Ok:
            case TypeKind::Err:
                for (auto& v : values(t.args()[0], depth)) out.push_back(Value::entity(t, {v}));
                return out;
        }
        return out;
    }
};

}  // namespace

Value random_value(const Type& t, std::mt19937_64& rng, const TypeUniverse& u, const GenOptions& o) {
    return random_at(t, rng, u, o, 0);
}

std::vector<Value> enumerate_values(const Type& t, const TypeUniverse& u, const EnumDomain& d, std::size_t cap) {
    Enumerator e{u, d, cap};
    auto out = e.values(t, 0);
    e.check(out.size());
    return out;
}

std::vector<std::vector<Value>> cartesian(const std::vector<std::vector<Value>>& columns, std::size_t cap) {
    std::size_t total = 1;
    for (const auto& c : columns) {
        if (c.empty()) return {};
        total *= c.size();
        if (total > cap) throw std::length_error("enumeration exceeds " + std::to_string(cap) + " values");
    }
    std::vector<std::vector<Value>> out;
    out.reserve(total);
    std::vector<std::size_t> idx(columns.size(), 0);
    for (std::size_t n = 0; n < total; ++n) {
        std::vector<Value> row;
        for (std::size_t i = 0; i < columns.size(); ++i) row.push_back(columns[i][idx[i]]);
        out.push_back(std::move(row));
        for (std::size_t i = columns.size(); i-- > 0;) {
            if (++idx[i] < columns[i].size()) break;
            idx[i] = 0;
        }
    }
    return out;
}

std::string regex_minimal_string(const std::string& regex_source) { return regex_string(regex_source, nullptr); }

std::string regex_random_string(const std::string& regex_source, std::mt19937_64& rng) {
    return regex_string(regex_source, &rng);
}

}  // namespace lx
