#include "lx/ops.hpp"

#include <cmath>
#include <limits>

namespace lx {

namespace {

const std::vector<std::pair<ErrorCode, const char*>> kCodes = {
    {ErrorCode::AssertFail, "assert-fail"},
    {ErrorCode::PreconditionFail, "precondition-fail"},
    {ErrorCode::PostconditionFail, "postcondition-fail"},
    {ErrorCode::InvariantFail, "invariant-fail"},
    {ErrorCode::ValidateFail, "validate-fail"},
    {ErrorCode::Overflow, "overflow"},
    {ErrorCode::NatUnderflow, "nat-underflow"},
    {ErrorCode::DivZero, "div-zero"},
    {ErrorCode::CastFail, "cast-fail"},
    {ErrorCode::IndexOutOfBounds, "index-out-of-bounds"},
    {ErrorCode::EmptyCollection, "empty-collection"},
    {ErrorCode::RegexMismatch, "regex-mismatch"},
    {ErrorCode::RecursionBudgetExceeded, "recursion-budget-exceeded"},
};

const BigInt& nat_max() {
    static const BigInt v = BigInt(std::numeric_limits<std::uint64_t>::max());
    return v;
}

Value checked_nat(const BigInt& r) {
    if (r < 0) throw Fault(ErrorCode::NatUnderflow, "Nat result below zero");
    if (r > nat_max()) throw Fault(ErrorCode::Overflow, "Nat overflow");
    return Value::nat(static_cast<std::uint64_t>(r));
}

Value checked_int(const BigInt& r) {
    static const BigInt lo = BigInt(std::numeric_limits<std::int64_t>::min());
    static const BigInt hi = BigInt(std::numeric_limits<std::int64_t>::max());
    if (r < lo || r > hi) throw Fault(ErrorCode::Overflow, "Int overflow");
    return Value::int_(static_cast<std::int64_t>(r));
}

Value checked_decimal(const BigInt& scaled) {
    BigInt mag = scaled < 0 ? BigInt(-scaled) : scaled;
    if (mag >= decimal_limit()) throw Fault(ErrorCode::Overflow, "Decimal overflow");
    return Value::decimal_scaled(scaled);
}

Value checked_float(double d) {
    if (!std::isfinite(d)) throw Fault(ErrorCode::Overflow, "Float result is not finite");
    return Value::float_(d);
}

BigInt int_of(const Value& v) {
    switch (v.kind()) {
        case ValueKind::Nat: return BigInt(v.as_nat());
        case ValueKind::Int: return BigInt(v.as_int());
        default: return v.as_big();
    }
}

// Truncating division and remainder on big integers (C semantics).
BigInt tdiv(const BigInt& a, const BigInt& b) { return a / b; }
BigInt tmod(const BigInt& a, const BigInt& b) { return a % b; }

Value rebuild_integral(ValueKind k, const BigInt& r) {
    switch (k) {
        case ValueKind::Nat: return checked_nat(r);
        case ValueKind::Int: return checked_int(r);
        case ValueKind::BigNat:
            if (r < 0) throw Fault(ErrorCode::NatUnderflow, "BigNat result below zero");
            return Value::big_nat(r);
        default: return Value::big_int(r);
    }
}

}  // namespace

const char* error_code_name(ErrorCode c) {
    for (const auto& [k, n] : kCodes) {
        if (k == c) return n;
    }
    return "?";
}

std::optional<ErrorCode> parse_error_code(const std::string& s) {
    for (const auto& [k, n] : kCodes) {
        if (s == n) return k;
    }
    return std::nullopt;
}

std::vector<ErrorCode> all_error_codes() {
    std::vector<ErrorCode> out;
    for (const auto& kc : kCodes) out.push_back(kc.first);
    return out;
}

Value arith(const std::string& op, const Value& a, const Value& b) {
    if (a.kind() != b.kind()) throw std::logic_error("arith on mismatched kinds");
    ValueKind k = a.kind();
    char o = op.at(0);
    switch (k) {
        case ValueKind::Nat:
        case ValueKind::Int:
        case ValueKind::BigNat:
        case ValueKind::BigInt: {
            BigInt x = int_of(a), y = int_of(b);
            switch (o) {
                case '+': return rebuild_integral(k, x + y);
                case '-': return rebuild_integral(k, x - y);
                case '*': return rebuild_integral(k, x * y);
                case '/':
                    if (y == 0) throw Fault(ErrorCode::DivZero, "division by zero");
                    return rebuild_integral(k, tdiv(x, y));
                case '%':
                    if (y == 0) throw Fault(ErrorCode::DivZero, "remainder by zero");
                    return rebuild_integral(k, tmod(x, y));
            }
            break;
        }
        case ValueKind::Float: {
            double x = a.as_float(), y = b.as_float();
            switch (o) {
                case '+': return checked_float(x + y);
                case '-': return checked_float(x - y);
                case '*': return checked_float(x * y);
                case '/':
                    if (y == 0.0) throw Fault(ErrorCode::DivZero, "division by zero");
                    return checked_float(x / y);
                case '%':
                    if (y == 0.0) throw Fault(ErrorCode::DivZero, "remainder by zero");
                    return checked_float(std::fmod(x, y));
            }
            break;
        }
        case ValueKind::Decimal: {
            const BigInt& x = a.as_big();
            const BigInt& y = b.as_big();
            switch (o) {
                case '+': return checked_decimal(x + y);
                case '-': return checked_decimal(x - y);
                case '*': return checked_decimal(tdiv(x * y, decimal_scale()));
                case '/':
                    if (y == 0) throw Fault(ErrorCode::DivZero, "division by zero");
                    return checked_decimal(tdiv(x * decimal_scale(), y));
                case '%':
                    if (y == 0) throw Fault(ErrorCode::DivZero, "remainder by zero");
                    return checked_decimal(tmod(x, y));
            }
            break;
        }
        case ValueKind::Rational: {
            const Rational& x = a.as_rational();
            const Rational& y = b.as_rational();
            switch (o) {
                case '+': return Value::rational(x + y);
                case '-': return Value::rational(x - y);
                case '*': return Value::rational(x * y);
                case '/':
                    if (y == 0) throw Fault(ErrorCode::DivZero, "division by zero");
                    return Value::rational(x / y);
                case '%': throw std::logic_error("remainder on Rational");
            }
            break;
        }
        default: break;
    }
    throw std::logic_error("arith on non-numeric value");
}

Value negate(const Value& a) {
    switch (a.kind()) {
        case ValueKind::Int: return checked_int(-BigInt(a.as_int()));
        case ValueKind::BigInt: return Value::big_int(-a.as_big());
        case ValueKind::Float: return Value::float_(-a.as_float());
        case ValueKind::Decimal: return Value::decimal_scaled(-a.as_big());
        case ValueKind::Rational: return Value::rational(-a.as_rational());
        default: throw std::logic_error("negation of unsigned value");
    }
}

int compare_ordered(const Value& a, const Value& b) { return key_compare(a, b); }

Value zero_of(const Type& t) {
    switch (t.kind()) {
        case TypeKind::Nat: return Value::nat(0);
        case TypeKind::Int: return Value::int_(0);
        case TypeKind::BigNat: return Value::big_nat(0);
        case TypeKind::BigInt: return Value::big_int(0);
        case TypeKind::Float: return Value::float_(0.0);
        case TypeKind::Decimal: return Value::decimal_scaled(0);
        case TypeKind::Rational: return Value::rational(0);
        default: throw std::logic_error("zero of non-numeric type " + t.str());
    }
}

Value concat_strings(const std::vector<Value>& parts) {
    std::string s;
    for (const auto& p : parts) s += p.as_string();
    return Value::string(s);
}

Value numeric_from_text(const Type& t, const std::string& text) {
    auto parse_int = [&]() -> BigInt {
        if (text.find('.') != std::string::npos) throw Fault(ErrorCode::Overflow, "fractional text for integral type");
        return BigInt(text);
    };
    switch (t.kind()) {
        case TypeKind::Nat: return checked_nat(parse_int());
        case TypeKind::Int: return checked_int(parse_int());
        case TypeKind::BigNat: {
            BigInt v = parse_int();
            if (v < 0) throw Fault(ErrorCode::NatUnderflow, "negative BigNat literal");
            return Value::big_nat(v);
        }
        case TypeKind::BigInt: return Value::big_int(parse_int());
        case TypeKind::Float: return checked_float(std::stod(text));
        case TypeKind::Decimal: {
            bool neg = !text.empty() && text[0] == '-';
            std::string body = neg ? text.substr(1) : text;
            auto dot = body.find('.');
            std::string whole = dot == std::string::npos ? body : body.substr(0, dot);
            std::string frac = dot == std::string::npos ? "" : body.substr(dot + 1);
            if (frac.size() > static_cast<std::size_t>(kDecimalDigits)) frac = frac.substr(0, kDecimalDigits);
            frac += std::string(kDecimalDigits - frac.size(), '0');
            BigInt scaled = BigInt(whole.empty() ? "0" : whole) * decimal_scale() + BigInt(frac);
            return checked_decimal(neg ? BigInt(-scaled) : scaled);
        }
        case TypeKind::Rational: {
            auto slash = text.find('/');
            BigInt num(text.substr(0, slash));
            BigInt den(slash == std::string::npos ? std::string("1") : text.substr(slash + 1));
            if (den == 0) throw Fault(ErrorCode::DivZero, "zero denominator");
            return Value::rational(Rational(num, den));
        }
        default: throw std::logic_error("numeric literal for non-numeric type " + t.str());
    }
}

const std::vector<FunctorSig>& list_functors() {
    static const std::vector<FunctorSig> v = {
        {"size", false, 1, 0, 0},   {"get", false, 1, 1, 0},    {"slice", false, 1, 2, 0},  {"concat", false, 2, 0, 0},
        {"map", false, 1, 0, 1},    {"filter", false, 1, 0, 1}, {"join", false, 2, 0, 2},   {"has", false, 1, 0, 1},
        {"find", false, 1, 0, 1},   {"count", false, 1, 0, 1},  {"sum", false, 1, 0, 0},    {"reduce", false, 1, 1, 2},
        {"allOf", false, 1, 0, 1},  {"unique", false, 1, 0, 2}, {"sumOf", false, 1, 0, 1},  {"maxArg", false, 1, 0, 1},
        {"max", false, 1, 0, 0},    {"pushBack", false, 1, 1, 0}, {"contains", false, 1, 1, 0}, {"zip", false, 2, 0, 0},
    };
    return v;
}

const std::vector<FunctorSig>& map_functors() {
    static const std::vector<FunctorSig> v = {
        {"size", true, 1, 0, 0}, {"get", true, 1, 1, 0}, {"has", true, 1, 1, 0}, {"map", true, 1, 0, 2}, {"filter", true, 1, 0, 2},
    };
    return v;
}

const FunctorSig* find_functor(bool on_map, const std::string& name) {
    for (const auto& f : on_map ? map_functors() : list_functors()) {
        if (f.name == name) return &f;
    }
    return nullptr;
}

namespace {

std::uint64_t nat_index(const Value& v) { return v.as_nat(); }

Value list_of(const Type& t, std::vector<Value> xs) { return Value::list(t, std::move(xs)); }

Type pair_type(const Type& list_type) { return list_type.args().at(0); }

Value sum_values(const std::vector<Value>& xs, const Type& elem) {
    Value acc = zero_of(elem);
    for (const auto& x : xs) acc = arith("+", acc, x);
    return acc;
}

}  // namespace

Value eval_functor(const std::string& name, bool on_map, const std::vector<Value>& args, const SpecFn& fn,
                   const Type& result) {
    if (on_map) {
        const Value& m = args.at(0);
        if (name == "size") return Value::nat(m.map_size());
        if (name == "get" || name == "has") {
            for (std::size_t i = 0; i < m.map_size(); ++i) {
                if (value_equal(m.map_key(i), args.at(1))) return name == "has" ? Value::boolean(true) : m.map_value(i);
            }
            if (name == "has") return Value::boolean(false);
            throw Fault(ErrorCode::IndexOutOfBounds, "key " + to_string(args.at(1)) + " not present");
        }
        if (name == "map" || name == "filter") {
            std::vector<std::pair<Value, Value>> out;
            for (std::size_t i = 0; i < m.map_size(); ++i) {
                Value r = fn({m.map_key(i), m.map_value(i)});
                if (name == "map") {
                    out.emplace_back(m.map_key(i), r);
                } else if (r.as_bool()) {
                    out.emplace_back(m.map_key(i), m.map_value(i));
                }
            }
            return Value::map(result, std::move(out));
        }
        throw std::logic_error("unknown map functor " + name);
    }

    const Value& l = args.at(0);
    const auto& xs = l.items();
    if (name == "size") return Value::nat(xs.size());
    if (name == "get") {
        auto i = nat_index(args.at(1));
        if (i >= xs.size()) {
            throw Fault(ErrorCode::IndexOutOfBounds, "index " + std::to_string(i) + " out of bounds for size " + std::to_string(xs.size()));
        }
        return xs[i];
    }
    if (name == "slice") {
        auto i = nat_index(args.at(1));
        auto j = nat_index(args.at(2));
        if (i > j || j > xs.size()) {
            throw Fault(ErrorCode::IndexOutOfBounds,
                        "slice [" + std::to_string(i) + ", " + std::to_string(j) + ") out of bounds for size " + std::to_string(xs.size()));
        }
        return list_of(result, std::vector<Value>(xs.begin() + static_cast<long>(i), xs.begin() + static_cast<long>(j)));
    }
    if (name == "concat") {
        std::vector<Value> out = xs;
        for (const auto& y : args.at(1).items()) out.push_back(y);
        return list_of(result, std::move(out));
    }
    if (name == "map") {
        std::vector<Value> out;
        for (const auto& x : xs) out.push_back(fn({x}));
        return list_of(result, std::move(out));
    }
    if (name == "filter") {
        std::vector<Value> out;
        for (const auto& x : xs) {
            if (fn({x}).as_bool()) out.push_back(x);
        }
        return list_of(result, std::move(out));
    }
    if (name == "join") {
        std::vector<Value> out;
        Type pt = pair_type(result);
        for (const auto& x : xs) {
            for (const auto& y : args.at(1).items()) {
                if (fn({x, y}).as_bool()) out.push_back(Value::tuple(pt, {x, y}));
            }
        }
        return list_of(result, std::move(out));
    }
    if (name == "has") {
        for (const auto& x : xs) {
            if (fn({x}).as_bool()) return Value::boolean(true);
        }
        return Value::boolean(false);
    }
    if (name == "find") {
        for (const auto& x : xs) {
            if (fn({x}).as_bool()) return x;
        }
        return Value::none();
    }
    if (name == "count") {
        std::uint64_t n = 0;
        for (const auto& x : xs) n += fn({x}).as_bool() ? 1 : 0;
        return Value::nat(n);
    }
    if (name == "sum") return sum_values(xs, result);
    if (name == "reduce") {
        Value acc = args.at(1);
        for (const auto& x : xs) acc = fn({acc, x});
        return acc;
    }
    if (name == "allOf") {
        for (const auto& x : xs) {
            if (!fn({x}).as_bool()) return Value::boolean(false);
        }
        return Value::boolean(true);
    }
    if (name == "unique") {
        for (std::size_t i = 0; i < xs.size(); ++i) {
            for (std::size_t j = i + 1; j < xs.size(); ++j) {
                if (!fn({xs[i], xs[j]}).as_bool()) return Value::boolean(false);
            }
        }
        return Value::boolean(true);
    }
    if (name == "sumOf") {
        Value acc = zero_of(result);
        for (const auto& x : xs) acc = arith("+", acc, fn({x}));
        return acc;
    }
    if (name == "maxArg" || name == "max") {
        if (xs.empty()) throw Fault(ErrorCode::EmptyCollection, name + " of an empty list");
        std::size_t best = 0;
        Value best_key = name == "max" ? xs[0] : fn({xs[0]});
        for (std::size_t i = 1; i < xs.size(); ++i) {
            Value k = name == "max" ? xs[i] : fn({xs[i]});
            if (compare_ordered(k, best_key) > 0) {
                best = i;
                best_key = k;
            }
        }
        return xs[best];
    }
    if (name == "pushBack") {
        std::vector<Value> out = xs;
        out.push_back(args.at(1));
        return list_of(result, std::move(out));
    }
    if (name == "contains") {
        for (const auto& x : xs) {
            if (value_equal(x, args.at(1))) return Value::boolean(true);
        }
        return Value::boolean(false);
    }
    if (name == "zip") {
        const auto& ys = args.at(1).items();
        std::vector<Value> out;
        Type pt = pair_type(result);
        for (std::size_t i = 0; i < std::min(xs.size(), ys.size()); ++i) out.push_back(Value::tuple(pt, {xs[i], ys[i]}));
        return list_of(result, std::move(out));
    }
    throw std::logic_error("unknown list functor " + name);
}

}  // namespace lx
