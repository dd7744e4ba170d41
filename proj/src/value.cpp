#include "lx/value.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>
#include <variant>

namespace lx {

struct ValueRep {
    ValueKind kind = ValueKind::None;
    bool b = false;
    std::uint64_t nat = 0;
    std::int64_t i = 0;
    double f = 0.0;
    BigInt big;
    Rational q;
    std::string s;  // string payload or StringOf/Typedecl name
    std::string name;
    Type type;
    std::vector<Value> items;
};

const BigInt& decimal_scale() {
    static const BigInt scale = boost::multiprecision::pow(BigInt(10), kDecimalDigits);
    return scale;
}

const BigInt& decimal_limit() {
    static const BigInt limit = BigInt(1) << 127;
    return limit;
}

namespace {

std::shared_ptr<const ValueRep> rep(ValueRep r) { return std::make_shared<const ValueRep>(std::move(r)); }

const std::shared_ptr<const ValueRep>& none_rep() {
    static const auto r = rep(ValueRep{});
    return r;
}

}  // namespace

Value::Value() : rep_(none_rep()) {}

Value Value::none() { return Value(); }

Value Value::boolean(bool b) {
    static const Value t = [] {
        ValueRep r;
        r.kind = ValueKind::Bool;
        r.b = true;
        return Value(rep(std::move(r)));
    }();
    static const Value f = [] {
        ValueRep r;
        r.kind = ValueKind::Bool;
        return Value(rep(std::move(r)));
    }();
    return b ? t : f;
}

Value Value::nat(std::uint64_t n) {
    ValueRep r;
    r.kind = ValueKind::Nat;
    r.nat = n;
    return Value(rep(std::move(r)));
}

Value Value::int_(std::int64_t n) {
    ValueRep r;
    r.kind = ValueKind::Int;
    r.i = n;
    return Value(rep(std::move(r)));
}

Value Value::big_nat(BigInt n) {
    ValueRep r;
    r.kind = ValueKind::BigNat;
    r.big = std::move(n);
    return Value(rep(std::move(r)));
}

Value Value::big_int(BigInt n) {
    ValueRep r;
    r.kind = ValueKind::BigInt;
    r.big = std::move(n);
    return Value(rep(std::move(r)));
}

Value Value::float_(double d) {
    ValueRep r;
    r.kind = ValueKind::Float;
    r.f = d;
    return Value(rep(std::move(r)));
}

Value Value::decimal_scaled(BigInt scaled) {
    ValueRep r;
    r.kind = ValueKind::Decimal;
    r.big = std::move(scaled);
    return Value(rep(std::move(r)));
}

Value Value::rational(Rational q) {
    ValueRep r;
    r.kind = ValueKind::Rational;
    r.q = std::move(q);
    return Value(rep(std::move(r)));
}

Value Value::string(std::string s) {
    ValueRep r;
    r.kind = ValueKind::String;
    r.s = std::move(s);
    return Value(rep(std::move(r)));
}

Value Value::string_of(std::string validator, std::string s) {
    ValueRep r;
    r.kind = ValueKind::StringOf;
    r.s = std::move(s);
    r.name = std::move(validator);
    return Value(rep(std::move(r)));
}

Value Value::typedecl(std::string name, Value base) {
    ValueRep r;
    r.kind = ValueKind::Typedecl;
    r.name = std::move(name);
    r.items.push_back(std::move(base));
    return Value(rep(std::move(r)));
}

Value Value::tuple(Type type, std::vector<Value> elems) {
    ValueRep r;
    r.kind = ValueKind::Tuple;
    r.type = std::move(type);
    r.items = std::move(elems);
    return Value(rep(std::move(r)));
}

Value Value::record(Type type, std::vector<Value> fields) {
    ValueRep r;
    r.kind = ValueKind::Record;
    r.type = std::move(type);
    r.items = std::move(fields);
    return Value(rep(std::move(r)));
}

Value Value::entity(Type type, std::vector<Value> fields) {
    ValueRep r;
    r.kind = ValueKind::Entity;
    r.type = std::move(type);
    r.items = std::move(fields);
    return Value(rep(std::move(r)));
}

Value Value::list(Type type, std::vector<Value> elems) {
    ValueRep r;
    r.kind = ValueKind::List;
    r.type = std::move(type);
    r.items = std::move(elems);
    return Value(rep(std::move(r)));
}

Value Value::map(Type type, std::vector<std::pair<Value, Value>> entries) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return key_compare(a.first, b.first) < 0; });
    std::vector<std::pair<Value, Value>> dedup;
    for (auto& e : entries) {
        if (!dedup.empty() && key_compare(dedup.back().first, e.first) == 0) {
            dedup.back().second = std::move(e.second);
        } else {
            dedup.push_back(std::move(e));
        }
    }
    ValueRep r;
    r.kind = ValueKind::Map;
    r.type = std::move(type);
    for (auto& [k, v] : dedup) {
        r.items.push_back(std::move(k));
        r.items.push_back(std::move(v));
    }
    return Value(rep(std::move(r)));
}

ValueKind Value::kind() const { return rep_->kind; }
bool Value::as_bool() const { return rep_->b; }
std::uint64_t Value::as_nat() const { return rep_->nat; }
std::int64_t Value::as_int() const { return rep_->i; }
const BigInt& Value::as_big() const { return rep_->big; }
double Value::as_float() const { return rep_->f; }
const Rational& Value::as_rational() const { return rep_->q; }
const std::string& Value::as_string() const { return rep_->s; }
const std::string& Value::name() const { return rep_->name; }
const Value& Value::base() const { return rep_->items.at(0); }
const Type& Value::type() const { return rep_->type; }
const std::vector<Value>& Value::items() const { return rep_->items; }
std::size_t Value::map_size() const { return rep_->items.size() / 2; }
const Value& Value::map_key(std::size_t i) const { return rep_->items.at(2 * i); }
const Value& Value::map_value(std::size_t i) const { return rep_->items.at(2 * i + 1); }

Type value_type(const Value& v) {
    switch (v.kind()) {
        case ValueKind::None: return Type::none();
        case ValueKind::Bool: return Type::boolean();
        case ValueKind::Nat: return Type::nat();
        case ValueKind::Int: return Type::int_();
        case ValueKind::BigNat: return Type::big_nat();
        case ValueKind::BigInt: return Type::big_int();
        case ValueKind::Float: return Type::float_();
        case ValueKind::Decimal: return Type::decimal();
        case ValueKind::Rational: return Type::rational();
        case ValueKind::String: return Type::string();
        case ValueKind::StringOf: return Type::string_of(v.name());
        case ValueKind::Typedecl: return Type::typedecl(v.name());
        default: return v.type();
    }
}

bool value_has_type(const Value& v, const Type& t, const TypeUniverse& u) { return subtype(value_type(v), t, u); }

std::string format_float(double d) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, d);
    std::string s(buf, res.ptr);
    if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
    return s;
}

std::string format_decimal(const BigInt& scaled) {
    BigInt mag = scaled < 0 ? BigInt(-scaled) : scaled;
    BigInt whole = mag / decimal_scale();
    BigInt frac = mag % decimal_scale();
    std::string out = (scaled < 0 ? "-" : "") + whole.str();
    std::string fs = frac.str();
    fs = std::string(kDecimalDigits - fs.size(), '0') + fs;
    while (fs.size() > 1 && fs.back() == '0') fs.pop_back();
    return out + "." + fs;
}

std::vector<std::uint32_t> utf8_decode(const std::string& s) {
    std::vector<std::uint32_t> out;
    for (std::size_t i = 0; i < s.size();) {
        auto c = static_cast<unsigned char>(s[i]);
        std::uint32_t cp = c;
        int extra = 0;
        if (c >= 0xF0) {
            cp = c & 0x07;
            extra = 3;
        } else if (c >= 0xE0) {
            cp = c & 0x0F;
            extra = 2;
        } else if (c >= 0xC0) {
            cp = c & 0x1F;
            extra = 1;
        }
        ++i;
        for (int k = 0; k < extra && i < s.size(); ++k, ++i) cp = (cp << 6) | (static_cast<unsigned char>(s[i]) & 0x3F);
        out.push_back(cp);
    }
    return out;
}

std::string utf8_encode(const std::vector<std::uint32_t>& cps) {
    std::string out;
    for (auto cp : cps) {
        if (cp < 0x80) {
            out += static_cast<char>(cp);
        } else if (cp < 0x800) {
            out += static_cast<char>(0xC0 | (cp >> 6));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else if (cp < 0x10000) {
            out += static_cast<char>(0xE0 | (cp >> 12));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        } else {
            out += static_cast<char>(0xF0 | (cp >> 18));
            out += static_cast<char>(0x80 | ((cp >> 12) & 0x3F));
            out += static_cast<char>(0x80 | ((cp >> 6) & 0x3F));
            out += static_cast<char>(0x80 | (cp & 0x3F));
        }
    }
    return out;
}

std::size_t utf8_length(const std::string& s) {
    std::size_t n = 0;
    for (unsigned char c : s) {
        if ((c & 0xC0) != 0x80) ++n;
    }
    return n;
}

namespace {

std::string quote(const std::string& s) {
    std::string out = "\"";
    for (auto cp : utf8_decode(s)) {
        switch (cp) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default:
                if (cp < 0x20 || cp == 0x7F) {
                    char buf[16];
                    std::snprintf(buf, sizeof buf, "\\u{%x}", cp);
                    out += buf;
                } else {
                    out += utf8_encode({cp});
                }
        }
    }
    return out + "\"";
}

std::string join_values(const std::vector<Value>& vs) {
    std::string out;
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (i) out += ", ";
        out += to_string(vs[i]);
    }
    return out;
}

int kind_rank(ValueKind k) {
    switch (k) {
        case ValueKind::None: return 0;
        case ValueKind::Bool: return 1;
        case ValueKind::Nat:
        case ValueKind::Int:
        case ValueKind::BigNat:
        case ValueKind::BigInt:
        case ValueKind::Float:
        case ValueKind::Decimal:
        case ValueKind::Rational: return 2;
        case ValueKind::String:
        case ValueKind::StringOf: return 3;
        case ValueKind::Typedecl: return 4;
        case ValueKind::Tuple: return 5;
        case ValueKind::Record: return 6;
        case ValueKind::Entity: return 7;
        case ValueKind::List: return 8;
        case ValueKind::Map: return 9;
    }
    return 10;
}

Rational numeric_as_rational(const Value& v) {
    switch (v.kind()) {
        case ValueKind::Nat: return Rational(BigInt(v.as_nat()));
        case ValueKind::Int: return Rational(BigInt(v.as_int()));
        case ValueKind::BigNat:
        case ValueKind::BigInt: return Rational(v.as_big());
        case ValueKind::Float: return Rational(v.as_float());
        case ValueKind::Decimal: return Rational(v.as_big(), decimal_scale());
        case ValueKind::Rational: return v.as_rational();
        default: return Rational(0);
    }
}

template <class T>
int cmp3(const T& a, const T& b) {
    return a < b ? -1 : (b < a ? 1 : 0);
}

}  // namespace

std::string to_string(const Value& v) {
    switch (v.kind()) {
        case ValueKind::None: return "none";
        case ValueKind::Bool: return v.as_bool() ? "true" : "false";
        case ValueKind::Nat: return std::to_string(v.as_nat()) + "n";
        case ValueKind::Int: return std::to_string(v.as_int()) + "i";
        case ValueKind::BigNat: return v.as_big().str() + "N";
        case ValueKind::BigInt: return v.as_big().str() + "I";
        case ValueKind::Float: return format_float(v.as_float()) + "f";
        case ValueKind::Decimal: return format_decimal(v.as_big()) + "d";
        case ValueKind::Rational: {
            const auto& q = v.as_rational();
            return boost::multiprecision::numerator(q).str() + "/" + boost::multiprecision::denominator(q).str() + "R";
        }
        case ValueKind::String: return quote(v.as_string());
        case ValueKind::StringOf: return quote(v.as_string()) + v.name();
        case ValueKind::Typedecl: {
            const Value& b = v.base();
            if (b.kind() == ValueKind::String || b.kind() == ValueKind::StringOf) return quote(b.as_string()) + v.name();
            return to_string(b) + "_" + v.name();
        }
        case ValueKind::Tuple: return "[" + join_values(v.items()) + "]";
        case ValueKind::Record: {
            std::string out = "{";
            const auto& names = v.type().field_names();
            for (std::size_t i = 0; i < v.items().size(); ++i) {
                if (i) out += ", ";
                out += names[i] + "=" + to_string(v.items()[i]);
            }
            return out + "}";
        }
        case ValueKind::Entity: {
            const Type& t = v.type();
            if (t.kind() == TypeKind::Ok || t.kind() == TypeKind::Err) return t.str() + "{" + join_values(v.items()) + "}";
            return t.str() + "{" + join_values(v.items()) + "}";
        }
        case ValueKind::List: return v.type().str() + "{" + join_values(v.items()) + "}";
        case ValueKind::Map: {
            std::string out = v.type().str() + "{";
            for (std::size_t i = 0; i < v.map_size(); ++i) {
                if (i) out += ", ";
                out += to_string(v.map_key(i)) + " => " + to_string(v.map_value(i));
            }
            return out + "}";
        }
    }
    return "?";
}

int key_compare(const Value& a, const Value& b) {
    int ra = kind_rank(a.kind());
    int rb = kind_rank(b.kind());
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (ra) {
        case 0: return 0;
        case 1: return cmp3(a.as_bool(), b.as_bool());
        case 2: {
            int c = cmp3(numeric_as_rational(a), numeric_as_rational(b));
            if (c != 0) return c;
            return cmp3(static_cast<int>(a.kind()), static_cast<int>(b.kind()));
        }
        case 3: {
            int c = a.as_string().compare(b.as_string());
            if (c != 0) return c < 0 ? -1 : 1;
            c = cmp3(static_cast<int>(a.kind()), static_cast<int>(b.kind()));
            if (c != 0) return c;
            return cmp3(a.name(), b.name());
        }
        case 4: {
            int c = cmp3(a.name(), b.name());
            if (c != 0) return c;
            return key_compare(a.base(), b.base());
        }
        default: {
            int c = cmp3(a.type().str(), b.type().str());
            if (c != 0) return c;
            const auto& xs = a.items();
            const auto& ys = b.items();
            for (std::size_t i = 0; i < std::min(xs.size(), ys.size()); ++i) {
                c = key_compare(xs[i], ys[i]);
                if (c != 0) return c;
            }
            return cmp3(xs.size(), ys.size());
        }
    }
}

bool value_equal(const Value& a, const Value& b) {
    if (a.kind() != b.kind()) return false;
    if (a.kind() == ValueKind::Float) {
        return a.as_float() == b.as_float() || (std::isnan(a.as_float()) && std::isnan(b.as_float()));
    }
    return key_compare(a, b) == 0;
}

}  // namespace lx
