#include "lx/types.hpp"

#include <algorithm>
#include <functional>

namespace lx {

struct TypeNode {
    TypeKind kind = TypeKind::None;
    std::string name;
    std::vector<Type> args;
    std::vector<std::string> field_names;
    std::string repr;
};

namespace {

std::string render_node(const TypeNode& n) {
    auto join = [](const std::vector<Type>& ts, const char* sep) {
        std::string s;
        for (std::size_t i = 0; i < ts.size(); ++i) {
            if (i) s += sep;
            s += ts[i].str();
        }
        return s;
    };
    switch (n.kind) {
        case TypeKind::StringOf:
            return "StringOf<" + n.name + ">";
        case TypeKind::Typedecl:
        case TypeKind::Nominal:
            return n.name;
        case TypeKind::Tuple:
            return "[" + join(n.args, ",") + "]";
        case TypeKind::Record: {
            std::string s = "{";
            for (std::size_t i = 0; i < n.args.size(); ++i) {
                if (i) s += ",";
                s += n.field_names[i] + ":" + n.args[i].str();
            }
            return s + "}";
        }
        case TypeKind::Union:
            return join(n.args, "|");
        case TypeKind::List:
            return "List<" + n.args[0].str() + ">";
        case TypeKind::Map:
            return "Map<" + n.args[0].str() + "," + n.args[1].str() + ">";
        case TypeKind::Ok:
            return "Ok<" + n.args[0].str() + ">";
        case TypeKind::Err:
            return "Err<" + n.args[0].str() + ">";
        default:
            return type_kind_name(n.kind);
    }
}

}  // namespace

Type make_type(TypeNode n) {
    n.repr = render_node(n);
    return Type(std::make_shared<const TypeNode>(std::move(n)));
}

namespace {

Type prim(TypeKind k) {
    TypeNode n;
    n.kind = k;
    return make_type(std::move(n));
}

const Type& cached_prim(TypeKind k) {
    static const std::vector<Type> table = [] {
        std::vector<Type> t;
        for (int i = 0; i <= static_cast<int>(TypeKind::ASCIIString); ++i) t.push_back(prim(static_cast<TypeKind>(i)));
        return t;
    }();
    return table[static_cast<std::size_t>(k)];
}

}  // namespace

Type::Type() : Type(cached_prim(TypeKind::None)) {}

Type Type::never() { return cached_prim(TypeKind::Never); }
Type Type::none() { return cached_prim(TypeKind::None); }
Type Type::boolean() { return cached_prim(TypeKind::Bool); }
Type Type::nat() { return cached_prim(TypeKind::Nat); }
Type Type::int_() { return cached_prim(TypeKind::Int); }
Type Type::big_nat() { return cached_prim(TypeKind::BigNat); }
Type Type::big_int() { return cached_prim(TypeKind::BigInt); }
Type Type::float_() { return cached_prim(TypeKind::Float); }
Type Type::decimal() { return cached_prim(TypeKind::Decimal); }
Type Type::rational() { return cached_prim(TypeKind::Rational); }
Type Type::string() { return cached_prim(TypeKind::String); }
Type Type::ascii_string() { return cached_prim(TypeKind::ASCIIString); }
Type Type::primitive(TypeKind kind) { return cached_prim(kind); }

Type Type::string_of(std::string validator) {
    TypeNode n;
    n.kind = TypeKind::StringOf;
    n.name = std::move(validator);
    return make_type(std::move(n));
}

Type Type::typedecl(std::string name) {
    TypeNode n;
    n.kind = TypeKind::Typedecl;
    n.name = std::move(name);
    return make_type(std::move(n));
}

Type Type::nominal(std::string name) {
    TypeNode n;
    n.kind = TypeKind::Nominal;
    n.name = std::move(name);
    return make_type(std::move(n));
}

Type Type::tuple(std::vector<Type> elems) {
    TypeNode n;
    n.kind = TypeKind::Tuple;
    n.args = std::move(elems);
    return make_type(std::move(n));
}

Type Type::record(std::vector<std::pair<std::string, Type>> fields) {
    std::sort(fields.begin(), fields.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    TypeNode n;
    n.kind = TypeKind::Record;
    for (auto& [k, v] : fields) {
        n.field_names.push_back(k);
        n.args.push_back(v);
    }
    return make_type(std::move(n));
}

Type Type::union_of(std::vector<Type> members) {
    std::vector<Type> flat;
    for (const auto& m : members) {
        if (m.kind() == TypeKind::Union) {
            flat.insert(flat.end(), m.args().begin(), m.args().end());
        } else if (m.kind() != TypeKind::Never) {
            flat.push_back(m);
        }
    }
    std::sort(flat.begin(), flat.end());
    flat.erase(std::unique(flat.begin(), flat.end()), flat.end());
    if (flat.empty()) return never();
    if (flat.size() == 1) return flat[0];
    TypeNode n;
    n.kind = TypeKind::Union;
    n.args = std::move(flat);
    return make_type(std::move(n));
}

Type Type::list(Type elem) {
    TypeNode n;
    n.kind = TypeKind::List;
    n.args = {std::move(elem)};
    return make_type(std::move(n));
}

Type Type::map(Type key, Type value) {
    TypeNode n;
    n.kind = TypeKind::Map;
    n.args = {std::move(key), std::move(value)};
    return make_type(std::move(n));
}

Type Type::ok(Type value) {
    TypeNode n;
    n.kind = TypeKind::Ok;
    n.args = {std::move(value)};
    return make_type(std::move(n));
}

Type Type::err(Type value) {
    TypeNode n;
    n.kind = TypeKind::Err;
    n.args = {std::move(value)};
    return make_type(std::move(n));
}

Type Type::result(Type ok_type, Type err_type) { return union_of({ok(std::move(ok_type)), err(std::move(err_type))}); }

TypeKind Type::kind() const { return node_->kind; }
const std::string& Type::name() const { return node_->name; }
const std::vector<Type>& Type::args() const { return node_->args; }
const std::vector<std::string>& Type::field_names() const { return node_->field_names; }
const std::string& Type::str() const { return node_->repr; }

bool Type::is_numeric() const {
    switch (kind()) {
        case TypeKind::Nat:
        case TypeKind::Int:
        case TypeKind::BigNat:
        case TypeKind::BigInt:
        case TypeKind::Float:
        case TypeKind::Decimal:
        case TypeKind::Rational:
            return true;
        default:
            return false;
    }
}

bool Type::is_integral() const {
    switch (kind()) {
        case TypeKind::Nat:
        case TypeKind::Int:
        case TypeKind::BigNat:
        case TypeKind::BigInt:
            return true;
        default:
            return false;
    }
}

bool Type::is_signed() const {
    return is_numeric() && kind() != TypeKind::Nat && kind() != TypeKind::BigNat;
}

std::vector<Type> Type::members() const {
    if (kind() == TypeKind::Union) return args();
    if (kind() == TypeKind::Never) return {};
    return {*this};
}

std::optional<Type> Type::record_field(const std::string& n) const {
    if (kind() != TypeKind::Record) return std::nullopt;
    for (std::size_t i = 0; i < field_names().size(); ++i) {
        if (field_names()[i] == n) return args()[i];
    }
    return std::nullopt;
}

bool Type::operator==(const Type& o) const { return node_ == o.node_ || node_->repr == o.node_->repr; }
bool Type::operator<(const Type& o) const { return node_->repr < o.node_->repr; }

const char* type_kind_name(TypeKind k) {
    switch (k) {
        case TypeKind::Never: return "Never";
        case TypeKind::None: return "None";
        case TypeKind::Bool: return "Bool";
        case TypeKind::Nat: return "Nat";
        case TypeKind::Int: return "Int";
        case TypeKind::BigNat: return "BigNat";
        case TypeKind::BigInt: return "BigInt";
        case TypeKind::Float: return "Float";
        case TypeKind::Decimal: return "Decimal";
        case TypeKind::Rational: return "Rational";
        case TypeKind::String: return "String";
        case TypeKind::ASCIIString: return "ASCIIString";
        case TypeKind::StringOf: return "StringOf";
        case TypeKind::Typedecl: return "Typedecl";
        case TypeKind::Tuple: return "Tuple";
        case TypeKind::Record: return "Record";
        case TypeKind::Union: return "Union";
        case TypeKind::Nominal: return "Nominal";
        case TypeKind::List: return "List";
        case TypeKind::Map: return "Map";
        case TypeKind::Ok: return "Ok";
        case TypeKind::Err: return "Err";
    }
    return "?";
}

const char* check_level_name(CheckLevel l) {
    switch (l) {
        case CheckLevel::Spec: return "spec";
        case CheckLevel::Debug: return "debug";
        case CheckLevel::Test: return "test";
        case CheckLevel::Release: return "release";
        case CheckLevel::Safety: return "safety";
    }
    return "release";
}

std::optional<CheckLevel> parse_check_level(const std::string& s) {
    if (s == "spec") return CheckLevel::Spec;
    if (s == "debug") return CheckLevel::Debug;
    if (s == "test") return CheckLevel::Test;
    if (s == "release") return CheckLevel::Release;
    if (s == "safety") return CheckLevel::Safety;
    return std::nullopt;
}

const FieldInfo* NominalInfo::field(const std::string& n) const {
    for (const auto& f : fields) {
        if (f.name == n) return &f;
    }
    return nullptr;
}

const NominalInfo* TypeUniverse::nominal(const std::string& n) const {
    auto it = nominals.find(n);
    return it == nominals.end() ? nullptr : &it->second;
}

const TypedeclInfo* TypeUniverse::typedecl(const std::string& n) const {
    auto it = typedecls.find(n);
    return it == typedecls.end() ? nullptr : &it->second;
}

const ValidatorInfo* TypeUniverse::validator(const std::string& n) const {
    auto it = validators.find(n);
    return it == validators.end() ? nullptr : &it->second;
}

bool TypeUniverse::is_concept(const std::string& n) const {
    auto* info = nominal(n);
    return info && info->is_concept;
}

bool TypeUniverse::is_entity(const std::string& n) const {
    auto* info = nominal(n);
    return info && !info->is_concept;
}

bool TypeUniverse::provides(const std::string& from, const std::string& concept_name) const {
    if (from == concept_name) return true;
    std::set<std::string> seen;
    std::vector<std::string> work{from};
    while (!work.empty()) {
        auto cur = work.back();
        work.pop_back();
        if (!seen.insert(cur).second) continue;
        auto* info = nominal(cur);
        if (!info) continue;
        for (const auto& p : info->provides) {
            if (p == concept_name) return true;
            work.push_back(p);
        }
    }
    return false;
}

std::vector<std::string> TypeUniverse::supertypes(const std::string& n) const {
    std::set<std::string> out;
    std::vector<std::string> work{n};
    while (!work.empty()) {
        auto cur = work.back();
        work.pop_back();
        auto* info = nominal(cur);
        if (!info) continue;
        for (const auto& p : info->provides) {
            if (out.insert(p).second) work.push_back(p);
        }
    }
    out.erase(n);
    return {out.begin(), out.end()};
}

std::vector<std::string> TypeUniverse::entities_providing(const std::string& concept_name) const {
    std::vector<std::string> out;
    for (const auto& [name, info] : nominals) {
        if (!info.is_concept && provides(name, concept_name)) out.push_back(name);
    }
    return out;
}

namespace {

void collect_checks(const TypeUniverse& u, const std::string& type, bool validates, std::set<std::string>& seen,
                    std::vector<CheckRef>& out) {
    if (!seen.insert(type).second) return;
    auto* info = u.nominal(type);
    if (!info) return;
    for (const auto& p : info->provides) collect_checks(u, p, validates, seen, out);
    const auto& own = validates ? info->validates : info->invariants;
    out.insert(out.end(), own.begin(), own.end());
}

}  // namespace

std::vector<CheckRef> TypeUniverse::construction_invariants(const std::string& entity) const {
    std::set<std::string> seen;
    std::vector<CheckRef> out;
    collect_checks(*this, entity, false, seen, out);
    return out;
}

std::vector<CheckRef> TypeUniverse::construction_validates(const std::string& entity) const {
    std::set<std::string> seen;
    std::vector<CheckRef> out;
    collect_checks(*this, entity, true, seen, out);
    return out;
}

const MethodInfo* TypeUniverse::find_method(const std::string& type_name, const std::string& method) const {
    auto* info = nominal(type_name);
    if (!info) return nullptr;
    auto it = info->methods.find(method);
    if (it != info->methods.end()) return &it->second;
    for (const auto& p : info->provides) {
        if (auto* m = find_method(p, method)) return m;
    }
    return nullptr;
}

Type TypeUniverse::typedecl_base(const std::string& n) const {
    auto* td = typedecl(n);
    return td ? td->base : Type::never();
}

std::vector<Type> TypeUniverse::concrete_members(const Type& t) const {
    std::vector<Type> out;
    for (const auto& m : t.members()) {
        if (m.kind() == TypeKind::Nominal && is_concept(m.name())) {
            for (const auto& e : entities_providing(m.name())) out.push_back(Type::nominal(e));
        } else {
            out.push_back(m);
        }
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

bool subtype(const Type& a, const Type& b, const TypeUniverse& u) {
    if (a == b) return true;
    if (a.is_never()) return true;
    if (a.is_union()) {
        for (const auto& m : a.args()) {
            if (!subtype(m, b, u)) return false;
        }
        return true;
    }
    if (b.is_union()) {
        for (const auto& m : b.args()) {
            if (subtype(a, m, u)) return true;
        }
        return false;
    }
    if (a.kind() == TypeKind::Nominal && b.kind() == TypeKind::Nominal) {
        return u.is_concept(b.name()) && u.provides(a.name(), b.name());
    }
    return false;
}

Type join_types(const Type& a, const Type& b) { return Type::union_of({a, b}); }

bool is_key_type(const Type& t, const TypeUniverse& u) {
    switch (t.kind()) {
        case TypeKind::None:
        case TypeKind::Bool:
        case TypeKind::Nat:
        case TypeKind::Int:
        case TypeKind::BigNat:
        case TypeKind::BigInt:
        case TypeKind::String:
        case TypeKind::ASCIIString:
        case TypeKind::StringOf:
            return true;
        case TypeKind::Typedecl: {
            auto* td = u.typedecl(t.name());
            return td && is_key_type(td->base, u);
        }
        default:
            return false;
    }
}

std::optional<Type> numeric_base(const Type& t, const TypeUniverse& u) {
    if (t.is_numeric()) return t;
    if (t.kind() == TypeKind::Typedecl) {
        auto* td = u.typedecl(t.name());
        if (td && td->base.is_numeric()) return td->base;
    }
    return std::nullopt;
}

std::string flow_test_str(const FlowTest& f) {
    std::string s = f.negated ? "!" : "";
    switch (f.kind) {
        case FlowTest::Kind::None: return s + "none";
        case FlowTest::Kind::Some: return s + "some";
        case FlowTest::Kind::Ok: return s + "ok";
        case FlowTest::Kind::Err: return s + "err";
        case FlowTest::Kind::Result: return s + "result";
        case FlowTest::Kind::Type: return s + "<" + f.type.str() + ">";
        case FlowTest::Kind::Literal: return s + "[" + f.type.str() + "]";
    }
    return s;
}

FlowSplit flow_narrow(const Type& subject, const FlowTest& test, const TypeUniverse& u) {
    auto members = u.concrete_members(subject);
    std::vector<Type> pass;
    std::vector<Type> fail;
    auto split = [&](const std::function<bool(const Type&)>& pred) {
        for (const auto& m : members) (pred(m) ? pass : fail).push_back(m);
    };
    switch (test.kind) {
        case FlowTest::Kind::None:
            split([](const Type& m) { return m.kind() == TypeKind::None; });
            break;
        case FlowTest::Kind::Some:
            split([](const Type& m) { return m.kind() != TypeKind::None; });
            break;
        case FlowTest::Kind::Ok:
            split([](const Type& m) { return m.kind() == TypeKind::Ok; });
            break;
        case FlowTest::Kind::Err:
            split([](const Type& m) { return m.kind() == TypeKind::Err; });
            break;
        case FlowTest::Kind::Result:
            split([](const Type& m) { return m.kind() == TypeKind::Ok || m.kind() == TypeKind::Err; });
            break;
        case FlowTest::Kind::Type:
            split([&](const Type& m) { return subtype(m, test.type, u); });
            break;
        case FlowTest::Kind::Literal:
            for (const auto& m : members) {
                if (m == test.type) pass.push_back(m);
                fail.push_back(m);
            }
            break;
    }
    FlowSplit out{Type::union_of(pass), Type::union_of(fail)};
    if (test.negated) std::swap(out.pass, out.fail);
    return out;
}

}  // namespace lx
