#include <functional>
#include <set>

#include "lx/check.hpp"
#include "lx/regex.hpp"
#include "universe_impl.hpp"

namespace lx {

namespace {

std::optional<Type> primitive_named(const std::string& n) {
    static const std::map<std::string, Type> table = {
        {"None", Type::none()},       {"Bool", Type::boolean()},        {"Nat", Type::nat()},
        {"Int", Type::int_()},        {"BigNat", Type::big_nat()},      {"BigInt", Type::big_int()},
        {"Float", Type::float_()},    {"Decimal", Type::decimal()},     {"Rational", Type::rational()},
        {"String", Type::string()},   {"ASCIIString", Type::ascii_string()}, {"Never", Type::never()},
    };
    auto it = table.find(n);
    if (it == table.end()) return std::nullopt;
    return it->second;
}

}  // namespace

std::optional<Type> resolve_type_expr(const TypeExpr& t, const TypeUniverse& u, Diagnostics& diags) {
    auto fail = [&](const std::string& msg) -> std::optional<Type> {
        diags.error(t.pos, msg);
        return std::nullopt;
    };
    auto resolve_args = [&]() -> std::optional<std::vector<Type>> {
        std::vector<Type> out;
        for (const auto& a : t.args) {
            auto r = resolve_type_expr(*a, u, diags);
            if (!r) return std::nullopt;
            out.push_back(*r);
        }
        return out;
    };
    switch (t.kind) {
        case TypeExpr::Kind::Name: {
            if (t.name == "Never") return fail("type Never cannot be written");
            if (auto p = primitive_named(t.name)) return p;
            if (u.nominal(t.name)) return Type::nominal(t.name);
            if (u.typedecl(t.name)) return Type::typedecl(t.name);
            if (u.validator(t.name)) return fail("validator " + t.name + " is not a type; use StringOf<" + t.name + ">");
            return fail("unknown type " + t.name);
        }
        case TypeExpr::Kind::Generic: {
            auto want = [&](std::size_t n) -> bool {
                if (t.args.size() == n) return true;
                diags.error(t.pos, t.name + " expects " + std::to_string(n) + " type argument" + (n == 1 ? "" : "s"));
                return false;
            };
            if (t.name == "StringOf") {
                if (!want(1)) return std::nullopt;
                const auto& a = *t.args[0];
                if (a.kind != TypeExpr::Kind::Name || !u.validator(a.name)) {
                    return fail("StringOf expects a validator name");
                }
                return Type::string_of(a.name);
            }
            auto args = resolve_args();
            if (!args) return std::nullopt;
            if (t.name == "List") {
                if (!want(1)) return std::nullopt;
                return Type::list((*args)[0]);
            }
            if (t.name == "Map") {
                if (!want(2)) return std::nullopt;
                if (!is_key_type((*args)[0], u)) return fail("map key type " + (*args)[0].str() + " is not a key type");
                return Type::map((*args)[0], (*args)[1]);
            }
            if (t.name == "Ok") {
                if (!want(1)) return std::nullopt;
                return Type::ok((*args)[0]);
            }
            if (t.name == "Err") {
                if (!want(1)) return std::nullopt;
                return Type::err((*args)[0]);
            }
            if (t.name == "Result") {
                if (!want(2)) return std::nullopt;
                return Type::result((*args)[0], (*args)[1]);
            }
            return fail("unknown generic type " + t.name);
        }
        case TypeExpr::Kind::Tuple: {
            auto args = resolve_args();
            if (!args) return std::nullopt;
            return Type::tuple(*args);
        }
        case TypeExpr::Kind::Record: {
            auto args = resolve_args();
            if (!args) return std::nullopt;
            std::vector<std::pair<std::string, Type>> fields;
            std::set<std::string> seen;
            for (std::size_t i = 0; i < args->size(); ++i) {
                if (!seen.insert(t.fields[i]).second) return fail("duplicate record field " + t.fields[i]);
                fields.emplace_back(t.fields[i], (*args)[i]);
            }
            return Type::record(fields);
        }
        case TypeExpr::Kind::Union: {
            auto args = resolve_args();
            if (!args) return std::nullopt;
            return Type::union_of(*args);
        }
    }
    return std::nullopt;
}

namespace {

class UniverseBuilder {
public:
    UniverseBuilder(const SurfaceProgram& p, Diagnostics& d) : prog_(p), diags_(d) {}

    TypeUniverse run() {
        declare_names();
        resolve_typedecls();
        build_nominals();
        check_provides();
        compute_fields();
        check_methods();
        return std::move(u_);
    }

private:
    const SurfaceProgram& prog_;
    Diagnostics& diags_;
    TypeUniverse u_;
    std::set<std::string> taken_;
    // member lists per nominal, with the declaring decl
    std::map<std::string, std::vector<const Member*>> members_;
    std::map<std::string, SourcePos> provides_pos_;

    bool claim(const std::string& name, const SourcePos& pos) {
        if (primitive_named(name) || name == "List" || name == "Map" || name == "StringOf" || name == "Ok" ||
            name == "Err" || name == "Result") {
            diags_.error(pos, "cannot redefine builtin type " + name);
            return false;
        }
        if (!taken_.insert(name).second) {
            diags_.error(pos, "duplicate declaration of " + name);
            return false;
        }
        return true;
    }

    void declare_names() {
        for (const auto& d : prog_.decls) {
            switch (d.kind) {
                case DeclKind::Validator:
                    if (claim(d.name, d.pos)) {
                        std::string err;
                        if (!Regex::parse(d.regex, &err)) diags_.error(d.pos, "invalid validator regex: " + err);
                        u_.validators[d.name] = ValidatorInfo{d.name, d.regex, d.pos};
                    }
                    break;
                case DeclKind::Typedecl:
                    if (claim(d.name, d.pos)) {
                        TypedeclInfo info;
                        info.name = d.name;
                        info.pos = d.pos;
                        u_.typedecls[d.name] = info;
                    }
                    break;
                case DeclKind::Concept:
                case DeclKind::Entity:
                    if (claim(d.name, d.pos)) {
                        NominalInfo info;
                        info.name = d.name;
                        info.is_concept = d.kind == DeclKind::Concept;
                        info.provides = d.provides;
                        info.pos = d.pos;
                        u_.nominals[d.name] = info;
                        for (const auto& m : d.members) members_[d.name].push_back(&m);
                    }
                    break;
                case DeclKind::Datatype:
                    if (claim(d.name, d.pos)) {
                        NominalInfo info;
                        info.name = d.name;
                        info.is_concept = true;
                        info.provides = d.provides;
                        info.pos = d.pos;
                        u_.nominals[d.name] = info;
                        for (const auto& m : d.using_members) members_[d.name].push_back(&m);
                        for (const auto& m : d.members) members_[d.name].push_back(&m);
                        if (d.cases.empty()) diags_.error(d.pos, "datatype " + d.name + " has no cases");
                        for (const auto& c : d.cases) {
                            if (!claim(c.name, c.pos)) continue;
                            NominalInfo ci;
                            ci.name = c.name;
                            ci.provides = {d.name};
                            ci.pos = c.pos;
                            u_.nominals[c.name] = ci;
                            for (const auto& m : c.members) members_[c.name].push_back(&m);
                        }
                    }
                    break;
                default:
                    break;
            }
        }
    }

    void resolve_typedecls() {
        for (const auto& d : prog_.decls) {
            if (d.kind != DeclKind::Typedecl || !u_.typedecls.count(d.name)) continue;
            auto& info = u_.typedecls[d.name];
            auto base = resolve_type_expr(*d.type, u_, diags_);
            if (!base) {
                info.base = Type::never();
                continue;
            }
            bool ok = base->kind() == TypeKind::StringOf ||
                      (base->kind() >= TypeKind::Bool && base->kind() <= TypeKind::ASCIIString);
            if (!ok) diags_.error(d.pos, "typedecl base must be a primitive or StringOf type, found " + base->str());
            info.base = *base;
            int k = 0;
            for (const auto& m : d.members) {
                if (m.kind != MemberKind::Invariant) {
                    diags_.error(m.pos, "typedecl members must be invariants");
                    continue;
                }
                info.invariants.push_back(
                    CheckRef{m.level.value_or(CheckLevel::Release), d.name + "$inv$" + std::to_string(k++), m.pos});
            }
        }
    }

    void build_nominals() {
        for (auto& [name, info] : u_.nominals) {
            int ninv = 0, nval = 0;
            std::set<std::string> member_names;
            for (const Member* m : members_[name]) {
                auto dup = [&](const std::string& n) {
                    if (!member_names.insert(n).second) {
                        diags_.error(m->pos, "duplicate member " + n + " in " + name);
                        return true;
                    }
                    return false;
                };
                switch (m->kind) {
                    case MemberKind::Field: {
                        if (dup(m->name)) break;
                        auto t = resolve_type_expr(*m->type, u_, diags_);
                        info.own_fields.push_back(FieldInfo{m->name, t.value_or(Type::never()), m->is_private, name, m->pos});
                        break;
                    }
                    case MemberKind::Const:
                        if (dup(m->name)) break;
                        info.consts.push_back(m->name);
                        break;
                    case MemberKind::Method:
                    case MemberKind::Function: {
                        const auto& fn = *m->fn;
                        if (dup(fn.name)) break;
                        MethodInfo mi;
                        mi.name = fn.name;
                        mi.declaring_type = name;
                        mi.is_abstract = fn.is_abstract;
                        mi.is_override = fn.is_override;
                        mi.is_recursive = fn.is_recursive;
                        mi.is_ref = fn.is_ref;
                        mi.is_static = m->kind == MemberKind::Function;
                        mi.pos = fn.pos;
                        for (const auto& p : fn.params) {
                            auto t = resolve_type_expr(*p.type, u_, diags_);
                            mi.params.emplace_back(p.name, t.value_or(Type::never()));
                        }
                        if (fn.result) {
                            auto t = resolve_type_expr(*fn.result, u_, diags_);
                            mi.result = t.value_or(Type::never());
                        } else if (mi.is_abstract) {
                            diags_.error(fn.pos, "abstract method " + fn.name + " needs a result type");
                        }
                        if (mi.is_abstract && !info.is_concept) {
                            diags_.error(fn.pos, "abstract method " + fn.name + " in entity " + name);
                        }
                        if (mi.is_ref && (mi.is_static || info.is_concept)) {
                            diags_.error(fn.pos, "ref is only allowed on entity methods");
                        }
                        info.methods[fn.name] = mi;
                        break;
                    }
                    case MemberKind::Invariant:
                        info.invariants.push_back(
                            CheckRef{m->level.value_or(CheckLevel::Release), name + "$inv$" + std::to_string(ninv++), m->pos});
                        break;
                    case MemberKind::Validate:
                        info.validates.push_back(
                            CheckRef{m->level.value_or(CheckLevel::Release), name + "$val$" + std::to_string(nval++), m->pos});
                        break;
                }
            }
        }
    }

    void check_provides() {
        for (auto& [name, info] : u_.nominals) {
            std::vector<std::string> kept;
            for (const auto& p : info.provides) {
                auto* target = u_.nominal(p);
                if (!target) {
                    diags_.error(info.pos, name + " provides unknown concept " + p);
                } else if (!target->is_concept) {
                    diags_.error(info.pos, name + " cannot provide entity " + p + "; entities have no subtypes");
                } else {
                    kept.push_back(p);
                }
            }
            info.provides = kept;
        }
        // Cycle detection over the provides graph.
        std::map<std::string, int> state;
        std::function<bool(const std::string&)> visit = [&](const std::string& n) {
            state[n] = 1;
            for (const auto& p : u_.nominals[n].provides) {
                if (state[p] == 1) {
                    diags_.error(u_.nominals[n].pos, "cycle in provides involving " + n + " and " + p);
                    return false;
                }
                if (state[p] == 0 && !visit(p)) return false;
            }
            state[n] = 2;
            return true;
        };
        bool cyclic = false;
        for (const auto& [name, info] : u_.nominals) {
            if (state[name] == 0 && !visit(name)) cyclic = true;
        }
        if (cyclic) {
            for (auto& [name, info] : u_.nominals) info.provides.clear();
        }
    }

    void compute_fields() {
        std::set<std::string> done;
        std::function<void(const std::string&)> fill = [&](const std::string& n) {
            if (!done.insert(n).second) return;
            auto& info = u_.nominals[n];
            std::vector<FieldInfo> all;
            auto add = [&](const FieldInfo& f) {
                for (const auto& e : all) {
                    if (e.name == f.name) {
                        if (e.type != f.type) {
                            diags_.error(info.pos, "field " + f.name + " inherited with conflicting types in " + n);
                        }
                        return;
                    }
                }
                all.push_back(f);
            };
            for (const auto& p : info.provides) {
                fill(p);
                for (const auto& f : u_.nominals[p].fields) add(f);
            }
            for (const auto& f : info.own_fields) {
                for (const auto& e : all) {
                    if (e.name == f.name) diags_.error(f.pos, "field " + f.name + " redeclares an inherited field");
                }
                add(f);
            }
            info.fields = all;
        };
        for (const auto& [name, info] : u_.nominals) fill(name);
    }

    void check_methods() {
        for (auto& [name, info] : u_.nominals) {
            for (auto& [mname, mi] : info.methods) {
                const MethodInfo* inherited = nullptr;
                for (const auto& p : info.provides) {
                    if (auto* m = u_.find_method(p, mname)) inherited = m;
                }
                if (mi.is_override && !inherited) {
                    diags_.error(mi.pos, "method " + mname + " is marked override but nothing is inherited");
                } else if (!mi.is_override && inherited) {
                    diags_.error(mi.pos, "method " + mname + " overrides " + inherited->declaring_type + "::" + mname +
                                             " without override");
                }
                if (inherited && mi.is_override) {
                    bool same = inherited->params.size() == mi.params.size();
                    for (std::size_t i = 0; same && i < mi.params.size(); ++i) {
                        same = inherited->params[i].second == mi.params[i].second;
                    }
                    if (!same) diags_.error(mi.pos, "override of " + mname + " changes the parameter types");
                    if (inherited->result && mi.result && *inherited->result != *mi.result) {
                        diags_.error(mi.pos, "override of " + mname + " changes the result type");
                    }
                    if (inherited->result && !mi.result) mi.result = inherited->result;
                    if (inherited->is_static != mi.is_static || inherited->is_ref != mi.is_ref) {
                        diags_.error(mi.pos, "override of " + mname + " changes the method kind");
                    }
                }
            }
        }
        for (const auto& [name, info] : u_.nominals) {
            if (info.is_concept) continue;
            std::set<std::string> names;
            for (const auto& s : u_.supertypes(name)) {
                for (const auto& [m, _] : u_.nominals[s].methods) names.insert(m);
            }
            for (const auto& m : names) {
                auto* impl = u_.find_method(name, m);
                if (impl && impl->is_abstract) {
                    diags_.error(info.pos, "entity " + name + " does not implement abstract method " +
                                               impl->declaring_type + "::" + m);
                }
            }
        }
    }
};

}  // namespace

TypeUniverse build_universe(const SurfaceProgram& program, Diagnostics& diags) {
    return UniverseBuilder(program, diags).run();
}

namespace {

struct TypeStringParser {
    const std::string& s;
    const TypeUniverse& u;
    std::size_t i = 0;

    bool eat(char c) {
        if (i < s.size() && s[i] == c) {
            ++i;
            return true;
        }
        return false;
    }

    std::string ident() {
        std::size_t b = i;
        while (i < s.size() && (std::isalnum(static_cast<unsigned char>(s[i])) || s[i] == '_' || s[i] == '$')) ++i;
        return s.substr(b, i - b);
    }

    std::optional<Type> union_type() {
        std::vector<Type> ms;
        do {
            auto a = atom();
            if (!a) return std::nullopt;
            ms.push_back(*a);
        } while (eat('|'));
        return ms.size() == 1 ? ms[0] : Type::union_of(ms);
    }

    std::optional<std::vector<Type>> list(char close) {
        std::vector<Type> out;
        if (eat(close)) return out;
        do {
            auto t = union_type();
            if (!t) return std::nullopt;
            out.push_back(*t);
        } while (eat(','));
        if (!eat(close)) return std::nullopt;
        return out;
    }

    std::optional<Type> atom() {
        if (eat('[')) {
            auto xs = list(']');
            if (!xs) return std::nullopt;
            return Type::tuple(*xs);
        }
        if (eat('{')) {
            std::vector<std::pair<std::string, Type>> fs;
            if (eat('}')) return Type::record(fs);
            do {
                auto n = ident();
                if (n.empty() || !eat(':')) return std::nullopt;
                auto t = union_type();
                if (!t) return std::nullopt;
                fs.emplace_back(n, *t);
            } while (eat(','));
            if (!eat('}')) return std::nullopt;
            return Type::record(fs);
        }
        auto n = ident();
        if (n.empty()) return std::nullopt;
        if (eat('<')) {
            if (n == "StringOf") {
                auto v = ident();
                if (!eat('>')) return std::nullopt;
                return Type::string_of(v);
            }
            auto xs = list('>');
            if (!xs) return std::nullopt;
            if (n == "List" && xs->size() == 1) return Type::list((*xs)[0]);
            if (n == "Map" && xs->size() == 2) return Type::map((*xs)[0], (*xs)[1]);
            if (n == "Ok" && xs->size() == 1) return Type::ok((*xs)[0]);
            if (n == "Err" && xs->size() == 1) return Type::err((*xs)[0]);
            return std::nullopt;
        }
        if (auto p = primitive_named(n)) return p;
        if (u.nominal(n)) return Type::nominal(n);
        if (u.typedecl(n)) return Type::typedecl(n);
        return std::nullopt;
    }
};

}  // namespace

std::optional<Type> parse_type_string(const std::string& s, const TypeUniverse& u) {
    TypeStringParser p{s, u};
    auto t = p.union_type();
    if (!t || p.i != s.size()) return std::nullopt;
    return t;
}

}  // namespace lx
