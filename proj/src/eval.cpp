#include "lx/eval.hpp"

#include <pthread.h>

#include <exception>
#include <stdexcept>

#include "lx/external.hpp"
#include "lx/regex.hpp"

namespace lx {

CheckConfig CheckConfig::from_level(CheckLevel l) {
    CheckConfig c;
    c.levels.clear();
    for (auto x : {CheckLevel::Spec, CheckLevel::Debug, CheckLevel::Test, CheckLevel::Release}) {
        if (static_cast<int>(x) >= static_cast<int>(l)) c.levels.insert(x);
    }
    return c;
}

std::string outcome_str(const Outcome& o) {
    if (o.ok()) return "value " + to_string(*o.value);
    const auto& e = *o.error;
    std::string out = std::string("error ") + error_code_name(e.code) + " at " + e.site;
    if (!e.pos.file.empty()) {
        out += " (" + e.pos.file + ":" + std::to_string(e.pos.line) + ":" + std::to_string(e.pos.column) + ")";
    }
    if (!e.message.empty()) out += ": " + e.message;
    return out;
}

std::string outcome_key(const Outcome& o) {
    if (o.ok()) return "value " + to_string(*o.value);
    return std::string("error ") + error_code_name(o.error->code);
}

const Value& field_of(const Value& v, const std::string& field, const TypeUniverse& u) {
    if (v.kind() == ValueKind::Record) {
        const auto& names = v.type().field_names();
        for (std::size_t i = 0; i < names.size(); ++i) {
            if (names[i] == field) return v.items()[i];
        }
    } else if (v.kind() == ValueKind::Entity) {
        const Type& t = v.type();
        if (t.kind() == TypeKind::Ok || t.kind() == TypeKind::Err) return v.items().at(0);
        const auto* info = u.nominal(t.name());
        for (std::size_t i = 0; i < info->fields.size(); ++i) {
            if (info->fields[i].name == field) return v.items()[i];
        }
    }
    throw std::logic_error("no field " + field + " on " + to_string(v));
}

bool is_generated_function(const std::string& name) {
    return name.find("$k$") != std::string::npos || name.find("$lam$") != std::string::npos ||
           name.find("$inv$") != std::string::npos || name.find("$val$") != std::string::npos ||
           name.find("$dispatch") != std::string::npos;
}

bool eval_string_validator(const TypeUniverse& u, const std::string& validator, const std::string& s) {
    const auto* v = u.validator(validator);
    if (!v) throw std::invalid_argument("unknown validator " + validator);
    auto re = Regex::parse(v->regex);
    if (!re) throw std::invalid_argument("malformed validator " + validator);
    return re->full_match(s);
}

namespace {

void* stack_trampoline(void* arg) {
    auto* fn = static_cast<std::function<void()>*>(arg);
    (*fn)();
    return nullptr;
}

}  // namespace

void run_with_large_stack(const std::function<void()>& fn) {
    std::exception_ptr err;
    std::function<void()> wrapped = [&]() {
        try {
            fn();
        } catch (...) {
            err = std::current_exception();
        }
    };
    pthread_attr_t attr;
    pthread_attr_init(&attr);
    pthread_attr_setstacksize(&attr, std::size_t(1) << 30);
    pthread_t th;
    if (pthread_create(&th, &attr, stack_trampoline, &wrapped) != 0) {
        pthread_attr_destroy(&attr);
        wrapped();
    } else {
        pthread_attr_destroy(&attr);
        pthread_join(th, nullptr);
    }
    if (err) std::rethrow_exception(err);
}

Evaluator::Evaluator(const IrProgram& program, CheckConfig cfg) : p_(program), cfg_(std::move(cfg)) {}

void Evaluator::raise(ErrorCode c, const std::string& site, const SourcePos& pos, const std::string& msg) {
    throw EvalError{ErrorInfo{c, site, msg, pos}};
}

std::string Evaluator::site_of(const Frame& f, const IrNode& e) const { return site_name(f.fn->name, e.path); }

Outcome Evaluator::call(const std::string& entry, const std::vector<Value>& args) {
    auto it = p_.functions.find(entry);
    if (it == p_.functions.end()) throw std::invalid_argument("unknown function " + entry);
    const auto& f = it->second;
    if (args.size() != f.params.size()) throw std::invalid_argument("wrong number of arguments for " + entry);
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (!value_has_type(args[i], f.params[i].second, p_.universe)) {
            throw std::invalid_argument("argument " + std::to_string(i) + " of " + entry + " is not a " + f.params[i].second.str());
        }
    }
    Outcome out;
    run_with_large_stack([&]() {
        try {
            out = Outcome::of(invoke(entry, args, "", f.pos));
        } catch (const EvalError& e) {
            out = Outcome::fail(e.info);
        }
    });
    return out;
}

Outcome Evaluator::construct_checked(const std::string& type_name, const std::vector<Value>& fields) {
    Outcome out;
    run_with_large_stack([&]() {
        try {
            out = Outcome::of(construct(Type::nominal(type_name), fields, type_name + ":construct", SourcePos{}));
        } catch (const EvalError& e) {
            out = Outcome::fail(e.info);
        }
    });
    return out;
}

Value Evaluator::invoke(const std::string& name, std::vector<Value> args, const std::string& call_site, const SourcePos& pos) {
    const IrFunction& f = p_.functions.at(name);
    bool counted = !is_generated_function(name);
    if (counted && depth_ >= cfg_.recursion_budget) {
        raise(ErrorCode::RecursionBudgetExceeded, call_site.empty() ? site_name(name, "b") : call_site, pos,
              "call depth exceeds " + std::to_string(cfg_.recursion_budget));
    }
    struct DepthGuard {
        int& d;
        bool on;
        ~DepthGuard() {
            if (on) --d;
        }
    } guard{depth_, counted};
    if (counted) ++depth_;
    if (depth_ > max_depth_) max_depth_ = depth_;
    Frame fr{&f, {}};
    for (std::size_t i = 0; i < f.params.size(); ++i) fr.env.emplace_back(f.params[i].first, std::move(args[i]));
    for (std::size_t i = 0; i < f.requires_.size(); ++i) {
        const auto& c = f.requires_[i];
        if (!cfg_.enabled(c.level)) continue;
        if (!eval(*c.expr, fr).as_bool()) {
            std::string site = call_site.empty() ? site_name(name, "r" + std::to_string(i))
                                                 : call_site + "/pre" + std::to_string(i);
            raise(ErrorCode::PreconditionFail, site, c.pos, "requires clause of " + name + " failed");
        }
    }
    Value result = eval(*f.body, fr);
    if (!f.ensures.empty()) {
        fr.env.emplace_back("$return", result);
        for (std::size_t i = 0; i < f.ensures.size(); ++i) {
            const auto& c = f.ensures[i];
            if (!cfg_.enabled(c.level)) continue;
            if (!eval(*c.expr, fr).as_bool()) {
                raise(ErrorCode::PostconditionFail, site_name(name, "e" + std::to_string(i)), c.pos,
                      "ensures clause of " + name + " failed");
            }
        }
    }
    return result;
}

void Evaluator::run_entity_checks(const Value& ent, const std::vector<CheckRef>& checks, ErrorCode code,
                                  const std::string& site, const SourcePos& pos, const char* tag) {
    for (std::size_t k = 0; k < checks.size(); ++k) {
        const auto& c = checks[k];
        if (!cfg_.enabled(c.level)) continue;
        const IrFunction& g = p_.functions.at(c.function);
        std::vector<Value> args;
        for (const auto& [pn, _] : g.params) args.push_back(field_of(ent, pn, p_.universe));
        if (!invoke(c.function, std::move(args), site, pos).as_bool()) {
            raise(code, site + "/" + tag + std::to_string(k), c.pos, c.function + " failed for " + to_string(ent));
        }
    }
}

Value Evaluator::construct(const Type& t, std::vector<Value> fields, const std::string& site, const SourcePos& pos) {
    Value v = Value::entity(t, std::move(fields));
    if (t.kind() == TypeKind::Nominal) {
        run_entity_checks(v, p_.universe.construction_invariants(t.name()), ErrorCode::InvariantFail, site, pos, "inv");
    }
    return v;
}

Value Evaluator::inject(const std::string& name, const Value& v, const std::string& site, const SourcePos& pos) {
    const auto& u = p_.universe;
    if (u.validator(name)) {
        if (!eval_string_validator(u, name, v.as_string())) {
            raise(ErrorCode::RegexMismatch, site, pos, "\"" + v.as_string() + "\" does not match " + name);
        }
        return Value::string_of(name, v.as_string());
    }
    const auto* td = u.typedecl(name);
    if (!td) throw std::logic_error("inject into unknown type " + name);
    Value base = v;
    if (td->base.kind() == TypeKind::StringOf && v.kind() == ValueKind::String) base = inject(td->base.name(), v, site, pos);
    for (std::size_t k = 0; k < td->invariants.size(); ++k) {
        const auto& c = td->invariants[k];
        if (!cfg_.enabled(c.level)) continue;
        if (!invoke(c.function, {base}, site, pos).as_bool()) {
            raise(ErrorCode::InvariantFail, site + "/inv" + std::to_string(k), c.pos,
                  c.function + " failed for " + to_string(base));
        }
    }
    return Value::typedecl(name, base);
}

Value Evaluator::eval(const IrNode& e, Frame& f) {
    const auto& u = p_.universe;
    switch (e.kind) {
        case IrKind::Const: return e.value;
        case IrKind::Var:
            for (auto it = f.env.rbegin(); it != f.env.rend(); ++it) {
                if (it->first == e.name) return it->second;
            }
            throw std::logic_error("unbound variable " + e.name + " in " + f.fn->name);
        case IrKind::Let: {
            Value b = eval(*e.kids[0], f);
            f.env.emplace_back(e.name, std::move(b));
            Value r = eval(*e.kids[1], f);
            f.env.pop_back();
            return r;
        }
        case IrKind::Ite: return eval(*e.kids[eval(*e.kids[0], f).as_bool() ? 1 : 2], f);
        case IrKind::Call: {
            std::vector<Value> args;
            for (const auto& k : e.kids) args.push_back(eval(*k, f));
            return invoke(e.name, std::move(args), site_of(f, e), e.pos);
        }
        case IrKind::Functor: {
            std::vector<Value> caps, args;
            for (std::size_t i = 0; i < e.kids.size(); ++i) {
                (static_cast<int>(i) < e.ncaptures ? caps : args).push_back(eval(*e.kids[i], f));
            }
            std::string site = site_of(f, e);
            SpecFn fn;
            if (!e.spec.empty()) {
                fn = [&](const std::vector<Value>& xs) {
                    std::vector<Value> all = caps;
                    all.insert(all.end(), xs.begin(), xs.end());
                    return invoke(e.spec, std::move(all), site, e.pos);
                };
            }
            try {
                return eval_functor(e.name, e.on_map, args, fn, e.type);
            } catch (const Fault& x) {
                raise(x.code, site, e.pos, x.what());
            }
        }
        case IrKind::Tuple: {
            std::vector<Value> xs;
            for (const auto& k : e.kids) xs.push_back(eval(*k, f));
            return Value::tuple(e.type, std::move(xs));
        }
        case IrKind::Record: {
            std::vector<Value> xs;
            for (const auto& k : e.kids) xs.push_back(eval(*k, f));
            std::vector<Value> sorted;
            for (const auto& n : e.type.field_names()) {
                for (std::size_t i = 0; i < e.names.size(); ++i) {
                    if (e.names[i] == n) sorted.push_back(xs[i]);
                }
            }
            return Value::record(e.type, std::move(sorted));
        }
        case IrKind::Entity: {
            std::vector<Value> xs;
            for (const auto& k : e.kids) xs.push_back(eval(*k, f));
            if (!e.check) return Value::entity(e.type, std::move(xs));
            return construct(e.type, std::move(xs), site_of(f, e), e.pos);
        }
        case IrKind::List: {
            std::vector<Value> xs;
            for (const auto& k : e.kids) xs.push_back(eval(*k, f));
            return Value::list(e.type, std::move(xs));
        }
        case IrKind::Map: {
            std::vector<std::pair<Value, Value>> es;
            for (std::size_t i = 0; i + 1 < e.kids.size(); i += 2) {
                Value k = eval(*e.kids[i], f);
                Value v = eval(*e.kids[i + 1], f);
                es.emplace_back(std::move(k), std::move(v));
            }
            return Value::map(e.type, std::move(es));
        }
        case IrKind::Access: {
            Value v = eval(*e.kids[0], f);
            if (e.index >= 0) return v.items().at(static_cast<std::size_t>(e.index));
            return field_of(v, e.name, u);
        }
        case IrKind::Is: return Value::boolean(value_has_type(eval(*e.kids[0], f), e.test, u));
        case IrKind::As: {
            Value v = eval(*e.kids[0], f);
            if (e.check && !value_has_type(v, e.test, u)) {
                raise(ErrorCode::CastFail, site_of(f, e), e.pos, to_string(v) + " is not a " + e.test.str());
            }
            return v;
        }
        case IrKind::Inject: return inject(e.name, eval(*e.kids[0], f), site_of(f, e), e.pos);
        case IrKind::Extract: {
            Value v = eval(*e.kids[0], f);
            if (v.kind() == ValueKind::StringOf) return Value::string(v.as_string());
            return v.base();
        }
        case IrKind::Eq:
        case IrKind::Neq: {
            Value a = eval(*e.kids[0], f);
            Value b = eval(*e.kids[1], f);
            bool eq = value_equal(a, b);
            return Value::boolean(e.kind == IrKind::Eq ? eq : !eq);
        }
        case IrKind::Prim: {
            std::vector<Value> xs;
            for (const auto& k : e.kids) xs.push_back(eval(*k, f));
            const std::string& op = e.name;
            try {
                if (op == "!") return Value::boolean(!xs[0].as_bool());
                if (op == "neg") return negate(xs[0]);
                if (op == "concat") return concat_strings(xs);
                if (op == "<") return Value::boolean(compare_ordered(xs[0], xs[1]) < 0);
                if (op == "<=") return Value::boolean(compare_ordered(xs[0], xs[1]) <= 0);
                if (op == ">") return Value::boolean(compare_ordered(xs[0], xs[1]) > 0);
                if (op == ">=") return Value::boolean(compare_ordered(xs[0], xs[1]) >= 0);
                return arith(op, xs[0], xs[1]);
            } catch (const Fault& x) {
                raise(x.code, site_of(f, e), e.pos, x.what());
            }
        }
        case IrKind::And: {
            if (!eval(*e.kids[0], f).as_bool()) return Value::boolean(false);
            return Value::boolean(eval(*e.kids[1], f).as_bool());
        }
        case IrKind::Or: {
            if (eval(*e.kids[0], f).as_bool()) return Value::boolean(true);
            return Value::boolean(eval(*e.kids[1], f).as_bool());
        }
        case IrKind::Implies: {
            if (!eval(*e.kids[0], f).as_bool()) return Value::boolean(true);
            return Value::boolean(eval(*e.kids[1], f).as_bool());
        }
        case IrKind::Assert: {
            if (cfg_.enabled(e.level) && !eval(*e.kids[0], f).as_bool()) {
                raise(e.code, site_of(f, e), e.pos, std::string("assertion failed (") + check_level_name(e.level) + ")");
            }
            return eval(*e.kids[1], f);
        }
        case IrKind::Error: raise(e.code, site_of(f, e), e.pos, "error reached");
    }
    throw std::logic_error("unknown IR node");
}

Outcome Evaluator::check_value(const Value& v, bool with_validates) {
    const auto& u = p_.universe;
    Outcome out = Outcome::of(v);
    std::function<void(const Value&, const std::string&)> walk = [&](const Value& x, const std::string& where) {
        switch (x.kind()) {
            case ValueKind::StringOf:
                if (!eval_string_validator(u, x.name(), x.as_string())) {
                    raise(ErrorCode::RegexMismatch, where, SourcePos{}, "\"" + x.as_string() + "\" does not match " + x.name());
                }
                return;
            case ValueKind::Typedecl: {
                walk(x.base(), where);
                const auto* td = u.typedecl(x.name());
                for (std::size_t k = 0; k < td->invariants.size(); ++k) {
                    const auto& c = td->invariants[k];
                    if (!cfg_.enabled(c.level)) continue;
                    if (!invoke(c.function, {x.base()}, where, c.pos).as_bool()) {
                        raise(ErrorCode::InvariantFail, where + "/inv" + std::to_string(k), c.pos, c.function + " failed");
                    }
                }
                return;
            }
            case ValueKind::Tuple:
            case ValueKind::Record:
            case ValueKind::List:
                for (std::size_t i = 0; i < x.items().size(); ++i) walk(x.items()[i], where + "[" + std::to_string(i) + "]");
                return;
            case ValueKind::Map:
                for (std::size_t i = 0; i < x.map_size(); ++i) {
                    walk(x.map_key(i), where + "[" + std::to_string(i) + "].key");
                    walk(x.map_value(i), where + "[" + std::to_string(i) + "].value");
                }
                return;
            case ValueKind::Entity: {
                const Type& t = x.type();
                for (std::size_t i = 0; i < x.items().size(); ++i) walk(x.items()[i], where + "[" + std::to_string(i) + "]");
                if (t.kind() != TypeKind::Nominal) return;
                std::string site = t.name() + ":" + where;
                run_entity_checks(x, u.construction_invariants(t.name()), ErrorCode::InvariantFail, site, SourcePos{}, "inv");
                if (with_validates) {
                    run_entity_checks(x, u.construction_validates(t.name()), ErrorCode::ValidateFail, site, SourcePos{},
                                      "val");
                }
                return;
            }
            default: return;
        }
    };
    run_with_large_stack([&]() {
        try {
            walk(v, "$");
        } catch (const EvalError& e) {
            out = Outcome::fail(e.info);
        }
    });
    return out;
}

Outcome evaluate(const IrProgram& program, const std::string& entry, const std::vector<Value>& args, const CheckConfig& cfg) {
    return Evaluator(program, cfg).call(entry, args);
}

Outcome construct_checked(const IrProgram& program, const std::string& type_name, const std::vector<Value>& fields,
                          const CheckConfig& cfg) {
    return Evaluator(program, cfg).construct_checked(type_name, fields);
}

Outcome validate_external(const IrProgram& program, const std::string& type_name, const std::string& document,
                          const CheckConfig& cfg) {
    Type t = program.universe.nominal(type_name) ? Type::nominal(type_name)
                                                 : (program.universe.typedecl(type_name) ? Type::typedecl(type_name) : Type());
    if (t == Type::none()) throw std::invalid_argument("unknown type " + type_name);
    Value v;
    try {
        v = value_from_json(nlohmann::json::parse(document), t, program.universe);
    } catch (const std::exception& e) {
        return Outcome::fail(ErrorInfo{ErrorCode::ValidateFail, type_name + ":$", std::string("malformed input: ") + e.what(), {}});
    }
    return Evaluator(program, cfg).check_value(v, true);
}

}  // namespace lx
