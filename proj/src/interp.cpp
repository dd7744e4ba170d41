#include "lx/interp.hpp"

#include <map>
#include <optional>
#include <stdexcept>

namespace lx {
namespace {

using Env = std::map<std::string, Value>;

bool is_none_literal(const Expr& e) { return e.kind == ExprKind::Literal && e.lit == LitKind::None; }

class Interp {
public:
    Interp(const CheckedProgram& p, CheckConfig cfg) : p_(p), u_(p.universe), cfg_(std::move(cfg)) {}

    Value invoke(const std::string& name, std::vector<Value> args, const SourcePos& pos, Value* this_out = nullptr);

private:
    const CheckedProgram& p_;
    const TypeUniverse& u_;
    CheckConfig cfg_;
    int depth_ = 0;
    const CheckedFunction* fn_ = nullptr;

    [[noreturn]] void raise(ErrorCode c, const SourcePos& pos, const std::string& msg) {
        throw EvalError{ErrorInfo{c, fn_ ? fn_->name : std::string("<top>"), msg, pos}};
    }

    // Result of running statements: set when a return was executed.
    using Exit = std::optional<Value>;

    Exit block(const Block& b, Env& env);
    Exit stmt(const Stmt& s, Env& env);
    Exit bind(const std::string& name, const Expr& init, Env& env);
    Exit with_dollar(const Value& v, const Block& body, Env& env);

    Value expr(const Expr& e, Env& env);
    Value literal(const Expr& e);
    Value binary(const Expr& e, Env& env);
    Value call(const Expr& e, Env& env, Value* this_out);
    Value functor(const Expr& e, Env& env);
    bool test(const Value& v, const FlowTest& t, const Type& subject_ty, const FlowOp& op, Env& env);
    Value cast(const Value& v, const FlowTest& t, const Type& subject_ty, const FlowOp& op, Env& env, const SourcePos& pos);

    Value construct(const Type& t, std::vector<Value> fields, const SourcePos& pos);
    Value inject(const std::string& name, const Value& v, const SourcePos& pos);
    bool check_fn(const std::string& name, const Env& env);
    Value fault(const std::function<Value()>& f, const SourcePos& pos) {
        try {
            return f();
        } catch (const Fault& x) {
            raise(x.code, pos, x.what());
        }
    }
};

Value Interp::invoke(const std::string& name, std::vector<Value> args, const SourcePos& pos, Value* this_out) {
    const CheckedFunction& f = p_.functions.at(name);
    if (depth_ >= cfg_.recursion_budget) {
        raise(ErrorCode::RecursionBudgetExceeded, pos, "call depth exceeds " + std::to_string(cfg_.recursion_budget));
    }
    struct Guard {
        Interp& in;
        const CheckedFunction* saved;
        ~Guard() {
            --in.depth_;
            in.fn_ = saved;
        }
    } guard{*this, fn_};
    ++depth_;
    Env env;
    for (std::size_t i = 0; i < f.params.size(); ++i) env[f.params[i].first] = args[i];
    for (const auto& c : f.requires_) {
        if (!cfg_.enabled(c.level)) continue;
        fn_ = &f;
        if (!expr(*c.expr, env).as_bool()) {
            fn_ = guard.saved;
            raise(ErrorCode::PreconditionFail, c.pos, "requires clause of " + name + " failed");
        }
    }
    fn_ = &f;
    Value result;
    if (f.expr) {
        result = expr(*f.expr, env);
    } else {
        Exit r = block(f.body, env);
        if (!r) throw std::logic_error("control reaches the end of " + name);
        result = *r;
    }
    if (f.is_ref && this_out) *this_out = env.at("this");
    if (!f.ensures.empty()) {
        Env eenv;
        for (std::size_t i = 0; i < f.params.size(); ++i) eenv[f.params[i].first] = args[i];
        eenv["$return"] = result;
        for (const auto& c : f.ensures) {
            if (!cfg_.enabled(c.level)) continue;
            if (!expr(*c.expr, eenv).as_bool()) raise(ErrorCode::PostconditionFail, c.pos, "ensures clause of " + name + " failed");
        }
    }
    return result;
}

bool Interp::check_fn(const std::string& name, const Env& env) {
    const CheckedFunction& f = p_.functions.at(name);
    const CheckedFunction* saved = fn_;
    fn_ = &f;
    Env e2 = env;
    bool ok = expr(*f.expr, e2).as_bool();
    fn_ = saved;
    return ok;
}

Value Interp::construct(const Type& t, std::vector<Value> fields, const SourcePos& pos) {
    Value v = Value::entity(t, std::move(fields));
    if (t.kind() != TypeKind::Nominal) return v;
    for (const auto& c : u_.construction_invariants(t.name())) {
        if (!cfg_.enabled(c.level)) continue;
        const auto& g = p_.functions.at(c.function);
        Env env;
        for (const auto& [pn, _] : g.params) env[pn] = field_of(v, pn, u_);
        if (!check_fn(c.function, env)) raise(ErrorCode::InvariantFail, pos, c.function + " failed for " + to_string(v));
    }
    return v;
}

Value Interp::inject(const std::string& name, const Value& v, const SourcePos& pos) {
    if (u_.validator(name)) {
        if (!eval_string_validator(u_, name, v.as_string())) {
            raise(ErrorCode::RegexMismatch, pos, "\"" + v.as_string() + "\" does not match " + name);
        }
        return Value::string_of(name, v.as_string());
    }
    const auto* td = u_.typedecl(name);
    Value base = v;
    if (td->base.kind() == TypeKind::StringOf && v.kind() == ValueKind::String) base = inject(td->base.name(), v, pos);
    for (const auto& c : td->invariants) {
        if (!cfg_.enabled(c.level)) continue;
        if (!check_fn(c.function, Env{{"$value", base}})) {
            raise(ErrorCode::InvariantFail, pos, c.function + " failed for " + to_string(base));
        }
    }
    return Value::typedecl(name, base);
}

// ---------------------------------------------------------------------------
// Statements

Interp::Exit Interp::block(const Block& b, Env& env) {
    for (const auto& s : b) {
        Exit r = stmt(*s, env);
        if (r) return r;
    }
    return std::nullopt;
}

Interp::Exit Interp::with_dollar(const Value& v, const Block& body, Env& env) {
    auto it = env.find("$");
    std::optional<Value> saved;
    if (it != env.end()) saved = it->second;
    env["$"] = v;
    Exit r = block(body, env);
    if (saved) {
        env["$"] = *saved;
    } else {
        env.erase("$");
    }
    return r;
}

Interp::Exit Interp::bind(const std::string& name, const Expr& init, Env& env) {
    if (init.kind == ExprKind::FlowEarly) {
        Value v = expr(*init.args[0], env);
        if (!test(v, init.test, init.aux_ty, init.flow, env)) return v;
        env[name] = v;
        return std::nullopt;
    }
    if (init.kind == ExprKind::MethodCall && init.ref_tag) {
        Value nt;
        Value r = call(init, env, &nt);
        env[init.args[0]->name] = nt;
        env[name] = r;
        return std::nullopt;
    }
    env[name] = expr(init, env);
    return std::nullopt;
}

Interp::Exit Interp::stmt(const Stmt& s, Env& env) {
    switch (s.kind) {
        case StmtKind::Let:
        case StmtKind::Var:
            if (!s.expr) return std::nullopt;
            return bind(s.name, *s.expr, env);
        case StmtKind::Assign: return bind(s.name, *s.expr, env);
        case StmtKind::Return: {
            if (!s.expr) return Value::none();
            const Expr& v = s.expr->kind == ExprKind::FlowEarly ? *s.expr->args[0] : *s.expr;
            return expr(v, env);
        }
        case StmtKind::Assert: {
            CheckLevel l = s.level.value_or(CheckLevel::Release);
            if (cfg_.enabled(l) && !expr(*s.expr, env).as_bool()) raise(ErrorCode::AssertFail, s.pos, "assertion failed");
            return std::nullopt;
        }
        case StmtKind::Narrow: {
            Value v = env.at(s.name);
            if (!s.early) {
                env[s.name] = cast(v, s.test, s.aux_ty, s.flow, env, s.pos);
                return std::nullopt;
            }
            if (!test(v, s.test, s.aux_ty, s.flow, env)) return v;
            return std::nullopt;
        }
        case StmtKind::ExprStmt: {
            const Expr& e = *s.expr;
            if (e.kind == ExprKind::FlowEarly) {
                Value v = expr(*e.args[0], env);
                if (!test(v, e.test, e.aux_ty, e.flow, env)) return v;
                return std::nullopt;
            }
            if (e.kind == ExprKind::MethodCall && e.ref_tag) {
                Value nt;
                call(e, env, &nt);
                env[e.args[0]->name] = nt;
                return std::nullopt;
            }
            if (e.kind == ExprKind::BulkUpdate) {
                env["this"] = expr(e, env);
                return std::nullopt;
            }
            throw std::logic_error("expression statement without effect");
        }
        case StmtKind::If: {
            std::optional<Value> first_subject;
            for (std::size_t i = 0; i < s.branches.size(); ++i) {
                const IfBranch& br = s.branches[i];
                if (!br.flow) {
                    if (expr(*br.cond, env).as_bool()) return block(br.body, env);
                    continue;
                }
                Value v = expr(*br.cond, env);
                if (i == 0) first_subject = v;
                if (test(v, br.test, br.cond->ty, *br.flow, env)) return with_dollar(v, br.body, env);
            }
            if (!s.else_body) return std::nullopt;
            if (first_subject && s.branches.size() == 1) return with_dollar(*first_subject, *s.else_body, env);
            return block(*s.else_body, env);
        }
        case StmtKind::Match: {
            Value v = expr(*s.expr, env);
            for (const auto& arm : s.arms) {
                bool hit = false;
                switch (arm.kind) {
                    case MatchArm::Kind::Wildcard: hit = true; break;
                    case MatchArm::Kind::Type: hit = value_has_type(v, arm.ty, u_); break;
                    case MatchArm::Kind::Literal: {
                        Value lit = expr(*arm.literal, env);
                        hit = value_has_type(v, arm.ty, u_) && value_equal(v, lit);
                        break;
                    }
                }
                if (hit) return with_dollar(v, arm.body, env);
            }
            return std::nullopt;
        }
        case StmtKind::Block: return block(s.body, env);
        case StmtKind::Defer:
        case StmtKind::Elided: break;
    }
    throw std::logic_error("statement cannot be interpreted");
}

// ---------------------------------------------------------------------------
// Expressions

bool Interp::test(const Value& v, const FlowTest& t, const Type& subject_ty, const FlowOp& op, Env& env) {
    if (t.kind == FlowTest::Kind::Literal) {
        Value lit = expr(*op.literal, env);
        bool r = value_has_type(v, t.type, u_) && value_equal(v, lit);
        return t.negated ? !r : r;
    }
    return value_has_type(v, flow_narrow(subject_ty, t, u_).pass, u_);
}

Value Interp::cast(const Value& v, const FlowTest& t, const Type& subject_ty, const FlowOp& op, Env& env,
                   const SourcePos& pos) {
    if (!test(v, t, subject_ty, op, env)) raise(ErrorCode::CastFail, pos, to_string(v) + " fails " + flow_test_str(t));
    return v;
}

Value Interp::literal(const Expr& e) {
    switch (e.lit) {
        case LitKind::None: return Value::none();
        case LitKind::True: return Value::boolean(true);
        case LitKind::False: return Value::boolean(false);
        case LitKind::String: return Value::string(e.text);
        case LitKind::Int:
        case LitKind::Float:
        case LitKind::Decimal:
        case LitKind::Rational: return numeric_from_text(e.ty, e.text);
        case LitKind::TypedString: {
            std::string target = e.ty.kind() == TypeKind::StringOf ? e.ty.name() : e.suffix;
            return inject(target, Value::string(e.text), e.pos);
        }
        case LitKind::TypedNumber:
            return inject(e.suffix, numeric_from_text(u_.typedecl_base(e.suffix), e.text), e.pos);
    }
    throw std::logic_error("unknown literal");
}

Value Interp::expr(const Expr& e, Env& env) {
    switch (e.kind) {
        case ExprKind::Literal: return literal(e);
        case ExprKind::Var:
            if (e.res == Resolution::Function) return invoke(e.target, {}, e.pos);
            return env.at(e.name);
        case ExprKind::Tuple: {
            std::vector<Value> xs;
            for (const auto& a : e.args) xs.push_back(expr(*a, env));
            return Value::tuple(e.ty, std::move(xs));
        }
        case ExprKind::Record: {
            std::vector<Value> xs;
            for (const auto& a : e.args) xs.push_back(expr(*a, env));
            std::vector<Value> sorted;
            for (const auto& n : e.ty.field_names()) {
                for (std::size_t i = 0; i < e.names.size(); ++i) {
                    if (e.names[i] == n) sorted.push_back(xs[i]);
                }
            }
            return Value::record(e.ty, std::move(sorted));
        }
        case ExprKind::Construct: {
            std::vector<Value> xs;
            for (const auto& a : e.args) xs.push_back(expr(*a, env));
            switch (e.ty.kind()) {
                case TypeKind::List: return Value::list(e.ty, std::move(xs));
                case TypeKind::Map: {
                    std::vector<std::pair<Value, Value>> es;
                    for (std::size_t i = 0; i + 1 < xs.size(); i += 2) es.emplace_back(xs[i], xs[i + 1]);
                    return Value::map(e.ty, std::move(es));
                }
                case TypeKind::Ok:
                case TypeKind::Err: return Value::entity(e.ty, std::move(xs));
                default: return construct(e.ty, std::move(xs), e.pos);
            }
        }
        case ExprKind::BulkUpdate: {
            const Type& t = e.args[0]->ty;
            Value base = expr(*e.args[0], env);
            std::vector<std::string> fields;
            if (t.kind() == TypeKind::Record) {
                fields = t.field_names();
            } else {
                for (const auto& f : u_.nominal(t.name())->fields) fields.push_back(f.name);
            }
            Env inner = env;
            for (const auto& f : fields) inner["$" + f] = field_of(base, f, u_);
            std::vector<Value> xs;
            for (const auto& f : fields) {
                std::optional<Value> v;
                for (std::size_t i = 0; i < e.names.size(); ++i) {
                    if (e.names[i] == f) v = expr(*e.args[i + 1], inner);
                }
                xs.push_back(v ? *v : field_of(base, f, u_));
            }
            if (t.kind() == TypeKind::Record) return Value::record(t, std::move(xs));
            return construct(t, std::move(xs), e.pos);
        }
        case ExprKind::Index: return expr(*e.args[0], env).items().at(static_cast<std::size_t>(e.index));
        case ExprKind::Field: return field_of(expr(*e.args[0], env), e.name, u_);
        case ExprKind::Unary: {
            Value a = expr(*e.args[0], env);
            if (e.name == "!") return Value::boolean(!a.as_bool());
            if (a.kind() == ValueKind::Typedecl) {
                Value n = fault([&] { return negate(a.base()); }, e.pos);
                return inject(a.name(), n, e.pos);
            }
            return fault([&] { return negate(a); }, e.pos);
        }
        case ExprKind::Binary: return binary(e, env);
        case ExprKind::Call:
        case ExprKind::StaticCall:
        case ExprKind::MethodCall: return call(e, env, nullptr);
        case ExprKind::FlowTest: {
            Value v = expr(*e.args[0], env);
            return Value::boolean(test(v, e.test, e.aux_ty, e.flow, env));
        }
        case ExprKind::FlowCast: return cast(expr(*e.args[0], env), e.test, e.aux_ty, e.flow, env, e.pos);
        case ExprKind::IfExpr:
            return expr(*e.args[0], env).as_bool() ? expr(*e.args[1], env) : expr(*e.args[2], env);
        case ExprKind::LetIn: {
            Env inner = env;
            inner[e.name] = expr(*e.args[0], env);
            return expr(*e.args[1], inner);
        }
        case ExprKind::Lambda:
        case ExprKind::FlowEarly:
        case ExprKind::Elided: break;
    }
    throw std::logic_error("expression cannot be interpreted: " + render_expr(e));
}

Value Interp::binary(const Expr& e, Env& env) {
    const std::string& op = e.name;
    const Expr& l = *e.args[0];
    const Expr& r = *e.args[1];
    if (op == "&&") return Value::boolean(expr(l, env).as_bool() && expr(r, env).as_bool());
    if (op == "||") return Value::boolean(expr(l, env).as_bool() || expr(r, env).as_bool());
    if (op == "==>") return Value::boolean(!expr(l, env).as_bool() || expr(r, env).as_bool());
    bool eq = op == "==" || op == "===";
    if (eq || op == "!=" || op == "!==") {
        if (is_none_literal(l) || is_none_literal(r)) {
            bool is_none = expr(is_none_literal(l) ? r : l, env).kind() == ValueKind::None;
            return Value::boolean(eq ? is_none : !is_none);
        }
        Value a = expr(l, env);
        Value b = expr(r, env);
        return Value::boolean(eq == value_equal(a, b));
    }
    Value a = expr(l, env);
    Value b = expr(r, env);
    bool td = a.kind() == ValueKind::Typedecl;
    const Value& x = td ? a.base() : a;
    const Value& y = td ? b.base() : b;
    if (op == "<") return Value::boolean(compare_ordered(x, y) < 0);
    if (op == "<=") return Value::boolean(compare_ordered(x, y) <= 0);
    if (op == ">") return Value::boolean(compare_ordered(x, y) > 0);
    if (op == ">=") return Value::boolean(compare_ordered(x, y) >= 0);
    Value v = fault([&] { return arith(op, x, y); }, e.pos);
    return td ? inject(a.name(), v, e.pos) : v;
}

Value Interp::call(const Expr& e, Env& env, Value* this_out) {
    switch (e.res) {
        case Resolution::Function:
        case Resolution::Dispatch: {
            std::vector<Value> args;
            for (const auto& a : e.args) args.push_back(expr(*a, env));
            std::string target = e.target;
            if (e.res == Resolution::Dispatch) {
                const auto& d = p_.dispatchers.at(e.target);
                const std::string& ent = args[0].type().name();
                target.clear();
                for (const auto& c : d.cases) {
                    if (c.entity == ent) target = c.target;
                }
                if (target.empty()) raise(ErrorCode::CastFail, e.pos, "no implementation of " + d.method + " for " + ent);
            }
            return invoke(target, std::move(args), e.pos, this_out);
        }
        case Resolution::Functor: return functor(e, env);
        case Resolution::StringConcat: {
            std::vector<Value> xs;
            for (const auto& a : e.args) xs.push_back(expr(*a, env));
            return concat_strings(xs);
        }
        case Resolution::Inject: return inject(e.target, expr(*e.args[0], env), e.pos);
        case Resolution::Extract: {
            Value v = expr(*e.args[0], env);
            if (v.kind() == ValueKind::StringOf) return Value::string(v.as_string());
            return v.base();
        }
        case Resolution::None: break;
    }
    throw std::logic_error("unresolved call " + e.name);
}

Value Interp::functor(const Expr& e, Env& env) {
    std::vector<Value> args;
    const Expr* lam = nullptr;
    for (const auto& a : e.args) {
        if (a->kind == ExprKind::Lambda) {
            lam = a.get();
        } else {
            args.push_back(expr(*a, env));
        }
    }
    bool on_map = e.kind == ExprKind::MethodCall && e.args[0]->ty.kind() == TypeKind::Map;
    SpecFn fn;
    if (lam) {
        fn = [this, lam, captured = env](const std::vector<Value>& xs) {
            Env inner = captured;
            for (std::size_t i = 0; i < lam->names.size(); ++i) inner[lam->names[i]] = xs[i];
            return expr(*lam->args[0], inner);
        };
    }
    return fault([&] { return eval_functor(e.target, on_map, args, fn, e.ty); }, e.pos);
}

}  // namespace

Outcome interpret(const CheckedProgram& program, const std::string& entry, const std::vector<Value>& args,
                  const CheckConfig& cfg) {
    auto it = program.functions.find(entry);
    if (it == program.functions.end()) throw std::invalid_argument("unknown function " + entry);
    if (args.size() != it->second.params.size()) throw std::invalid_argument("wrong number of arguments for " + entry);
    Outcome out;
    run_with_large_stack([&]() {
        Interp in(program, cfg);
        try {
            out = Outcome::of(in.invoke(entry, args, it->second.pos));
        } catch (const EvalError& e) {
            out = Outcome::fail(e.info);
        }
    });
    return out;
}

}  // namespace lx
