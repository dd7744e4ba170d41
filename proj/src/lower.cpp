#include "lx/lower.hpp"

#include <functional>
#include <set>
#include <stdexcept>

namespace lx {
namespace {

// ---------------------------------------------------------------------------
// Surface analyses

using Names = std::set<std::string>;

void fv_expr(const Expr& e, const Names& bound, Names& out);

void fv_args(const Expr& e, const Names& bound, Names& out) {
    for (const auto& a : e.args) fv_expr(*a, bound, out);
}

void fv_expr(const Expr& e, const Names& bound, Names& out) {
    switch (e.kind) {
        case ExprKind::Var:
            if (e.res == Resolution::Function) return;
            if (!bound.count(e.name)) out.insert(e.name);
            return;
        case ExprKind::Lambda: {
            Names b = bound;
            b.insert(e.names.begin(), e.names.end());
            fv_expr(*e.args[0], b, out);
            return;
        }
        case ExprKind::BulkUpdate: {
            fv_expr(*e.args[0], bound, out);
            Names inner;
            for (std::size_t i = 1; i < e.args.size(); ++i) fv_expr(*e.args[i], bound, inner);
            // `$field` names are bound by the update itself.
            for (const auto& n : inner) {
                if (n == "$" || n == "$return" || n[0] != '$') out.insert(n);
            }
            return;
        }
        case ExprKind::FlowTest:
        case ExprKind::FlowCast:
        case ExprKind::FlowEarly:
            fv_args(e, bound, out);
            if (e.flow.literal) fv_expr(*e.flow.literal, bound, out);
            return;
        case ExprKind::LetIn: {
            fv_expr(*e.args[0], bound, out);
            Names b = bound;
            b.insert(e.name);
            fv_expr(*e.args[1], b, out);
            return;
        }
        default:
            fv_args(e, bound, out);
            return;
    }
}

void fv_block(const Block& b, std::size_t from, Names bound, Names& out) {
    for (std::size_t i = from; i < b.size(); ++i) {
        const Stmt& s = *b[i];
        switch (s.kind) {
            case StmtKind::Let:
            case StmtKind::Var:
            case StmtKind::Assign:
                if (s.expr) fv_expr(*s.expr, bound, out);
                bound.insert(s.name);
                break;
            case StmtKind::Narrow:
                if (!bound.count(s.name)) out.insert(s.name);
                if (s.flow.literal) fv_expr(*s.flow.literal, bound, out);
                break;
            case StmtKind::Return:
            case StmtKind::Assert:
            case StmtKind::ExprStmt:
                if (s.expr) fv_expr(*s.expr, bound, out);
                break;
            case StmtKind::If: {
                bool single_flow = s.branches.size() == 1 && s.branches[0].flow;
                for (const auto& br : s.branches) {
                    fv_expr(*br.cond, bound, out);
                    if (br.flow && br.flow->literal) fv_expr(*br.flow->literal, bound, out);
                    Names inner = bound;
                    if (br.flow) inner.insert("$");
                    fv_block(br.body, 0, inner, out);
                }
                if (s.else_body) {
                    Names inner = bound;
                    if (single_flow) inner.insert("$");
                    fv_block(*s.else_body, 0, inner, out);
                }
                break;
            }
            case StmtKind::Match: {
                fv_expr(*s.expr, bound, out);
                for (const auto& arm : s.arms) {
                    if (arm.literal) fv_expr(*arm.literal, bound, out);
                    Names inner = bound;
                    inner.insert("$");
                    fv_block(arm.body, 0, inner, out);
                }
                break;
            }
            case StmtKind::Block:
                fv_block(s.body, 0, bound, out);
                break;
            case StmtKind::Defer:
            case StmtKind::Elided:
                break;
        }
    }
}

bool uses_dollar(const Block& b) {
    Names out;
    fv_block(b, 0, {}, out);
    return out.count("$") > 0;
}

bool terminates(const Block& b);

bool terminates(const Stmt& s) {
    switch (s.kind) {
        case StmtKind::Return: return true;
        case StmtKind::If:
            if (!s.else_body || !terminates(*s.else_body)) return false;
            for (const auto& br : s.branches) {
                if (!terminates(br.body)) return false;
            }
            return true;
        case StmtKind::Match:
            if (!s.exhaustive) return false;
            for (const auto& arm : s.arms) {
                if (!terminates(arm.body)) return false;
            }
            return true;
        case StmtKind::Block: return terminates(s.body);
        default: return false;
    }
}

bool terminates(const Block& b) {
    for (const auto& s : b) {
        if (terminates(*s)) return true;
    }
    return false;
}

// True when a block may leave the function: a return or an early-return
// flow operator anywhere inside.
bool contains_exit(const Block& b) {
    for (const auto& sp : b) {
        const Stmt& s = *sp;
        switch (s.kind) {
            case StmtKind::Return: return true;
            case StmtKind::Narrow:
                if (s.early) return true;
                break;
            case StmtKind::Let:
            case StmtKind::Var:
            case StmtKind::Assign:
            case StmtKind::ExprStmt:
                if (s.expr && s.expr->kind == ExprKind::FlowEarly) return true;
                break;
            case StmtKind::If:
                for (const auto& br : s.branches) {
                    if (contains_exit(br.body)) return true;
                }
                if (s.else_body && contains_exit(*s.else_body)) return true;
                break;
            case StmtKind::Match:
                for (const auto& arm : s.arms) {
                    if (contains_exit(arm.body)) return true;
                }
                break;
            case StmtKind::Block:
                if (contains_exit(s.body)) return true;
                break;
            default: break;
        }
    }
    return false;
}

const std::string* ref_receiver(const Expr* e) {
    if (e && e->kind == ExprKind::MethodCall && e->ref_tag && e->args[0]->kind == ExprKind::Var) {
        return &e->args[0]->name;
    }
    return nullptr;
}

// Variables rebound anywhere inside a block.
void assigned_names(const Block& b, Names& out) {
    for (const auto& sp : b) {
        const Stmt& s = *sp;
        switch (s.kind) {
            case StmtKind::Assign:
            case StmtKind::Narrow:
                out.insert(s.name);
                if (auto* r = ref_receiver(s.expr.get())) out.insert(*r);
                break;
            case StmtKind::Let:
            case StmtKind::Var:
                if (auto* r = ref_receiver(s.expr.get())) out.insert(*r);
                break;
            case StmtKind::ExprStmt:
                if (auto* r = ref_receiver(s.expr.get())) out.insert(*r);
                if (s.expr->kind == ExprKind::BulkUpdate && s.expr->args[0]->kind == ExprKind::Var &&
                    s.expr->args[0]->name == "this") {
                    out.insert("this");
                }
                break;
            case StmtKind::If:
                for (const auto& br : s.branches) assigned_names(br.body, out);
                if (s.else_body) assigned_names(*s.else_body, out);
                break;
            case StmtKind::Match:
                for (const auto& arm : s.arms) assigned_names(arm.body, out);
                break;
            case StmtKind::Block:
                assigned_names(s.body, out);
                break;
            default: break;
        }
    }
}

bool is_none_literal(const Expr& e) { return e.kind == ExprKind::Literal && e.lit == LitKind::None; }

// ---------------------------------------------------------------------------
// Lowering

struct Binding {
    std::string ir;  // empty while a `var` is unassigned
    Type ty;
    IrPtr alias;  // substituted for the name instead of a variable
};
using LEnv = std::map<std::string, Binding>;

// What happens when control falls off the end of a block.
struct Cont {
    std::function<IrPtr(LEnv&)> fn;
    Names fv;
};

struct Subj {
    std::string name;
    Type ty;
    SourcePos pos;
    IrPtr var() const { return ir_var(name, ty, pos); }
};

struct Generated {
    std::string name;
    std::vector<std::string> params;
};

class Lowering {
public:
    Lowering(const CheckedProgram& p, const LowerOptions& o) : p_(p), opts_(o) {
        out_.file = p.file;
        out_.universe = p.universe;
    }

    IrProgram run();

private:
    const CheckedProgram& p_;
    LowerOptions opts_;
    IrProgram out_;

    const CheckedFunction* fn_ = nullptr;
    Type result_;
    Names* used_ = nullptr;

    std::map<const Expr*, Generated> lambdas_;
    std::map<std::pair<const Block*, std::size_t>, Generated> conts_;
    std::map<std::pair<const Block*, std::size_t>, bool> duplicate_;
    std::map<std::string, int> lam_count_, cont_count_;

    const TypeUniverse& u() const { return p_.universe; }

    std::string fresh(const std::string& base) {
        if (used_->insert(base).second) return base;
        for (int k = 1;; ++k) {
            auto n = (base == "$" ? base : base + "$") + std::to_string(k);
            if (used_->insert(n).second) return n;
        }
    }

    template <class F>
    IrPtr in_scope(const std::vector<std::pair<std::string, Type>>& params, F f) {
        Names names;
        for (const auto& p : params) names.insert(p.first);
        Names* saved = used_;
        used_ = &names;
        IrPtr r = f();
        used_ = saved;
        return r;
    }

    static LEnv param_env(const std::vector<std::pair<std::string, Type>>& params) {
        LEnv env;
        for (const auto& [n, t] : params) env[n] = Binding{n, t, nullptr};
        return env;
    }

    void lower_function(const CheckedFunction& cf);
    void lower_dispatcher(const Dispatcher& d);

    IrPtr mk_let(const std::string& n, IrPtr bound, IrPtr body) {
        if (body->kind == IrKind::Var && body->name == n) return bound;
        return ir_let(n, std::move(bound), std::move(body));
    }

    template <class F>
    IrPtr with_subject(IrPtr v, F f) {
        if (v->kind == IrKind::Var) return f(Subj{v->name, v->type, v->pos});
        auto n = fresh("$s");
        Subj s{n, v->type, v->pos};
        return ir_let(n, std::move(v), f(s));
    }

    IrPtr ret(IrPtr v, const LEnv& env);
    IrPtr lookup(const std::string& name, const LEnv& env, const SourcePos& pos);

    IrPtr block(const Block& b, std::size_t i, LEnv env, const Cont& k);
    IrPtr bind(const std::string& name, const Type& ty, const Expr& init, LEnv env,
               const std::function<IrPtr(LEnv&)>& next);
    IrPtr ref_call(const Expr& call, LEnv env, const std::string* bind_name, const Type& bind_ty,
                   const std::function<IrPtr(LEnv&)>& next);
    IrPtr narrow(const Stmt& s, LEnv env, const std::function<IrPtr(LEnv&)>& next);
    IrPtr branching(const Stmt& s, const Block& b, std::size_t i, const LEnv& env, const Cont& k,
                    const std::vector<const Block*>& bodies, bool implicit_path,
                    const std::function<IrPtr(const Cont&, const Type&)>& build);
    IrPtr stmt_if(const Stmt& s, const Block& b, std::size_t i, const LEnv& env, const Cont& k);
    IrPtr stmt_match(const Stmt& s, const Block& b, std::size_t i, const LEnv& env, const Cont& k);
    IrPtr bind_dollar(const Subj& sv, const Type& t, const Block& body, LEnv env, const Cont& join);
    const Generated& continuation(const Block& b, std::size_t idx, const Cont& k, const std::map<std::string, Type>& after,
                                  const Names& fv);

    IrPtr expr(const Expr& e, const LEnv& env);
    IrPtr literal(const Expr& e);
    IrPtr binary(const Expr& e, const LEnv& env);
    IrPtr call(const Expr& e, const LEnv& env);
    IrPtr functor(const Expr& e, const LEnv& env);
    IrPtr bulk_update(const Expr& e, const LEnv& env);
    const Generated& lambda(const Expr& lam, const LEnv& env);
    IrPtr test_ir(const Subj& s, const FlowTest& t, const Type& subject_ty, const FlowOp& op, const LEnv& env);
    IrPtr cast_ir(IrPtr v, const FlowTest& t, const Type& subject_ty, const FlowOp& op, const LEnv& env,
                  const SourcePos& pos);

    IrPtr extract(IrPtr v) {
        auto pos = v->pos;
        auto base = u().typedecl_base(v->type.name());
        return ir_node(IrKind::Extract, base, pos, {std::move(v)});
    }
    IrPtr inject(const std::string& name, IrPtr v, Type t, const SourcePos& pos) {
        auto n = ir_node(IrKind::Inject, std::move(t), pos, {std::move(v)});
        n->name = name;
        return n;
    }
};

IrProgram Lowering::run() {
    for (const auto& [name, cf] : p_.functions) {
        if (cf.deferred) continue;
        lower_function(cf);
        switch (cf.kind) {
            case FnKind::Function:
            case FnKind::Method:
            case FnKind::Static:
            case FnKind::Const:
            case FnKind::Main: out_.entries.push_back(name); break;
            default: break;
        }
    }
    for (const auto& [name, d] : p_.dispatchers) lower_dispatcher(d);
    finalize_paths(out_);
    return std::move(out_);
}

void Lowering::lower_function(const CheckedFunction& cf) {
    fn_ = &cf;
    result_ = cf.is_ref ? Type::tuple({cf.params.at(0).second, cf.result}) : cf.result;
    IrFunction f;
    f.name = cf.name;
    f.params = cf.params;
    f.result = result_;
    f.is_recursive = cf.is_recursive;
    f.pos = cf.pos;
    LEnv env = param_env(cf.params);
    f.body = in_scope(cf.params, [&] {
        if (cf.expr) return expr(*cf.expr, env);
        Cont end{[&](LEnv&) -> IrPtr { throw std::logic_error("control reaches the end of " + cf.name); }, {}};
        return block(cf.body, 0, env, end);
    });
    for (const auto& c : cf.requires_) {
        auto e = in_scope(cf.params, [&] { return expr(*c.expr, env); });
        f.requires_.push_back(IrCondition{c.level, e, c.pos});
    }
    auto eparams = cf.params;
    eparams.emplace_back("$return", result_);
    LEnv eenv = env;
    if (cf.is_ref) {
        eenv["$return"] = Binding{"", cf.result, ir_access_index(ir_var("$return", result_, cf.pos), 1, cf.result)};
    } else {
        eenv["$return"] = Binding{"$return", cf.result, nullptr};
    }
    for (const auto& c : cf.ensures) {
        auto e = in_scope(eparams, [&] { return expr(*c.expr, eenv); });
        f.ensures.push_back(IrCondition{c.level, e, c.pos});
    }
    out_.functions[f.name] = std::move(f);
    fn_ = nullptr;
}

void Lowering::lower_dispatcher(const Dispatcher& d) {
    IrFunction f;
    f.name = d.name;
    f.params = d.params;
    f.result = d.result;
    f.pos = d.pos;
    f.is_recursive = d.is_recursive;
    std::vector<const DispatchCase*> cases;
    for (const auto& c : d.cases) {
        auto it = p_.functions.find(c.target);
        if (it == p_.functions.end() || it->second.deferred) continue;
        if (it->second.is_recursive) f.is_recursive = true;
        cases.push_back(&c);
    }
    const Type& this_t = d.params.at(0).second;
    auto call_case = [&](const DispatchCase& c) {
        std::vector<IrPtr> args;
        args.push_back(ir_as(ir_var("this", this_t, d.pos), Type::nominal(c.entity), false));
        for (std::size_t i = 1; i < d.params.size(); ++i) {
            args.push_back(ir_var(d.params[i].first, d.params[i].second, d.pos));
        }
        return ir_call(c.target, std::move(args), d.result, d.pos);
    };
    if (cases.empty()) {
        auto e = ir_node(IrKind::Error, d.result, d.pos);
        e->code = ErrorCode::CastFail;
        f.body = e;
    } else {
        IrPtr body = call_case(*cases.back());
        for (std::size_t j = cases.size() - 1; j-- > 0;) {
            body = ir_ite(ir_is(ir_var("this", this_t, d.pos), Type::nominal(cases[j]->entity)), call_case(*cases[j]),
                          body, d.result);
        }
        f.body = body;
    }
    out_.functions[f.name] = std::move(f);
}

IrPtr Lowering::ret(IrPtr v, const LEnv& env) {
    if (!fn_->is_ref) return v;
    auto pos = v->pos;
    return ir_node(IrKind::Tuple, result_, pos, {lookup("this", env, pos), std::move(v)});
}

IrPtr Lowering::lookup(const std::string& name, const LEnv& env, const SourcePos& pos) {
    auto it = env.find(name);
    if (it == env.end()) throw std::logic_error("unbound variable " + name + " during lowering");
    if (it->second.alias) return ir_clone(it->second.alias);
    if (it->second.ir.empty()) throw std::logic_error("variable " + name + " read before assignment during lowering");
    return ir_var(it->second.ir, it->second.ty, pos);
}

// ---------------------------------------------------------------------------
// Statements

IrPtr Lowering::block(const Block& b, std::size_t i, LEnv env, const Cont& k) {
    if (i == b.size()) return k.fn(env);
    const Stmt& s = *b[i];
    std::function<IrPtr(LEnv&)> next = [&](LEnv& e2) { return block(b, i + 1, e2, k); };
    switch (s.kind) {
        case StmtKind::Let:
        case StmtKind::Var:
            if (!s.expr) {
                env[s.name] = Binding{"", s.ty, nullptr};
                return next(env);
            }
            return bind(s.name, s.ty, *s.expr, env, next);
        case StmtKind::Assign: return bind(s.name, s.ty, *s.expr, env, next);
        case StmtKind::Return: {
            if (!s.expr) return ret(ir_const(Value::none(), Type::none(), s.pos), env);
            const Expr& v = s.expr->kind == ExprKind::FlowEarly ? *s.expr->args[0] : *s.expr;
            return ret(expr(v, env), env);
        }
        case StmtKind::Assert: {
            auto cond = expr(*s.expr, env);
            auto rest = next(env);
            auto n = ir_node(IrKind::Assert, rest->type, s.pos, {cond, rest});
            n->level = s.level.value_or(CheckLevel::Release);
            n->code = ErrorCode::AssertFail;
            return n;
        }
        case StmtKind::Narrow: return narrow(s, env, next);
        case StmtKind::ExprStmt: {
            const Expr& e = *s.expr;
            if (e.kind == ExprKind::FlowEarly) {
                auto sp = flow_narrow(e.aux_ty, e.test, u());
                return with_subject(expr(*e.args[0], env), [&](const Subj& sv) {
                    auto test = test_ir(sv, e.test, e.aux_ty, e.flow, env);
                    auto fail = ret(ir_as(sv.var(), sp.fail, false), env);
                    return ir_ite(test, next(env), fail, result_);
                });
            }
            if (e.kind == ExprKind::MethodCall && e.ref_tag) return ref_call(e, env, nullptr, Type(), next);
            if (e.kind == ExprKind::BulkUpdate) {
                auto v = expr(e, env);
                auto n = fresh("this");
                env["this"] = Binding{n, e.ty, nullptr};
                return ir_let(n, v, next(env));
            }
            throw std::logic_error("expression statement without effect reached lowering");
        }
        case StmtKind::If: return stmt_if(s, b, i, env, k);
        case StmtKind::Match: return stmt_match(s, b, i, env, k);
        case StmtKind::Block: {
            Names fv;
            fv_block(b, i + 1, {}, fv);
            fv.insert(k.fv.begin(), k.fv.end());
            Cont inner{next, fv};
            return block(s.body, 0, env, inner);
        }
        case StmtKind::Defer:
        case StmtKind::Elided: break;
    }
    throw std::logic_error("statement cannot be lowered");
}

IrPtr Lowering::bind(const std::string& name, const Type& ty, const Expr& init, LEnv env,
                     const std::function<IrPtr(LEnv&)>& next) {
    if (init.kind == ExprKind::FlowEarly) {
        auto sp = flow_narrow(init.aux_ty, init.test, u());
        return with_subject(expr(*init.args[0], env), [&](const Subj& sv) {
            auto test = test_ir(sv, init.test, init.aux_ty, init.flow, env);
            auto fail = ret(ir_as(sv.var(), sp.fail, false), env);
            LEnv e2 = env;
            auto n = fresh(name);
            e2[name] = Binding{n, ty, nullptr};
            auto pass = mk_let(n, ir_as(sv.var(), sp.pass, false), next(e2));
            return ir_ite(test, pass, fail, result_);
        });
    }
    if (init.kind == ExprKind::MethodCall && init.ref_tag) return ref_call(init, env, &name, ty, next);
    auto v = expr(init, env);
    auto n = fresh(name);
    env[name] = Binding{n, ty, nullptr};
    return mk_let(n, v, next(env));
}

IrPtr Lowering::ref_call(const Expr& call_e, LEnv env, const std::string* bind_name, const Type& bind_ty,
                         const std::function<IrPtr(LEnv&)>& next) {
    auto c = expr(call_e, env);
    const std::string& recv = call_e.args[0]->name;
    Type recv_t = c->type.args()[0];
    auto pair = fresh("$p");
    auto rn = fresh(recv);
    env[recv] = Binding{rn, recv_t, nullptr};
    IrPtr body;
    if (bind_name) {
        auto bn = fresh(*bind_name);
        env[*bind_name] = Binding{bn, bind_ty, nullptr};
        body = mk_let(bn, ir_access_index(ir_var(pair, c->type, call_e.pos), 1, c->type.args()[1]), next(env));
    } else {
        body = next(env);
    }
    auto inner = ir_let(rn, ir_access_index(ir_var(pair, c->type, call_e.pos), 0, recv_t), body);
    return ir_let(pair, c, inner);
}

IrPtr Lowering::narrow(const Stmt& s, LEnv env, const std::function<IrPtr(LEnv&)>& next) {
    auto subj = lookup(s.name, env, s.pos);
    auto n = fresh(s.name);
    if (!s.early) {
        auto cast = cast_ir(subj, s.test, s.aux_ty, s.flow, env, s.pos);
        env[s.name] = Binding{n, s.ty, nullptr};
        return ir_let(n, cast, next(env));
    }
    auto sp = flow_narrow(s.aux_ty, s.test, u());
    return with_subject(subj, [&](const Subj& sv) {
        auto test = test_ir(sv, s.test, s.aux_ty, s.flow, env);
        auto fail = ret(ir_as(sv.var(), sp.fail, false), env);
        LEnv e2 = env;
        e2[s.name] = Binding{n, s.ty, nullptr};
        auto pass = mk_let(n, ir_as(sv.var(), sp.pass, false), next(e2));
        return ir_ite(test, pass, fail, result_);
    });
}

IrPtr Lowering::branching(const Stmt& s, const Block& b, std::size_t i, const LEnv& env, const Cont& k,
                          const std::vector<const Block*>& bodies, bool implicit_path,
                          const std::function<IrPtr(const Cont&, const Type&)>& build) {
    std::size_t paths = bodies.size() + (implicit_path ? 1 : 0);
    std::size_t falls = implicit_path ? 1 : 0;
    bool exits = false;
    for (const Block* body : bodies) {
        if (!terminates(*body)) ++falls;
        if (contains_exit(*body)) exits = true;
    }
    if (falls == 0) {
        Cont none{[](LEnv&) -> IrPtr { throw std::logic_error("join reached after terminating branches"); }, {}};
        return build(none, result_);
    }
    if (falls == paths && !exits) {
        // Every path rejoins: the branches compute the rebound variables
        // and the rest follows once.
        Names assigned;
        for (const Block* body : bodies) assigned_names(*body, assigned);
        std::vector<std::string> phi;
        std::vector<Type> tys;
        for (const auto& n : assigned) {
            auto it = s.after.find(n);
            if (it == s.after.end()) continue;
            phi.push_back(n);
            tys.push_back(it->second);
        }
        Type pty = phi.empty() ? Type::none() : phi.size() == 1 ? tys[0] : Type::tuple(tys);
        Cont join{[&](LEnv& e2) -> IrPtr {
                      if (phi.empty()) return ir_const(Value::none(), Type::none(), s.pos);
                      if (phi.size() == 1) return lookup(phi[0], e2, s.pos);
                      std::vector<IrPtr> xs;
                      for (const auto& n : phi) xs.push_back(lookup(n, e2, s.pos));
                      return ir_node(IrKind::Tuple, pty, s.pos, std::move(xs));
                  },
                  Names(phi.begin(), phi.end())};
        // Merged names are reserved first so they keep the plainest spelling.
        auto tup = fresh("$j");
        std::vector<std::string> names;
        for (const auto& n : phi) names.push_back(fresh(n));
        auto v = build(join, pty);
        LEnv e2 = env;
        for (std::size_t j = 0; j < phi.size(); ++j) e2[phi[j]] = Binding{names[j], tys[j], nullptr};
        if (phi.size() <= 1) {
            IrPtr body = block(b, i + 1, e2, k);
            return phi.empty() ? ir_let(tup, v, body) : mk_let(names[0], v, body);
        }
        IrPtr body = block(b, i + 1, e2, k);
        for (std::size_t j = phi.size(); j-- > 0;) {
            body = ir_let(names[j], ir_access_index(ir_var(tup, pty, s.pos), static_cast<int>(j), tys[j]), body);
        }
        return ir_let(tup, v, body);
    }
    Names fv;
    fv_block(b, i + 1, {}, fv);
    fv.insert(k.fv.begin(), k.fv.end());
    if (falls == 1) {
        Cont join{[&](LEnv& e2) { return block(b, i + 1, e2, k); }, fv};
        return build(join, result_);
    }
    // Several paths reach the rest: copy it when small, otherwise move it
    // into a continuation function of the live variables.
    auto key = std::make_pair(&b, i + 1);
    Cont join{[&, key](LEnv& e2) -> IrPtr {
                  auto d = duplicate_.find(key);
                  if (d == duplicate_.end()) {
                      auto trial = block(b, i + 1, e2, k);
                      bool dup = ir_size(*trial) <= opts_.duplicate_limit;
                      duplicate_[key] = dup;
                      if (dup) return trial;
                  } else if (d->second) {
                      return block(b, i + 1, e2, k);
                  }
                  const auto& c = continuation(b, i + 1, k, s.after, fv);
                  std::vector<IrPtr> args;
                  SourcePos at = i + 1 < b.size() ? b[i + 1]->pos : s.pos;
                  for (const auto& pn : c.params) args.push_back(lookup(pn, e2, at));
                  return ir_call(c.name, std::move(args), result_, at);
              },
              fv};
    return build(join, result_);
}

const Generated& Lowering::continuation(const Block& b, std::size_t idx, const Cont& k,
                                        const std::map<std::string, Type>& after, const Names& fv) {
    auto key = std::make_pair(&b, idx);
    auto it = conts_.find(key);
    if (it != conts_.end()) return it->second;
    Generated g;
    g.name = fn_->name + "$k$" + std::to_string(cont_count_[fn_->name]++);
    std::vector<std::pair<std::string, Type>> params;
    for (const auto& v : fv) {
        auto a = after.find(v);
        if (a == after.end()) continue;
        params.emplace_back(v, a->second);
        g.params.push_back(v);
    }
    IrFunction f;
    f.name = g.name;
    f.params = params;
    f.result = result_;
    f.is_recursive = fn_->is_recursive;
    f.pos = idx < b.size() ? b[idx]->pos : b.back()->pos;
    f.body = in_scope(params, [&] { return block(b, idx, param_env(params), k); });
    out_.functions[g.name] = std::move(f);
    return conts_[key] = g;
}

IrPtr Lowering::bind_dollar(const Subj& sv, const Type& t, const Block& body, LEnv env, const Cont& join) {
    if (!uses_dollar(body)) return block(body, 0, env, join);
    auto n = fresh("$");
    env["$"] = Binding{n, t, nullptr};
    return ir_let(n, ir_as(sv.var(), t, false), block(body, 0, env, join));
}

IrPtr Lowering::stmt_if(const Stmt& s, const Block& b, std::size_t i, const LEnv& env, const Cont& k) {
    std::vector<const Block*> bodies;
    for (const auto& br : s.branches) bodies.push_back(&br.body);
    if (s.else_body) bodies.push_back(&*s.else_body);
    auto build = [&](const Cont& join, const Type& ty) {
        std::function<IrPtr(std::size_t, const Subj*)> chain = [&](std::size_t bi, const Subj* first) -> IrPtr {
            if (bi == s.branches.size()) {
                if (!s.else_body) {
                    LEnv e2 = env;
                    return join.fn(e2);
                }
                if (first && s.branches.size() == 1) return bind_dollar(*first, s.branches[0].fail_ty, *s.else_body, env, join);
                return block(*s.else_body, 0, env, join);
            }
            const IfBranch& br = s.branches[bi];
            if (!br.flow) {
                auto c = expr(*br.cond, env);
                return ir_ite(c, block(br.body, 0, env, join), chain(bi + 1, first), ty);
            }
            return with_subject(expr(*br.cond, env), [&](const Subj& sv) {
                auto test = test_ir(sv, br.test, br.cond->ty, *br.flow, env);
                auto then = bind_dollar(sv, br.pass_ty, br.body, env, join);
                return ir_ite(test, then, chain(bi + 1, bi == 0 ? &sv : first), ty);
            });
        };
        return chain(0, nullptr);
    };
    return branching(s, b, i, env, k, bodies, !s.else_body, build);
}

IrPtr Lowering::stmt_match(const Stmt& s, const Block& b, std::size_t i, const LEnv& env, const Cont& k) {
    std::vector<const Block*> bodies;
    for (const auto& arm : s.arms) bodies.push_back(&arm.body);
    auto build = [&](const Cont& join, const Type& ty) {
        return with_subject(expr(*s.expr, env), [&](const Subj& sv) {
            std::function<IrPtr(std::size_t)> chain = [&](std::size_t ai) -> IrPtr {
                if (ai == s.arms.size()) {
                    LEnv e2 = env;
                    return join.fn(e2);
                }
                const MatchArm& arm = s.arms[ai];
                auto body = bind_dollar(sv, arm.ty, arm.body, env, join);
                if (s.exhaustive && ai + 1 == s.arms.size()) return body;
                IrPtr test;
                if (arm.kind == MatchArm::Kind::Literal) {
                    auto lit = expr(*arm.literal, env);
                    test = ir_and(ir_is(sv.var(), arm.ty),
                                  ir_node(IrKind::Eq, Type::boolean(), arm.pos, {ir_as(sv.var(), arm.ty, false), lit}));
                } else {
                    test = ir_is(sv.var(), arm.ty);
                }
                return ir_ite(test, body, chain(ai + 1), ty);
            };
            return chain(0);
        });
    };
    return branching(s, b, i, env, k, bodies, !s.exhaustive, build);
}

// ---------------------------------------------------------------------------
// Expressions

IrPtr Lowering::test_ir(const Subj& s, const FlowTest& t, const Type& subject_ty, const FlowOp& op, const LEnv& env) {
    if (t.kind == FlowTest::Kind::Literal) {
        auto lit = expr(*op.literal, env);
        IrPtr r = ir_and(ir_is(s.var(), t.type),
                         ir_node(IrKind::Eq, Type::boolean(), s.pos, {ir_as(s.var(), t.type, false), lit}));
        return t.negated ? ir_not(r) : r;
    }
    auto sp = flow_narrow(subject_ty, t, u());
    return ir_is(s.var(), sp.pass);
}

IrPtr Lowering::cast_ir(IrPtr v, const FlowTest& t, const Type& subject_ty, const FlowOp& op, const LEnv& env,
                        const SourcePos& pos) {
    auto sp = flow_narrow(subject_ty, t, u());
    if (t.kind != FlowTest::Kind::Literal) {
        auto c = ir_as(std::move(v), sp.pass, true);
        c->pos = pos;
        return c;
    }
    return with_subject(std::move(v), [&](const Subj& sv) {
        auto err = ir_node(IrKind::Error, sp.pass, pos);
        err->code = ErrorCode::CastFail;
        return ir_ite(test_ir(sv, t, subject_ty, op, env), ir_as(sv.var(), sp.pass, false), err, sp.pass);
    });
}

IrPtr Lowering::expr(const Expr& e, const LEnv& env) {
    switch (e.kind) {
        case ExprKind::Literal: return literal(e);
        case ExprKind::Var:
            if (e.res == Resolution::Function) return ir_call(e.target, {}, e.ty, e.pos);
            {
                auto v = lookup(e.name, env, e.pos);
                if (v->kind == IrKind::Var) v->type = e.ty;
                return v;
            }
        case ExprKind::Tuple: {
            std::vector<IrPtr> xs;
            for (const auto& a : e.args) xs.push_back(expr(*a, env));
            return ir_node(IrKind::Tuple, e.ty, e.pos, std::move(xs));
        }
        case ExprKind::Record: {
            std::vector<IrPtr> xs;
            for (const auto& a : e.args) xs.push_back(expr(*a, env));
            auto n = ir_node(IrKind::Record, e.ty, e.pos, std::move(xs));
            n->names = e.names;
            return n;
        }
        case ExprKind::Construct: {
            std::vector<IrPtr> xs;
            for (const auto& a : e.args) xs.push_back(expr(*a, env));
            switch (e.ty.kind()) {
                case TypeKind::List: return ir_node(IrKind::List, e.ty, e.pos, std::move(xs));
                case TypeKind::Map: return ir_node(IrKind::Map, e.ty, e.pos, std::move(xs));
                case TypeKind::Ok:
                case TypeKind::Err: {
                    auto n = ir_node(IrKind::Entity, e.ty, e.pos, std::move(xs));
                    n->check = false;
                    return n;
                }
                default: return ir_node(IrKind::Entity, e.ty, e.pos, std::move(xs));
            }
        }
        case ExprKind::BulkUpdate: return bulk_update(e, env);
        case ExprKind::Index: return ir_access_index(expr(*e.args[0], env), e.index, e.ty);
        case ExprKind::Field: {
            auto n = ir_access_field(expr(*e.args[0], env), e.name, e.ty);
            n->pos = e.pos;
            return n;
        }
        case ExprKind::Unary: {
            auto a = expr(*e.args[0], env);
            if (e.name == "!") return ir_not(a);
            if (e.ty.kind() == TypeKind::Typedecl) {
                auto base = u().typedecl_base(e.ty.name());
                return inject(e.ty.name(), ir_prim("neg", {extract(a)}, base, e.pos), e.ty, e.pos);
            }
            return ir_prim("neg", {a}, e.ty, e.pos);
        }
        case ExprKind::Binary: return binary(e, env);
        case ExprKind::Call:
        case ExprKind::StaticCall:
        case ExprKind::MethodCall: return call(e, env);
        case ExprKind::FlowTest:
            return with_subject(expr(*e.args[0], env),
                                [&](const Subj& sv) { return test_ir(sv, e.test, e.aux_ty, e.flow, env); });
        case ExprKind::FlowCast: return cast_ir(expr(*e.args[0], env), e.test, e.aux_ty, e.flow, env, e.pos);
        case ExprKind::IfExpr:
            return ir_ite(expr(*e.args[0], env), expr(*e.args[1], env), expr(*e.args[2], env), e.ty);
        case ExprKind::LetIn: {
            auto v = expr(*e.args[0], env);
            auto n = fresh(e.name);
            LEnv e2 = env;
            e2[e.name] = Binding{n, v->type, nullptr};
            return mk_let(n, v, expr(*e.args[1], e2));
        }
        case ExprKind::Lambda:
        case ExprKind::FlowEarly:
        case ExprKind::Elided: break;
    }
    throw std::logic_error("expression cannot be lowered: " + render_expr(e));
}

IrPtr Lowering::literal(const Expr& e) {
    switch (e.lit) {
        case LitKind::None: return ir_const(Value::none(), Type::none(), e.pos);
        case LitKind::True: return ir_bool(true, e.pos);
        case LitKind::False: return ir_bool(false, e.pos);
        case LitKind::String: return ir_const(Value::string(e.text), Type::string(), e.pos);
        case LitKind::Int:
        case LitKind::Float:
        case LitKind::Decimal:
        case LitKind::Rational: return ir_const(numeric_from_text(e.ty, e.text), e.ty, e.pos);
        case LitKind::TypedString: {
            auto str = ir_const(Value::string(e.text), Type::string(), e.pos);
            if (e.ty.kind() == TypeKind::StringOf) return inject(e.ty.name(), str, e.ty, e.pos);
            return inject(e.suffix, str, e.ty, e.pos);
        }
        case LitKind::TypedNumber: {
            auto base = u().typedecl_base(e.suffix);
            return inject(e.suffix, ir_const(numeric_from_text(base, e.text), base, e.pos), e.ty, e.pos);
        }
    }
    throw std::logic_error("unknown literal");
}

IrPtr Lowering::binary(const Expr& e, const LEnv& env) {
    const std::string& op = e.name;
    const Expr& l = *e.args[0];
    const Expr& r = *e.args[1];
    if (op == "&&" || op == "||" || op == "==>") {
        auto k = op == "&&" ? IrKind::And : op == "||" ? IrKind::Or : IrKind::Implies;
        return ir_node(k, Type::boolean(), e.pos, {expr(l, env), expr(r, env)});
    }
    bool eq = op == "==" || op == "===";
    if (eq || op == "!=" || op == "!==") {
        if (is_none_literal(l) || is_none_literal(r)) {
            auto t = ir_is(expr(is_none_literal(l) ? r : l, env), Type::none());
            t->pos = e.pos;
            return eq ? t : ir_not(t);
        }
        return ir_node(eq ? IrKind::Eq : IrKind::Neq, Type::boolean(), e.pos, {expr(l, env), expr(r, env)});
    }
    auto a = expr(l, env);
    auto b = expr(r, env);
    bool td = l.ty.kind() == TypeKind::Typedecl;
    if (op == "<" || op == "<=" || op == ">" || op == ">=") {
        if (td) {
            a = extract(a);
            b = extract(b);
        }
        return ir_prim(op, {a, b}, Type::boolean(), e.pos);
    }
    if (td) {
        auto base = u().typedecl_base(e.ty.name());
        return inject(e.ty.name(), ir_prim(op, {extract(a), extract(b)}, base, e.pos), e.ty, e.pos);
    }
    return ir_prim(op, {a, b}, e.ty, e.pos);
}

IrPtr Lowering::call(const Expr& e, const LEnv& env) {
    switch (e.res) {
        case Resolution::Function:
        case Resolution::Dispatch: {
            std::vector<IrPtr> args;
            for (const auto& a : e.args) args.push_back(expr(*a, env));
            Type t = e.ty;
            if (e.kind == ExprKind::MethodCall && e.ref_tag) t = Type::tuple({e.args[0]->ty, e.ty});
            return ir_call(e.target, std::move(args), t, e.pos);
        }
        case Resolution::Functor: return functor(e, env);
        case Resolution::StringConcat: {
            std::vector<IrPtr> args;
            for (const auto& a : e.args) args.push_back(expr(*a, env));
            return ir_prim("concat", std::move(args), Type::string(), e.pos);
        }
        case Resolution::Inject: return inject(e.target, expr(*e.args[0], env), e.ty, e.pos);
        case Resolution::Extract: return ir_node(IrKind::Extract, e.ty, e.pos, {expr(*e.args[0], env)});
        case Resolution::None: break;
    }
    throw std::logic_error("unresolved call " + e.name);
}

IrPtr Lowering::functor(const Expr& e, const LEnv& env) {
    auto n = ir_node(IrKind::Functor, e.ty, e.pos);
    n->name = e.target;
    if (e.kind == ExprKind::StaticCall) {
        for (const auto& a : e.args) n->kids.push_back(expr(*a, env));
        return n;
    }
    n->on_map = e.args[0]->ty.kind() == TypeKind::Map;
    std::vector<IrPtr> rest;
    for (const auto& a : e.args) {
        if (a->kind != ExprKind::Lambda) {
            rest.push_back(expr(*a, env));
            continue;
        }
        const auto& g = lambda(*a, env);
        n->spec = g.name;
        for (const auto& c : g.params) n->kids.push_back(lookup(c, env, a->pos));
        n->ncaptures = static_cast<int>(g.params.size());
    }
    for (auto& r : rest) n->kids.push_back(std::move(r));
    return n;
}

const Generated& Lowering::lambda(const Expr& lam, const LEnv& env) {
    auto it = lambdas_.find(&lam);
    if (it != lambdas_.end()) return it->second;
    Names fv;
    fv_expr(*lam.args[0], Names(lam.names.begin(), lam.names.end()), fv);
    Generated g;
    const std::string& owner = fn_->name;
    g.name = owner + "$lam$" + std::to_string(lam_count_[owner]++);
    std::vector<std::pair<std::string, Type>> params;
    for (const auto& c : fv) {
        auto b = env.find(c);
        if (b == env.end()) continue;
        g.params.push_back(c);
        params.emplace_back(c, b->second.ty);
    }
    for (std::size_t i = 0; i < lam.names.size(); ++i) params.emplace_back(lam.names[i], lam.param_tys.at(i));
    IrFunction f;
    f.name = g.name;
    f.params = params;
    f.is_recursive = fn_->is_recursive;
    f.pos = lam.pos;
    f.body = in_scope(params, [&] { return expr(*lam.args[0], param_env(params)); });
    f.result = f.body->type;
    out_.functions[g.name] = std::move(f);
    return lambdas_[&lam] = g;
}

IrPtr Lowering::bulk_update(const Expr& e, const LEnv& env) {
    const Type& t = e.args[0]->ty;
    auto base = expr(*e.args[0], env);
    auto tmp = fresh("$u");
    std::vector<std::pair<std::string, Type>> fields;
    if (t.kind() == TypeKind::Record) {
        for (std::size_t i = 0; i < t.args().size(); ++i) fields.emplace_back(t.field_names()[i], t.args()[i]);
    } else {
        for (const auto& f : u().nominal(t.name())->fields) fields.emplace_back(f.name, f.type);
    }
    LEnv inner = env;
    for (const auto& [fname, ft] : fields) {
        inner["$" + fname] = Binding{"", ft, ir_access_field(ir_var(tmp, t, e.pos), fname, ft)};
    }
    std::vector<IrPtr> kids;
    std::vector<std::string> names;
    for (const auto& [fname, ft] : fields) {
        IrPtr v;
        for (std::size_t i = 0; i < e.names.size(); ++i) {
            if (e.names[i] == fname) v = expr(*e.args[i + 1], inner);
        }
        if (!v) v = ir_access_field(ir_var(tmp, t, e.pos), fname, ft);
        kids.push_back(v);
        names.push_back(fname);
    }
    IrPtr node;
    if (t.kind() == TypeKind::Record) {
        node = ir_node(IrKind::Record, t, e.pos, std::move(kids));
        node->names = names;
    } else {
        node = ir_node(IrKind::Entity, t, e.pos, std::move(kids));
    }
    return ir_let(tmp, base, node);
}

}  // namespace

IrProgram lower_program(const CheckedProgram& p, const LowerOptions& opts) {
    Lowering l(p, opts);
    return l.run();
}

}  // namespace lx
