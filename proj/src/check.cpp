#include "lx/check.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "lx/ops.hpp"
#include "lx/parser.hpp"
#include "lx/regex.hpp"
#include "universe_impl.hpp"

namespace lx {

const char* fn_kind_name(FnKind k) {
    switch (k) {
        case FnKind::Function: return "function";
        case FnKind::Method: return "method";
        case FnKind::Static: return "static";
        case FnKind::Const: return "const";
        case FnKind::Invariant: return "invariant";
        case FnKind::Validate: return "validate";
        case FnKind::TypedeclInv: return "typedecl-invariant";
        case FnKind::Main: return "main";
    }
    return "function";
}

namespace {

struct VarInfo {
    Type declared;
    Type current;
    bool is_var = false;
    bool assigned = true;
};

struct Env {
    std::map<std::string, VarInfo> vars;
    bool terminated = false;
};

struct Edge {
    std::string callee;
    bool tagged = false;
    SourcePos pos;
};

// Where an expression sits, for the lambda and flow-op position rules.
enum class Slot { Plain, Binding, Return, Statement };

bool is_untyped_number(const Expr& e) {
    return e.kind == ExprKind::Literal && (e.lit == LitKind::Int || e.lit == LitKind::Float) && e.suffix.empty();
}

bool is_none_literal(const Expr& e) { return e.kind == ExprKind::Literal && e.lit == LitKind::None; }

bool ordered_type(const Type& t, const TypeUniverse& u) {
    if (numeric_base(t, u)) return true;
    return t.kind() == TypeKind::String || t.kind() == TypeKind::ASCIIString;
}

bool primitive_numeric(const Type& t) { return t.is_numeric(); }

std::string lambda_misuse(Slot s) {
    switch (s) {
        case Slot::Binding: return "lambda stored in local";
        case Slot::Return: return "lambda returned as a result";
        default: return "lambda used outside a functor argument";
    }
}

class Checker {
public:
    Checker(CheckedProgram& out, Diagnostics& diags) : out_(out), u_(out.universe), diags_(diags) {}

    void register_functions(const SurfaceProgram& prog);
    void check_all();
    void check_recursion();
    void check_examples();
    Type constant_expr(Expr& e, const Type& expected);

private:
    CheckedProgram& out_;
    TypeUniverse& u_;
    Diagnostics& diags_;

    // Per-function state.
    CheckedFunction* fn_ = nullptr;
    bool infer_result_ = false;
    std::vector<Type> returns_;
    std::map<std::string, int> state_;  // 0 new, 1 in progress, 2 done
    std::map<std::string, std::vector<Edge>> edges_;
    std::map<std::string, std::shared_ptr<FunctionDecl>> decls_;
    bool in_lambda_ = false;

    void error(const SourcePos& p, const std::string& m) { diags_.error(p, m); }

    std::optional<Type> resolve(const TypeExprPtr& t) {
        if (!t) return std::nullopt;
        return resolve_type_expr(*t, u_, diags_);
    }

    void add_edge(const std::string& callee, bool tagged, const SourcePos& pos) {
        if (fn_) edges_[fn_->name].push_back(Edge{callee, tagged, pos});
    }

    void check_function(const std::string& name);
    Type result_of(const std::string& name, const SourcePos& use);

    // statements
    void block(Block& b, Env& env);
    void stmt(Stmt& s, Env& env);
    void merge(Env& env, const std::vector<Env>& outs);
    static void record_after(Stmt& s, const Env& env) {
        s.after.clear();
        if (env.terminated) return;
        for (const auto& [n, info] : env.vars) {
            if (info.assigned) s.after[n] = info.current;
        }
    }
    Type binding_expr(Expr& e, Env& env, const Type* expected, Slot slot);

    // expressions
    Type expr(Expr& e, Env& env, const Type* expected, Slot slot = Slot::Plain);
    Type expr_impl(Expr& e, Env& env, const Type* expected, Slot slot);
    Type literal(Expr& e, const Type* expected);
    Type binary(Expr& e, Env& env, const Type* expected);
    Type construct(Expr& e, Env& env, const Type* expected);
    Type call(Expr& e, Env& env);
    Type static_call(Expr& e, Env& env, const Type* expected);
    Type method_call(Expr& e, Env& env, const Type* expected, Slot slot);
    Type functor(Expr& e, Env& env, const Type& recv, const Type* expected);
    Type lambda(Expr& e, Env& env, const std::vector<Type>& params, const Type* body_expected, bool is_pred);
    Type field_access(Expr& e, Env& env);
    Type bulk_update(Expr& e, Env& env);
    Type flow_early(Expr& e, Env& env, const Type* expected);
    void check_args(Expr& e, Env& env, std::size_t first, const std::vector<Type>& params, const std::string& what);
    std::optional<FlowTest> resolve_flow(const FlowOp& op, const Type& subject, Env& env, const SourcePos& pos);
    FlowSplit split_checked(const Type& subject, const FlowTest& t, const SourcePos& pos);
    void expect_type(const Type& actual, const Type& expected, const SourcePos& pos, const std::string& what);
    std::string resolve_method_target(const std::string& recv_type, const std::string& method, const MethodInfo& mi,
                                      bool& dispatch);
    std::optional<Type> pick_numeric(const Type* expected);
};

void Checker::expect_type(const Type& actual, const Type& expected, const SourcePos& pos, const std::string& what) {
    if (!subtype(actual, expected, u_)) error(pos, what + " is " + actual.str() + ", expected " + expected.str());
}

std::optional<Type> Checker::pick_numeric(const Type* expected) {
    if (!expected) return std::nullopt;
    std::vector<Type> nums;
    for (const auto& m : expected->members()) {
        if (primitive_numeric(m)) nums.push_back(m);
    }
    if (nums.size() == 1) return nums[0];
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Registration

void Checker::register_functions(const SurfaceProgram& prog) {
    auto add = [&](CheckedFunction f) {
        if (out_.functions.count(f.name)) {
            error(f.pos, "duplicate function " + f.name);
            return;
        }
        out_.order.push_back(f.name);
        out_.functions[f.name] = std::move(f);
    };
    auto conditions = [&](const std::vector<Condition>& cs) {
        std::vector<CheckedCondition> out;
        for (const auto& c : cs) out.push_back(CheckedCondition{c.level.value_or(CheckLevel::Release), c.expr, c.pos});
        return out;
    };
    auto from_decl = [&](const std::shared_ptr<FunctionDecl>& fd, CheckedFunction& f) {
        for (const auto& p : fd->params) {
            auto t = resolve(p.type);
            for (const auto& q : f.params) {
                if (q.first == p.name) error(p.pos, "duplicate parameter " + p.name);
            }
            f.params.emplace_back(p.name, t.value_or(Type::never()));
        }
        if (fd->result) {
            f.result = resolve(fd->result).value_or(Type::never());
        } else {
            f.result = Type::never();
        }
        f.is_recursive = fd->is_recursive;
        f.is_ref = fd->is_ref;
        f.requires_ = conditions(fd->requires_);
        f.ensures = conditions(fd->ensures);
        f.examples = fd->examples;
        f.deferred = fd->body_kind == BodyKind::Defer;
        if (fd->body_kind == BodyKind::Block) f.body = fd->body;
        if (fd->body_kind == BodyKind::Elided) error(fd->pos, "elided body cannot be checked");
        if (fd->body_kind == BodyKind::None && !fd->is_abstract) error(fd->pos, "function " + fd->name + " has no body");
        f.pos = fd->pos;
        decls_[f.name] = fd;
    };

    auto nominal_members = [&](const std::string& owner, const std::vector<const Member*>& members) {
        const NominalInfo* info = u_.nominal(owner);
        if (!info) return;
        int ninv = 0, nval = 0;
        for (const Member* m : members) {
            switch (m->kind) {
                case MemberKind::Method:
                case MemberKind::Function: {
                    if (m->fn->is_abstract) break;
                    CheckedFunction f;
                    f.name = owner + "::" + m->fn->name;
                    f.owner = owner;
                    f.kind = m->kind == MemberKind::Method ? FnKind::Method : FnKind::Static;
                    if (f.kind == FnKind::Method) f.params.emplace_back("this", Type::nominal(owner));
                    from_decl(m->fn, f);
                    if (!m->fn->result) {
                        auto it = info->methods.find(m->fn->name);
                        if (it != info->methods.end() && it->second.result) {
                            f.result = *it->second.result;
                        } else if (f.kind == FnKind::Static) {
                            error(m->fn->pos, "function " + m->fn->name + " needs a result type");
                        }
                    }
                    add(std::move(f));
                    break;
                }
                case MemberKind::Const: {
                    CheckedFunction f;
                    f.name = owner + "::" + m->name;
                    f.owner = owner;
                    f.kind = FnKind::Const;
                    f.expr = m->expr;
                    f.result = m->type ? resolve(m->type).value_or(Type::never()) : Type::never();
                    f.pos = m->pos;
                    add(std::move(f));
                    break;
                }
                case MemberKind::Invariant:
                case MemberKind::Validate: {
                    bool inv = m->kind == MemberKind::Invariant;
                    CheckedFunction f;
                    f.name = owner + (inv ? "$inv$" + std::to_string(ninv++) : "$val$" + std::to_string(nval++));
                    f.owner = owner;
                    f.kind = inv ? FnKind::Invariant : FnKind::Validate;
                    for (const auto& fi : info->fields) f.params.emplace_back(fi.name, fi.type);
                    f.result = Type::boolean();
                    f.expr = m->expr;
                    f.pos = m->pos;
                    add(std::move(f));
                    break;
                }
                case MemberKind::Field:
                    break;
            }
        }
    };

    std::vector<StmtPtr> top;
    for (const auto& d : prog.decls) {
        switch (d.kind) {
            case DeclKind::Function: {
                CheckedFunction f;
                f.name = d.name;
                f.kind = FnKind::Function;
                from_decl(d.fn, f);
                if (!d.fn->result) error(d.pos, "function " + d.name + " needs a result type");
                if (d.fn->is_abstract || d.fn->is_override || d.fn->is_ref) {
                    error(d.pos, "modifier not allowed on top-level function " + d.name);
                }
                add(std::move(f));
                break;
            }
            case DeclKind::Const: {
                CheckedFunction f;
                f.name = d.name;
                f.kind = FnKind::Const;
                f.expr = d.expr;
                f.result = d.type ? resolve(d.type).value_or(Type::never()) : Type::never();
                f.pos = d.pos;
                add(std::move(f));
                break;
            }
            case DeclKind::Concept:
            case DeclKind::Entity: {
                std::vector<const Member*> ms;
                for (const auto& m : d.members) ms.push_back(&m);
                nominal_members(d.name, ms);
                break;
            }
            case DeclKind::Datatype: {
                std::vector<const Member*> ms;
                for (const auto& m : d.using_members) ms.push_back(&m);
                for (const auto& m : d.members) ms.push_back(&m);
                nominal_members(d.name, ms);
                for (const auto& c : d.cases) {
                    std::vector<const Member*> cms;
                    for (const auto& m : c.members) cms.push_back(&m);
                    nominal_members(c.name, cms);
                }
                break;
            }
            case DeclKind::Typedecl: {
                const TypedeclInfo* td = u_.typedecl(d.name);
                if (!td) break;
                int k = 0;
                for (const auto& m : d.members) {
                    if (m.kind != MemberKind::Invariant) continue;
                    CheckedFunction f;
                    f.name = d.name + "$inv$" + std::to_string(k++);
                    f.owner = d.name;
                    f.kind = FnKind::TypedeclInv;
                    f.params.emplace_back("$value", td->base);
                    f.result = Type::boolean();
                    f.expr = m.expr;
                    f.pos = m.pos;
                    add(std::move(f));
                }
                break;
            }
            case DeclKind::Statement:
                top.push_back(d.stmt);
                break;
            case DeclKind::Validator:
                break;
        }
    }

    if (!top.empty()) {
        // Top-level statements form `main`, which returns a record of the
        // bindings they introduce.
        CheckedFunction f;
        f.name = "main";
        f.kind = FnKind::Main;
        f.pos = top.front()->pos;
        f.body = top;
        auto rec = make_expr(ExprKind::Record, top.back()->pos);
        std::set<std::string> names;
        for (const auto& s : top) {
            if ((s->kind == StmtKind::Let || s->kind == StmtKind::Var) && names.insert(s->name).second) {
                auto v = make_expr(ExprKind::Var, top.back()->pos);
                v->name = s->name;
                rec->names.push_back(s->name);
                rec->args.push_back(v);
            }
        }
        auto ret = make_stmt(StmtKind::Return, top.back()->pos);
        ret->expr = rec;
        f.body.push_back(ret);
        f.result = Type::never();
        add(std::move(f));
    }
}

// ---------------------------------------------------------------------------
// Functions

Type Checker::result_of(const std::string& name, const SourcePos& use) {
    auto& f = out_.functions.at(name);
    if (!f.result.is_never()) return f.result;
    if (state_[name] == 1) {
        error(use, "cannot infer the result type of " + name + " while checking it; add a result type");
        return Type::never();
    }
    if (state_[name] == 0) check_function(name);
    return f.result;
}

void Checker::check_function(const std::string& name) {
    if (state_[name] != 0) return;
    state_[name] = 1;
    auto* saved_fn = fn_;
    bool saved_infer = infer_result_;
    auto saved_returns = std::move(returns_);
    bool saved_lambda = in_lambda_;
    in_lambda_ = false;

    auto& f = out_.functions.at(name);
    fn_ = &f;
    returns_.clear();
    infer_result_ = f.result.is_never();

    Env env;
    for (const auto& [p, t] : f.params) env.vars[p] = VarInfo{t, t, p == "this" && f.is_ref, true};

    for (auto& c : f.requires_) {
        auto t = expr(*c.expr, env, nullptr);
        expect_type(t, Type::boolean(), c.pos, "requires clause");
    }

    if (f.expr) {
        const Type* want = f.result.is_never() ? nullptr : &f.result;
        auto t = expr(*f.expr, env, want);
        if (f.kind == FnKind::Invariant || f.kind == FnKind::Validate || f.kind == FnKind::TypedeclInv) {
            expect_type(t, Type::boolean(), f.pos, std::string(f.kind == FnKind::Validate ? "validate" : "invariant") +
                                                       " condition");
        } else if (infer_result_) {
            f.result = t;
        } else {
            expect_type(t, f.result, f.pos, "constant value");
        }
    } else if (!f.deferred) {
        Env body_env = env;
        block(f.body, body_env);
        if (!body_env.terminated && !f.body.empty()) error(f.pos, "missing return at the end of " + name);
        if (!body_env.terminated && f.body.empty() && decls_.count(name) &&
            decls_[name]->body_kind == BodyKind::Block) {
            error(f.pos, "missing return at the end of " + name);
        }
        if (infer_result_) {
            if (returns_.empty()) {
                error(f.pos, "cannot infer the result type of " + name);
            } else {
                f.result = Type::union_of(returns_);
            }
        }
    } else if (infer_result_) {
        error(f.pos, "deferred function " + name + " needs a result type");
    }
    if (!f.owner.empty() && f.kind == FnKind::Method) {
        auto& info = u_.nominals[f.owner];
        auto short_name = name.substr(f.owner.size() + 2);
        auto it = info.methods.find(short_name);
        if (it != info.methods.end() && !it->second.result) it->second.result = f.result;
    }

    if (!f.ensures.empty()) {
        Env post = env;
        post.vars["$return"] = VarInfo{f.result, f.result, false, true};
        for (auto& c : f.ensures) {
            auto t = expr(*c.expr, post, nullptr);
            expect_type(t, Type::boolean(), c.pos, "ensures clause");
        }
    }

    state_[name] = 2;
    fn_ = saved_fn;
    infer_result_ = saved_infer;
    returns_ = std::move(saved_returns);
    in_lambda_ = saved_lambda;
}

void Checker::check_all() {
    auto names = out_.order;
    for (const auto& n : names) check_function(n);
}

void Checker::check_examples() {
    for (auto& [name, f] : out_.functions) {
        for (auto& ex : f.examples) {
            std::size_t nparams = f.params.size() - (f.kind == FnKind::Method ? 1 : 0);
            if (ex.args.size() != nparams) {
                error(ex.pos, "example has " + std::to_string(ex.args.size()) + " arguments, " + name + " takes " +
                                  std::to_string(nparams));
                continue;
            }
            std::size_t off = f.kind == FnKind::Method ? 1 : 0;
            for (std::size_t i = 0; i < ex.args.size(); ++i) constant_expr(*ex.args[i], f.params[i + off].second);
            if (f.result.is_never()) continue;
            if (f.is_ref) continue;
            constant_expr(*ex.result, f.result);
        }
    }
}

Type Checker::constant_expr(Expr& e, const Type& expected) {
    auto* saved = fn_;
    fn_ = nullptr;
    Env env;
    auto t = expr(e, env, &expected);
    expect_type(t, expected, e.pos, "example value");
    fn_ = saved;
    return t;
}

// ---------------------------------------------------------------------------
// Recursion

void Checker::check_recursion() {
    // Dispatchers call every implementation.
    for (const auto& [name, d] : out_.dispatchers) {
        for (const auto& c : d.cases) edges_[name].push_back(Edge{c.target, true, d.pos});
    }
    std::vector<std::string> nodes;
    for (const auto& [n, _] : out_.functions) nodes.push_back(n);
    for (const auto& [n, _] : out_.dispatchers) nodes.push_back(n);

    // Tarjan's strongly connected components.
    std::map<std::string, int> index, low, comp;
    std::vector<std::string> stack;
    std::set<std::string> on_stack;
    int counter = 0, ncomp = 0;
    std::function<void(const std::string&)> strong = [&](const std::string& v) {
        index[v] = low[v] = counter++;
        stack.push_back(v);
        on_stack.insert(v);
        for (const auto& e : edges_[v]) {
            if (!out_.functions.count(e.callee) && !out_.dispatchers.count(e.callee)) continue;
            if (!index.count(e.callee)) {
                strong(e.callee);
                low[v] = std::min(low[v], low[e.callee]);
            } else if (on_stack.count(e.callee)) {
                low[v] = std::min(low[v], index[e.callee]);
            }
        }
        if (low[v] == index[v]) {
            std::string w;
            do {
                w = stack.back();
                stack.pop_back();
                on_stack.erase(w);
                comp[w] = ncomp;
            } while (w != v);
            ++ncomp;
        }
    };
    for (const auto& n : nodes) {
        if (!index.count(n)) strong(n);
    }

    std::map<int, int> comp_size;
    for (const auto& [n, c] : comp) comp_size[c]++;
    auto cyclic = [&](const std::string& n) {
        if (comp_size[comp[n]] > 1) return true;
        for (const auto& e : edges_[n]) {
            if (e.callee == n) return true;
        }
        return false;
    };

    for (auto& [name, f] : out_.functions) {
        bool cyc = cyclic(name);
        if (cyc) {
            if (f.kind != FnKind::Function && f.kind != FnKind::Method && f.kind != FnKind::Static) {
                error(f.pos, std::string(fn_kind_name(f.kind)) + " " + name + " is recursive");
            } else if (!f.is_recursive) {
                error(f.pos, name + " is part of a call cycle but is not declared recursive");
            }
        } else if (f.is_recursive) {
            diags_.warning(f.pos, name + " is declared recursive but is not part of any call cycle");
        }
        for (const auto& e : edges_[name]) {
            if (!comp.count(e.callee)) continue;
            bool same = comp[e.callee] == comp[name] && cyclic(name);
            if (same && !e.tagged) {
                error(e.pos, "recursive call to " + e.callee + " needs the [recursive] tag");
            } else if (!same && e.tagged) {
                diags_.warning(e.pos, "[recursive] tag on a call to " + e.callee + " outside any call cycle");
            }
        }
    }
    for (auto& [name, d] : out_.dispatchers) d.is_recursive = cyclic(name);
}

// ---------------------------------------------------------------------------
// Statements

void Checker::merge(Env& env, const std::vector<Env>& outs) {
    std::vector<const Env*> live;
    for (const auto& o : outs) {
        if (!o.terminated) live.push_back(&o);
    }
    if (live.empty()) {
        env.terminated = true;
        return;
    }
    for (auto& [name, info] : env.vars) {
        bool assigned = true;
        std::vector<Type> cur;
        for (const Env* o : live) {
            auto it = o->vars.find(name);
            if (it == o->vars.end()) continue;
            assigned = assigned && it->second.assigned;
            cur.push_back(it->second.current);
        }
        info.assigned = assigned;
        if (!cur.empty()) info.current = Type::union_of(cur);
    }
}

void Checker::block(Block& b, Env& env) {
    std::set<std::string> before;
    for (const auto& [n, _] : env.vars) before.insert(n);
    bool reported = false;
    for (auto& s : b) {
        if (env.terminated && !reported) {
            error(s->pos, "unreachable statement");
            reported = true;
        }
        stmt(*s, env);
    }
    for (auto it = env.vars.begin(); it != env.vars.end();) {
        if (!before.count(it->first)) {
            it = env.vars.erase(it);
        } else {
            ++it;
        }
    }
}

Type Checker::binding_expr(Expr& e, Env& env, const Type* expected, Slot slot) {
    if (e.kind == ExprKind::Lambda) {
        error(e.pos, lambda_misuse(slot));
        e.ty = Type::never();
        return e.ty;
    }
    if (e.kind == ExprKind::FlowEarly) return flow_early(e, env, expected);
    return expr(e, env, expected, slot);
}

void Checker::stmt(Stmt& s, Env& env) {
    auto declare = [&](const std::string& name, const SourcePos& pos) {
        if (env.vars.count(name) && name != "$") {
            error(pos, "duplicate binding of " + name);
            return false;
        }
        if (!name.empty() && name[0] == '$') {
            error(pos, "names starting with $ are reserved");
            return false;
        }
        return true;
    };
    switch (s.kind) {
        case StmtKind::Let:
        case StmtKind::Var: {
            bool is_var = s.kind == StmtKind::Var;
            std::optional<Type> declared;
            if (s.type) declared = resolve(s.type).value_or(Type::never());
            Type t = Type::never();
            if (s.expr) {
                t = binding_expr(*s.expr, env, declared ? &*declared : nullptr, Slot::Binding);
                if (declared) expect_type(t, *declared, s.expr->pos, "initializer of " + s.name);
            } else if (!is_var) {
                error(s.pos, "let binding " + s.name + " needs an initializer");
            } else if (!declared) {
                error(s.pos, "var " + s.name + " needs a type or an initializer");
            }
            Type decl_t = declared ? *declared : t;
            s.ty = decl_t;
            if (declare(s.name, s.pos)) env.vars[s.name] = VarInfo{decl_t, decl_t, is_var, s.expr != nullptr};
            break;
        }
        case StmtKind::Assign: {
            auto it = env.vars.find(s.name);
            if (it == env.vars.end()) {
                error(s.pos, "assignment to unknown variable " + s.name);
                binding_expr(*s.expr, env, nullptr, Slot::Binding);
                break;
            }
            if (!it->second.is_var) error(s.pos, "cannot assign to let-bound " + s.name);
            Type declared = it->second.declared;
            auto t = binding_expr(*s.expr, env, &declared, Slot::Binding);
            expect_type(t, declared, s.expr->pos, "value assigned to " + s.name);
            s.ty = declared;
            auto& info = env.vars[s.name];
            info.assigned = true;
            info.current = declared;
            break;
        }
        case StmtKind::Return: {
            if (!fn_) {
                error(s.pos, "return outside a function");
                break;
            }
            if (fn_->kind == FnKind::Main && !env.terminated && s.expr && s.expr->kind != ExprKind::Record) {
                error(s.pos, "return is not allowed among top-level statements");
            }
            const Type* want = infer_result_ ? nullptr : &fn_->result;
            if (!s.expr) {
                if (want) expect_type(Type::none(), *want, s.pos, "returned value");
                returns_.push_back(Type::none());
            } else {
                auto t = binding_expr(*s.expr, env, want, Slot::Return);
                if (want) expect_type(t, *want, s.expr->pos, "returned value");
                returns_.push_back(t);
            }
            env.terminated = true;
            break;
        }
        case StmtKind::Assert: {
            auto t = expr(*s.expr, env, nullptr);
            expect_type(t, Type::boolean(), s.expr->pos, "assert condition");
            break;
        }
        case StmtKind::If: {
            std::vector<Env> outs;
            bool single = s.branches.size() == 1;
            std::optional<Type> else_binder;
            for (auto& br : s.branches) {
                Env benv = env;
                if (br.flow) {
                    auto subj = expr(*br.cond, env, nullptr);
                    auto test = resolve_flow(*br.flow, subj, env, br.cond->pos);
                    if (test) {
                        br.test = *test;
                        auto sp = split_checked(subj, *test, br.cond->pos);
                        br.pass_ty = sp.pass;
                        br.fail_ty = sp.fail;
                        benv.vars["$"] = VarInfo{sp.pass, sp.pass, false, true};
                        if (single) else_binder = sp.fail;
                    }
                } else {
                    auto t = expr(*br.cond, env, nullptr);
                    expect_type(t, Type::boolean(), br.cond->pos, "if condition");
                }
                block(br.body, benv);
                outs.push_back(std::move(benv));
            }
            if (s.else_body) {
                Env eenv = env;
                if (else_binder) eenv.vars["$"] = VarInfo{*else_binder, *else_binder, false, true};
                block(*s.else_body, eenv);
                outs.push_back(std::move(eenv));
            } else {
                outs.push_back(env);
            }
            merge(env, outs);
            record_after(s, env);
            break;
        }
        case StmtKind::Match: {
            auto subj = expr(*s.expr, env, nullptr);
            Type remaining = subj;
            std::vector<Env> outs;
            bool exhaustive = false;
            for (auto& arm : s.arms) {
                Env aenv = env;
                if (exhaustive) error(arm.pos, "unreachable match arm");
                switch (arm.kind) {
                    case MatchArm::Kind::Type: {
                        auto t = resolve(arm.type);
                        if (!t) break;
                        FlowTest ft;
                        ft.kind = FlowTest::Kind::Type;
                        ft.type = *t;
                        auto sp = flow_narrow(remaining, ft, u_);
                        if (sp.pass.is_never()) {
                            error(arm.pos, "match arm " + t->str() + " can never match " + remaining.str());
                        }
                        arm.ty = sp.pass;
                        remaining = sp.fail;
                        break;
                    }
                    case MatchArm::Kind::Literal: {
                        auto lt = expr(*arm.literal, env, &remaining);
                        if (!is_key_type(lt, u_)) error(arm.pos, "literal arm of non-key type " + lt.str());
                        if (!subtype(lt, remaining, u_)) {
                            error(arm.pos, "match arm literal of type " + lt.str() + " can never match " + remaining.str());
                        }
                        arm.ty = lt;
                        break;
                    }
                    case MatchArm::Kind::Wildcard:
                        arm.ty = remaining;
                        remaining = Type::never();
                        break;
                }
                aenv.vars["$"] = VarInfo{arm.ty, arm.ty, false, true};
                block(arm.body, aenv);
                outs.push_back(std::move(aenv));
                if (remaining.is_never()) exhaustive = true;
            }
            s.exhaustive = exhaustive;
            s.ty = subj;
            if (!exhaustive) outs.push_back(env);
            merge(env, outs);
            record_after(s, env);
            break;
        }
        case StmtKind::Narrow: {
            auto it = env.vars.find(s.name);
            if (it == env.vars.end()) {
                error(s.pos, "narrowing of unknown variable " + s.name);
                break;
            }
            if (!it->second.assigned) error(s.pos, "variable " + s.name + " may be read before assignment");
            Type subj = it->second.current;
            auto test = resolve_flow(s.flow, subj, env, s.pos);
            if (!test) break;
            s.test = *test;
            auto sp = split_checked(subj, *test, s.pos);
            if (s.early && fn_) {
                if (!infer_result_ && !subtype(sp.fail, fn_->result, u_)) {
                    error(s.pos, "early return of " + sp.fail.str() + " does not fit the result type " + fn_->result.str());
                }
                if (infer_result_) returns_.push_back(sp.fail);
            }
            s.aux_ty = subj;
            s.ty = sp.pass;
            env.vars[s.name].current = sp.pass;
            break;
        }
        case StmtKind::ExprStmt: {
            Expr& e = *s.expr;
            if (e.kind == ExprKind::FlowEarly) {
                flow_early(e, env, nullptr);
                break;
            }
            if (e.kind == ExprKind::BulkUpdate && e.args[0]->kind == ExprKind::Var && e.args[0]->name == "this") {
                if (!fn_ || !fn_->is_ref) error(s.pos, "this can only be updated inside a ref method");
                expr(e, env, nullptr);
                break;
            }
            if (e.kind == ExprKind::MethodCall && e.ref_tag) {
                expr(e, env, nullptr, Slot::Statement);
                break;
            }
            expr(e, env, nullptr, Slot::Statement);
            error(s.pos, "expression statement has no effect");
            break;
        }
        case StmtKind::Block:
            block(s.body, env);
            break;
        case StmtKind::Defer:
            error(s.pos, "defer is only allowed as a whole function body");
            break;
        case StmtKind::Elided:
            error(s.pos, "elided code cannot be checked");
            break;
    }
}

// ---------------------------------------------------------------------------
// Flow ops

std::optional<FlowTest> Checker::resolve_flow(const FlowOp& op, const Type& subject, Env& env, const SourcePos& pos) {
    FlowTest t;
    t.kind = op.kind;
    t.negated = op.negated;
    if (op.kind == FlowTest::Kind::Type) {
        auto ty = resolve(op.type);
        if (!ty) return std::nullopt;
        t.type = *ty;
    } else if (op.kind == FlowTest::Kind::Literal) {
        auto lt = expr(*op.literal, env, &subject);
        if (!is_key_type(lt, u_)) {
            error(pos, "literal test on non-key type " + lt.str());
            return std::nullopt;
        }
        t.type = lt;
    }
    return t;
}

FlowSplit Checker::split_checked(const Type& subject, const FlowTest& t, const SourcePos& pos) {
    auto sp = flow_narrow(subject, t, u_);
    if (subject.is_never()) return sp;
    if (sp.pass.is_never()) {
        error(pos, "test " + flow_test_str(t) + " can never succeed on " + subject.str());
    } else if (sp.fail.is_never()) {
        error(pos, "test " + flow_test_str(t) + " always succeeds on " + subject.str());
    }
    return sp;
}

Type Checker::flow_early(Expr& e, Env& env, const Type* expected) {
    auto subj = expr(*e.args[0], env, nullptr);
    e.aux_ty = subj;
    auto test = resolve_flow(e.flow, subj, env, e.pos);
    if (!test) return e.ty = Type::never();
    e.test = *test;
    auto sp = split_checked(subj, *test, e.pos);
    if (!fn_) {
        error(e.pos, "early return outside a function");
    } else if (infer_result_) {
        returns_.push_back(sp.fail);
    } else if (!subtype(sp.fail, fn_->result, u_)) {
        error(e.pos, "early return of " + sp.fail.str() + " does not fit the result type " + fn_->result.str());
    }
    if (in_lambda_) error(e.pos, "early return inside a lambda");
    (void)expected;
    e.ty = sp.pass;
    return e.ty;
}

// ---------------------------------------------------------------------------
// Expressions

Type Checker::expr(Expr& e, Env& env, const Type* expected, Slot slot) {
    e.ty = expr_impl(e, env, expected, slot);
    return e.ty;
}

Type Checker::literal(Expr& e, const Type* expected) {
    switch (e.lit) {
        case LitKind::None: return Type::none();
        case LitKind::True:
        case LitKind::False: return Type::boolean();
        case LitKind::String: return Type::string();
        case LitKind::Rational: {
            try {
                numeric_from_text(Type::rational(), e.text);
            } catch (const Fault& f) {
                error(e.pos, std::string("invalid rational literal: ") + f.what());
            }
            return Type::rational();
        }
        case LitKind::Int:
        case LitKind::Float:
        case LitKind::Decimal: {
            std::optional<Type> t;
            const std::string& sfx = e.suffix;
            if (sfx == "i") t = Type::int_();
            else if (sfx == "n") t = Type::nat();
            else if (sfx == "I") t = Type::big_int();
            else if (sfx == "N") t = Type::big_nat();
            else if (sfx == "f") t = Type::float_();
            else if (sfx == "d") t = Type::decimal();
            else if (sfx == "R") t = Type::rational();
            else if (sfx.empty()) {
                t = pick_numeric(expected);
                if (!t) {
                    error(e.pos, "numeric literal " + e.text + " needs a type suffix here");
                    return Type::never();
                }
            }
            if (!t) {
                error(e.pos, "unknown numeric suffix " + sfx);
                return Type::never();
            }
            bool fractional = e.text.find('.') != std::string::npos;
            if (fractional && t->is_integral()) {
                error(e.pos, "fractional literal " + e.text + " for integral type " + t->str());
                return Type::never();
            }
            try {
                numeric_from_text(*t, e.text);
            } catch (const Fault&) {
                error(e.pos, "literal " + e.text + " is out of range for " + t->str());
            } catch (const std::exception&) {
                error(e.pos, "malformed literal " + e.text);
            }
            return *t;
        }
        case LitKind::TypedString: {
            if (auto* v = u_.validator(e.suffix)) {
                auto re = Regex::parse(v->regex);
                if (re && !re->full_match(e.text)) {
                    error(e.pos, "string \"" + e.text + "\" does not match validator " + e.suffix);
                }
                return Type::string_of(e.suffix);
            }
            if (auto* td = u_.typedecl(e.suffix)) {
                if (td->base.kind() == TypeKind::StringOf) {
                    auto* v = u_.validator(td->base.name());
                    auto re = v ? Regex::parse(v->regex) : std::nullopt;
                    if (re && !re->full_match(e.text)) {
                        error(e.pos, "string \"" + e.text + "\" is not a valid " + e.suffix);
                    }
                } else if (td->base.kind() != TypeKind::String && td->base.kind() != TypeKind::ASCIIString) {
                    error(e.pos, "typedecl " + e.suffix + " is not string based");
                }
                return Type::typedecl(e.suffix);
            }
            error(e.pos, "unknown string type " + e.suffix);
            return Type::never();
        }
        case LitKind::TypedNumber: {
            auto* td = u_.typedecl(e.suffix);
            if (!td || !td->base.is_numeric()) {
                error(e.pos, "unknown numeric typedecl " + e.suffix);
                return Type::never();
            }
            try {
                numeric_from_text(td->base, e.text);
            } catch (const std::exception&) {
                error(e.pos, "literal " + e.text + " is out of range for " + td->base.str());
            }
            return Type::typedecl(e.suffix);
        }
    }
    return Type::never();
}

Type Checker::expr_impl(Expr& e, Env& env, const Type* expected, Slot slot) {
    switch (e.kind) {
        case ExprKind::Literal: return literal(e, expected);
        case ExprKind::Var: {
            auto it = env.vars.find(e.name);
            if (it != env.vars.end()) {
                if (!it->second.assigned) error(e.pos, "variable " + e.name + " may be read before assignment");
                return it->second.current;
            }
            auto fit = out_.functions.find(e.name);
            if (fit != out_.functions.end() && fit->second.kind == FnKind::Const) {
                e.res = Resolution::Function;
                e.target = e.name;
                add_edge(e.name, false, e.pos);
                return result_of(e.name, e.pos);
            }
            if (e.name == "$") {
                error(e.pos, "$ is not bound here");
            } else {
                error(e.pos, "unknown variable " + e.name);
            }
            return Type::never();
        }
        case ExprKind::Elided:
            error(e.pos, "elided code cannot be checked");
            return Type::never();
        case ExprKind::Tuple: {
            std::vector<Type> ts;
            const Type* exp = expected && expected->kind() == TypeKind::Tuple &&
                                      expected->args().size() == e.args.size()
                                  ? expected
                                  : nullptr;
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                ts.push_back(expr(*e.args[i], env, exp ? &exp->args()[i] : nullptr));
            }
            return Type::tuple(ts);
        }
        case ExprKind::Record: {
            std::vector<std::pair<std::string, Type>> fs;
            std::set<std::string> seen;
            for (std::size_t i = 0; i < e.args.size(); ++i) {
                if (!seen.insert(e.names[i]).second) error(e.pos, "duplicate record field " + e.names[i]);
                std::optional<Type> ft;
                if (expected && expected->kind() == TypeKind::Record) ft = expected->record_field(e.names[i]);
                fs.emplace_back(e.names[i], expr(*e.args[i], env, ft ? &*ft : nullptr));
            }
            return Type::record(fs);
        }
        case ExprKind::Construct: return construct(e, env, expected);
        case ExprKind::BulkUpdate: return bulk_update(e, env);
        case ExprKind::Index: {
            auto t = expr(*e.args[0], env, nullptr);
            if (t.is_never()) return t;
            if (t.kind() != TypeKind::Tuple) {
                error(e.pos, "index ." + std::to_string(e.index) + " on non-tuple type " + t.str());
                return Type::never();
            }
            if (e.index < 0 || static_cast<std::size_t>(e.index) >= t.args().size()) {
                error(e.pos, "tuple index " + std::to_string(e.index) + " out of range for " + t.str());
                return Type::never();
            }
            return t.args()[static_cast<std::size_t>(e.index)];
        }
        case ExprKind::Field: return field_access(e, env);
        case ExprKind::Unary: {
            if (e.name == "!") {
                auto t = expr(*e.args[0], env, nullptr);
                expect_type(t, Type::boolean(), e.args[0]->pos, "operand of !");
                return Type::boolean();
            }
            if (e.name == "-") {
                auto t = expr(*e.args[0], env, expected);
                if (t.is_never()) return t;
                auto nb = numeric_base(t, u_);
                if (!nb || !nb->is_signed()) {
                    error(e.pos, "unary - requires a signed numeric operand, found " + t.str());
                    return Type::never();
                }
                return t;
            }
            if (e.name == "ref") {
                error(e.pos, "ref is only allowed on method calls");
                return Type::never();
            }
            error(e.pos, "unknown unary operator " + e.name);
            return Type::never();
        }
        case ExprKind::Binary: return binary(e, env, expected);
        case ExprKind::Call: return call(e, env);
        case ExprKind::StaticCall: return static_call(e, env, expected);
        case ExprKind::MethodCall: return method_call(e, env, expected, slot);
        case ExprKind::Lambda:
            error(e.pos, lambda_misuse(slot));
            return Type::never();
        case ExprKind::FlowTest:
        case ExprKind::FlowCast: {
            auto subj = expr(*e.args[0], env, nullptr);
            e.aux_ty = subj;
            auto test = resolve_flow(e.flow, subj, env, e.pos);
            if (!test) return Type::never();
            e.test = *test;
            auto sp = split_checked(subj, *test, e.pos);
            return e.kind == ExprKind::FlowTest ? Type::boolean() : sp.pass;
        }
        case ExprKind::FlowEarly:
            error(e.pos, std::string("operator ") + e.name +
                             " is only allowed as a whole initializer, assignment, return value or statement");
            return Type::never();
        case ExprKind::IfExpr: {
            auto c = expr(*e.args[0], env, nullptr);
            expect_type(c, Type::boolean(), e.args[0]->pos, "if condition");
            const Type* want = expected;
            Type a, b;
            if (!want && is_untyped_number(*e.args[1]) && !is_untyped_number(*e.args[2])) {
                b = expr(*e.args[2], env, nullptr);
                a = expr(*e.args[1], env, &b);
            } else {
                a = expr(*e.args[1], env, want);
                b = expr(*e.args[2], env, want ? want : &a);
            }
            return Type::union_of({a, b});
        }
        case ExprKind::LetIn: {
            auto bt = expr(*e.args[0], env, nullptr);
            Env inner = env;
            inner.vars[e.name] = VarInfo{bt, bt, false, true};
            return expr(*e.args[1], inner, expected);
        }
    }
    return Type::never();
}

Type Checker::binary(Expr& e, Env& env, const Type* expected) {
    const std::string& op = e.name;
    Expr& l = *e.args[0];
    Expr& r = *e.args[1];
    if (op == "&&" || op == "||" || op == "==>") {
        auto a = expr(l, env, nullptr);
        auto b = expr(r, env, nullptr);
        expect_type(a, Type::boolean(), l.pos, "left operand of " + op);
        expect_type(b, Type::boolean(), r.pos, "right operand of " + op);
        return Type::boolean();
    }
    auto operands = [&](const Type* hint) -> std::pair<Type, Type> {
        if (is_untyped_number(l) && !is_untyped_number(r)) {
            auto b = expr(r, env, hint);
            auto a = expr(l, env, &b);
            return {a, b};
        }
        auto a = expr(l, env, hint);
        auto b = expr(r, env, &a);
        return {a, b};
    };
    if (op == "==" || op == "!=" || op == "===" || op == "!==") {
        if (is_none_literal(l) || is_none_literal(r)) {
            auto a = expr(l, env, nullptr);
            auto b = expr(r, env, nullptr);
            const Type& other = is_none_literal(l) ? b : a;
            if (!other.is_never() && !subtype(Type::none(), other, u_)) {
                error(e.pos, "comparison with none on " + other.str() + ", which cannot be none");
            }
            return Type::boolean();
        }
        auto [a, b] = operands(nullptr);
        if (a.is_never() || b.is_never()) return Type::boolean();
        auto key = [&](const Type& t) {
            for (const auto& m : t.members()) {
                if (!is_key_type(m, u_)) return false;
            }
            return true;
        };
        if (!key(a) || !key(b)) {
            error(e.pos, "equality is only defined on key types, found " + a.str() + " and " + b.str());
        } else if (!subtype(a, b, u_) && !subtype(b, a, u_)) {
            error(e.pos, "cannot compare " + a.str() + " with " + b.str());
        }
        return Type::boolean();
    }
    if (op == "<" || op == "<=" || op == ">" || op == ">=") {
        auto [a, b] = operands(nullptr);
        if (a.is_never() || b.is_never()) return Type::boolean();
        if (a != b || !ordered_type(a, u_)) {
            error(e.pos, "operator " + op + " requires ordered operands of the same type, found " + a.str() + " and " +
                             b.str());
        }
        return Type::boolean();
    }
    if (op == "+" || op == "-" || op == "*" || op == "/" || op == "%") {
        auto [a, b] = operands(expected);
        if (a.is_never() || b.is_never()) return Type::never();
        auto nb = numeric_base(a, u_);
        if (a != b || !nb) {
            error(e.pos, "operator " + op + " requires numeric operands of the same type, found " + a.str() + " and " +
                             b.str());
            return Type::never();
        }
        if (op == "%" && !nb->is_integral()) error(e.pos, "operator % requires integral operands, found " + a.str());
        if (op == "%" && a.kind() == TypeKind::Typedecl) error(e.pos, "operator % is not defined on typedecls");
        if ((op == "*" || op == "/") && a.kind() == TypeKind::Typedecl) {
            error(e.pos, "operator " + op + " is not defined on typedecl " + a.str());
        }
        return a;
    }
    error(e.pos, "unknown operator " + op);
    return Type::never();
}

void Checker::check_args(Expr& e, Env& env, std::size_t first, const std::vector<Type>& params, const std::string& what) {
    std::size_t n = e.args.size() - first;
    if (n != params.size()) {
        error(e.pos, what + " takes " + std::to_string(params.size()) + " argument" + (params.size() == 1 ? "" : "s") +
                         ", found " + std::to_string(n));
        for (std::size_t i = first; i < e.args.size(); ++i) {
            if (e.args[i]->kind != ExprKind::Lambda) expr(*e.args[i], env, nullptr);
        }
        return;
    }
    for (std::size_t i = 0; i < n; ++i) {
        Expr& a = *e.args[first + i];
        if (a.kind == ExprKind::Lambda) {
            error(a.pos, "lambda passed to a non-functor call");
            continue;
        }
        auto t = expr(a, env, &params[i]);
        if (!subtype(t, params[i], u_)) {
            error(a.pos, "in call to " + what + ": argument is " + t.str() + ", expected " + params[i].str());
        }
    }
}

Type Checker::call(Expr& e, Env& env) {
    auto it = out_.functions.find(e.name);
    if (it == out_.functions.end() || it->second.kind != FnKind::Function) {
        if (env.vars.count(e.name)) {
            error(e.pos, e.name + " is not a function");
        } else {
            error(e.pos, "unknown function " + e.name);
        }
        for (auto& a : e.args) {
            if (a->kind != ExprKind::Lambda) expr(*a, env, nullptr);
        }
        return Type::never();
    }
    auto& f = it->second;
    if (f.deferred) error(e.pos, "call to deferred function " + e.name);
    if (!e.type_args.empty()) error(e.pos, "function " + e.name + " takes no type arguments");
    std::vector<Type> ps;
    for (const auto& p : f.params) ps.push_back(p.second);
    check_args(e, env, 0, ps, e.name);
    e.res = Resolution::Function;
    e.target = e.name;
    add_edge(e.name, e.recursive_tag, e.pos);
    return result_of(e.name, e.pos);
}

Type Checker::static_call(Expr& e, Env& env, const Type* expected) {
    const std::string& scope = e.scope;
    if (scope == "String" && e.name == "concat") {
        for (auto& a : e.args) {
            auto t = expr(*a, env, nullptr);
            if (!t.is_never() && t.kind() != TypeKind::String && t.kind() != TypeKind::ASCIIString &&
                t.kind() != TypeKind::StringOf) {
                error(a->pos, "String::concat argument is " + t.str() + ", expected String");
            }
        }
        e.res = Resolution::StringConcat;
        return Type::string();
    }
    if (scope == "List" && (e.name == "zip" || e.name == "concat")) {
        if (e.args.size() != 2) {
            error(e.pos, "List::" + e.name + " takes 2 arguments");
            return Type::never();
        }
        std::vector<Type> targs;
        for (const auto& ta : e.type_args) targs.push_back(resolve(ta).value_or(Type::never()));
        Type want0, want1;
        const Type* w0 = nullptr;
        const Type* w1 = nullptr;
        if (e.name == "zip" && targs.size() == 2) {
            want0 = Type::list(targs[0]);
            want1 = Type::list(targs[1]);
            w0 = &want0;
            w1 = &want1;
        } else if (e.name == "concat" && targs.size() == 1) {
            want0 = Type::list(targs[0]);
            w0 = w1 = &want0;
        } else if (!targs.empty()) {
            error(e.pos, "wrong number of type arguments to List::" + e.name);
        }
        auto a = expr(*e.args[0], env, w0);
        auto b = expr(*e.args[1], env, w1 ? w1 : &a);
        if (a.is_never() || b.is_never()) return Type::never();
        if (a.kind() != TypeKind::List || b.kind() != TypeKind::List) {
            error(e.pos, "List::" + e.name + " expects lists, found " + a.str() + " and " + b.str());
            return Type::never();
        }
        if (w0) expect_type(a, *w0, e.args[0]->pos, "first argument");
        if (w1) expect_type(b, *w1, e.args[1]->pos, "second argument");
        e.res = Resolution::Functor;
        e.target = e.name;
        if (e.name == "zip") return Type::list(Type::tuple({a.args()[0], b.args()[0]}));
        if (a != b) {
            error(e.pos, "List::concat on different list types " + a.str() + " and " + b.str());
            return Type::never();
        }
        return a;
    }
    if (e.name == "from" && !e.no_parens && (u_.validator(scope) || u_.typedecl(scope))) {
        if (e.args.size() != 1) {
            error(e.pos, scope + "::from takes 1 argument");
            return Type::never();
        }
        e.res = Resolution::Inject;
        if (u_.validator(scope)) {
            auto s = Type::string();
            auto t = expr(*e.args[0], env, &s);
            expect_type(t, Type::string(), e.args[0]->pos, "argument of " + scope + "::from");
            e.target = scope;
            return Type::string_of(scope);
        }
        auto base = u_.typedecl(scope)->base;
        auto t = expr(*e.args[0], env, &base);
        expect_type(t, base, e.args[0]->pos, "argument of " + scope + "::from");
        e.target = scope;
        return Type::typedecl(scope);
    }
    if (!u_.nominal(scope)) {
        error(e.pos, "unknown type " + scope);
        for (auto& a : e.args) {
            if (a->kind != ExprKind::Lambda) expr(*a, env, nullptr);
        }
        return Type::never();
    }
    (void)expected;
    if (e.no_parens) {
        // Constant lookup through the provides closure.
        std::vector<std::string> owners{scope};
        for (const auto& s : u_.supertypes(scope)) owners.push_back(s);
        for (const auto& o : owners) {
            auto name = o + "::" + e.name;
            auto it = out_.functions.find(name);
            if (it != out_.functions.end() && it->second.kind == FnKind::Const) {
                e.res = Resolution::Function;
                e.target = name;
                add_edge(name, false, e.pos);
                return result_of(name, e.pos);
            }
        }
        error(e.pos, "unknown constant " + scope + "::" + e.name);
        return Type::never();
    }
    auto* mi = u_.find_method(scope, e.name);
    if (!mi || !mi->is_static) {
        error(e.pos, "unknown function " + scope + "::" + e.name);
        for (auto& a : e.args) {
            if (a->kind != ExprKind::Lambda) expr(*a, env, nullptr);
        }
        return Type::never();
    }
    auto name = mi->declaring_type + "::" + e.name;
    std::vector<Type> ps;
    for (const auto& p : mi->params) ps.push_back(p.second);
    check_args(e, env, 0, ps, name);
    if (out_.functions.count(name) && out_.functions.at(name).deferred) error(e.pos, "call to deferred function " + name);
    e.res = Resolution::Function;
    e.target = name;
    add_edge(name, e.recursive_tag, e.pos);
    return result_of(name, e.pos);
}

std::string Checker::resolve_method_target(const std::string& recv_type, const std::string& method, const MethodInfo& mi,
                                           bool& dispatch) {
    dispatch = false;
    if (u_.is_entity(recv_type)) return mi.declaring_type + "::" + method;
    std::vector<DispatchCase> cases;
    std::set<std::string> targets;
    for (const auto& ent : u_.entities_providing(recv_type)) {
        auto* impl = u_.find_method(ent, method);
        if (!impl || impl->is_abstract) continue;
        auto t = impl->declaring_type + "::" + method;
        cases.push_back(DispatchCase{ent, t});
        targets.insert(t);
    }
    if (targets.size() == 1 && !mi.is_abstract && *targets.begin() == mi.declaring_type + "::" + method) {
        return *targets.begin();
    }
    if (targets.size() == 1 && mi.is_abstract) return *targets.begin();
    dispatch = true;
    auto name = recv_type + "::" + method + "$dispatch";
    if (!out_.dispatchers.count(name)) {
        Dispatcher d;
        d.name = name;
        d.method = recv_type + "::" + method;
        d.params.emplace_back("this", Type::nominal(recv_type));
        for (const auto& p : mi.params) d.params.push_back(p);
        d.cases = cases;
        d.pos = mi.pos;
        out_.dispatchers[name] = d;
    }
    return name;
}

Type Checker::method_call(Expr& e, Env& env, const Type* expected, Slot slot) {
    auto recv = expr(*e.args[0], env, nullptr);
    if (recv.is_never()) {
        for (std::size_t i = 1; i < e.args.size(); ++i) {
            if (e.args[i]->kind != ExprKind::Lambda) expr(*e.args[i], env, nullptr);
        }
        return Type::never();
    }
    if (recv.kind() == TypeKind::List || recv.kind() == TypeKind::Map) {
        if (e.ref_tag) error(e.pos, "ref on a functor call");
        return functor(e, env, recv, expected);
    }
    if ((recv.kind() == TypeKind::Typedecl || recv.kind() == TypeKind::StringOf) && e.name == "value") {
        if (e.args.size() != 1) error(e.pos, "value() takes no arguments");
        e.res = Resolution::Extract;
        if (recv.kind() == TypeKind::StringOf) return Type::string();
        return u_.typedecl_base(recv.name());
    }
    if (recv.kind() != TypeKind::Nominal) {
        error(e.pos, "no method " + e.name + " on type " + recv.str());
        return Type::never();
    }
    auto* mi = u_.find_method(recv.name(), e.name);
    if (!mi || mi->is_static) {
        error(e.pos, "no method " + e.name + " on type " + recv.str());
        return Type::never();
    }
    if (mi->is_ref != e.ref_tag) {
        error(e.pos, mi->is_ref ? "call to ref method " + e.name + " must be tagged ref"
                                : "ref tag on non-ref method " + e.name);
    }
    if (e.ref_tag) {
        if (slot != Slot::Binding && slot != Slot::Statement) {
            error(e.pos, "ref call must be a whole statement or initializer");
        }
        const Expr& r = *e.args[0];
        bool var_recv = r.kind == ExprKind::Var && env.vars.count(r.name) && env.vars.at(r.name).is_var;
        if (!var_recv) error(e.pos, "ref call receiver must be a var-bound variable");
        if (!u_.is_entity(recv.name())) error(e.pos, "ref call requires an entity receiver");
        if (in_lambda_) error(e.pos, "ref call inside a lambda");
    }
    bool dispatch = false;
    auto target = resolve_method_target(recv.name(), e.name, *mi, dispatch);
    std::vector<Type> ps;
    for (const auto& p : mi->params) ps.push_back(p.second);
    check_args(e, env, 1, ps, recv.name() + "." + e.name);
    e.res = dispatch ? Resolution::Dispatch : Resolution::Function;
    e.target = target;
    add_edge(target, e.recursive_tag, e.pos);
    if (dispatch) {
        auto& d = out_.dispatchers[target];
        Type r = Type::never();
        if (mi->result) {
            r = *mi->result;
        } else {
            r = result_of(mi->declaring_type + "::" + e.name, e.pos);
        }
        d.result = r;
        return r;
    }
    if (out_.functions.count(target) && out_.functions.at(target).deferred) {
        error(e.pos, "call to deferred method " + target);
    }
    if (!out_.functions.count(target)) return mi->result.value_or(Type::never());
    return result_of(target, e.pos);
}

Type Checker::lambda(Expr& e, Env& env, const std::vector<Type>& params, const Type* body_expected, bool is_pred) {
    if (e.kind != ExprKind::Lambda) {
        error(e.pos, is_pred ? "expected a pred lambda argument" : "expected a fn lambda argument");
        expr(e, env, nullptr);
        return Type::never();
    }
    if (e.is_pred != is_pred) {
        error(e.pos, is_pred ? "this functor takes a pred lambda" : "this functor takes a fn lambda");
    }
    if (e.names.size() != params.size()) {
        error(e.pos, "lambda takes " + std::to_string(e.names.size()) + " parameters, expected " +
                         std::to_string(params.size()));
        e.ty = Type::never();
        return Type::never();
    }
    Env inner = env;
    e.param_tys = params;
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (i < e.type_args.size() && e.type_args[i]) {
            auto t = resolve(e.type_args[i]);
            if (t && *t != params[i]) {
                error(e.pos, "lambda parameter " + e.names[i] + " is " + t->str() + ", expected " + params[i].str());
            }
        }
        if (inner.vars.count(e.names[i])) error(e.pos, "lambda parameter " + e.names[i] + " shadows a binding");
        inner.vars[e.names[i]] = VarInfo{params[i], params[i], false, true};
    }
    // Captures are read-only: mark every outer var as immutable inside.
    for (auto& [n, v] : inner.vars) v.is_var = false;
    bool saved = in_lambda_;
    in_lambda_ = true;
    const Type* want = is_pred ? nullptr : body_expected;
    Type bool_t = Type::boolean();
    if (is_pred) want = &bool_t;
    auto t = expr(*e.args[0], inner, want);
    in_lambda_ = saved;
    if (is_pred) expect_type(t, Type::boolean(), e.args[0]->pos, "pred body");
    e.ty = Type::never();
    return t;
}

Type Checker::functor(Expr& e, Env& env, const Type& recv, const Type* expected) {
    bool on_map = recv.kind() == TypeKind::Map;
    const FunctorSig* sig = find_functor(on_map, e.name);
    if (!sig) {
        error(e.pos, "unknown " + std::string(on_map ? "Map" : "List") + " operation " + e.name);
        return Type::never();
    }
    e.res = Resolution::Functor;
    e.target = e.name;
    std::vector<Type> targs;
    for (const auto& ta : e.type_args) targs.push_back(resolve(ta).value_or(Type::never()));
    auto nargs = e.args.size() - 1;
    auto want_args = [&](std::size_t n) {
        if (nargs != n) {
            error(e.pos, e.name + " takes " + std::to_string(n) + " argument" + (n == 1 ? "" : "s") + ", found " +
                             std::to_string(nargs));
            return false;
        }
        return true;
    };
    auto want_targs = [&](std::size_t n) {
        if (targs.size() > n) {
            error(e.pos, e.name + " takes at most " + std::to_string(n) + " type argument" + (n == 1 ? "" : "s"));
            return false;
        }
        return true;
    };
    auto plain = [&](std::size_t i, const Type& want, const std::string& what) {
        Expr& a = *e.args[i];
        if (a.kind == ExprKind::Lambda) {
            error(a.pos, "lambda passed where a value is expected");
            return Type::never();
        }
        auto t = expr(a, env, &want);
        expect_type(t, want, a.pos, what);
        return t;
    };
    (void)expected;

    if (on_map) {
        Type k = recv.args()[0], v = recv.args()[1];
        if (e.name == "size") {
            want_args(0);
            return Type::nat();
        }
        if (e.name == "get" || e.name == "has") {
            if (!want_args(1)) return Type::never();
            plain(1, k, "key argument");
            return e.name == "get" ? v : Type::boolean();
        }
        if (e.name == "map") {
            if (!want_args(1) || !want_targs(1)) return Type::never();
            auto body = lambda(*e.args[1], env, {k, v}, targs.empty() ? nullptr : &targs[0], false);
            Type u = targs.empty() ? body : targs[0];
            if (!targs.empty()) expect_type(body, u, e.args[1]->pos, "map function result");
            return Type::map(k, u);
        }
        if (e.name == "filter") {
            if (!want_args(1)) return Type::never();
            lambda(*e.args[1], env, {k, v}, nullptr, true);
            return recv;
        }
        return Type::never();
    }

    Type t = recv.args()[0];
    const std::string& n = e.name;
    if (n == "size") {
        want_args(0);
        return Type::nat();
    }
    if (n == "get") {
        if (!want_args(1)) return Type::never();
        plain(1, Type::nat(), "index");
        return t;
    }
    if (n == "slice") {
        if (!want_args(2)) return Type::never();
        plain(1, Type::nat(), "slice start");
        plain(2, Type::nat(), "slice end");
        return recv;
    }
    if (n == "concat") {
        if (!want_args(1)) return Type::never();
        plain(1, recv, "concatenated list");
        return recv;
    }
    if (n == "pushBack") {
        if (!want_args(1)) return Type::never();
        plain(1, t, "pushed element");
        return recv;
    }
    if (n == "contains") {
        if (!want_args(1)) return Type::never();
        if (!is_key_type(t, u_)) error(e.pos, "contains requires a key element type, found " + t.str());
        plain(1, t, "searched element");
        return Type::boolean();
    }
    if (n == "sum" || n == "max") {
        want_args(0);
        if (n == "sum" && !primitive_numeric(t)) error(e.pos, "sum requires a primitive numeric element type, found " + t.str());
        if (n == "max" && !ordered_type(t, u_)) error(e.pos, "max requires an ordered element type, found " + t.str());
        return t;
    }
    if (n == "zip") {
        if (!want_args(1)) return Type::never();
        auto o = expr(*e.args[1], env, nullptr);
        if (o.is_never()) return Type::never();
        if (o.kind() != TypeKind::List) {
            error(e.args[1]->pos, "zip expects a list, found " + o.str());
            return Type::never();
        }
        return Type::list(Type::tuple({t, o.args()[0]}));
    }
    if (n == "join") {
        if (!want_args(2)) return Type::never();
        auto o = expr(*e.args[1], env, nullptr);
        if (o.is_never()) return Type::never();
        if (o.kind() != TypeKind::List) {
            error(e.args[1]->pos, "join expects a list, found " + o.str());
            return Type::never();
        }
        lambda(*e.args[2], env, {t, o.args()[0]}, nullptr, true);
        return Type::list(Type::tuple({t, o.args()[0]}));
    }
    if (n == "map" || n == "sumOf" || n == "maxArg") {
        if (!want_args(1) || !want_targs(1)) return Type::never();
        const Type* want = targs.empty() ? nullptr : &targs[0];
        auto body = lambda(*e.args[1], env, {t}, want, false);
        Type u = targs.empty() ? body : targs[0];
        if (!targs.empty()) expect_type(body, u, e.args[1]->pos, n + " function result");
        if (n == "map") return Type::list(u);
        if (n == "sumOf") {
            if (!u.is_never() && !primitive_numeric(u)) error(e.pos, "sumOf requires a primitive numeric result, found " + u.str());
            return u;
        }
        if (!u.is_never() && !ordered_type(u, u_)) error(e.pos, "maxArg requires an ordered key, found " + u.str());
        return t;
    }
    if (n == "filter" || n == "has" || n == "find" || n == "count" || n == "allOf") {
        if (!want_args(1)) return Type::never();
        lambda(*e.args[1], env, {t}, nullptr, true);
        if (n == "filter") return recv;
        if (n == "find") return Type::union_of({t, Type::none()});
        if (n == "count") return Type::nat();
        return Type::boolean();
    }
    if (n == "unique") {
        if (!want_args(1)) return Type::never();
        lambda(*e.args[1], env, {t, t}, nullptr, true);
        return Type::boolean();
    }
    if (n == "reduce") {
        if (!want_args(2) || !want_targs(1)) return Type::never();
        Type acc;
        if (!targs.empty()) {
            acc = targs[0];
            plain(1, acc, "initial accumulator");
        } else {
            if (e.args[1]->kind == ExprKind::Lambda) {
                error(e.args[1]->pos, "reduce takes an initial value before the function");
                return Type::never();
            }
            acc = expr(*e.args[1], env, nullptr);
        }
        auto body = lambda(*e.args[2], env, {acc, t}, &acc, false);
        expect_type(body, acc, e.args[2]->pos, "reduce function result");
        return acc;
    }
    return Type::never();
}

Type Checker::field_access(Expr& e, Env& env) {
    auto t = expr(*e.args[0], env, nullptr);
    e.aux_ty = t;
    if (t.is_never()) return t;
    if (t.kind() == TypeKind::Record) {
        auto f = t.record_field(e.name);
        if (!f) {
            error(e.pos, "record " + t.str() + " has no field " + e.name);
            return Type::never();
        }
        return *f;
    }
    if ((t.kind() == TypeKind::Ok || t.kind() == TypeKind::Err) && e.name == "value") return t.args()[0];
    if (t.kind() != TypeKind::Nominal) {
        error(e.pos, "field access ." + e.name + " on type " + t.str());
        return Type::never();
    }
    auto* info = u_.nominal(t.name());
    const FieldInfo* fi = info ? info->field(e.name) : nullptr;
    if (!fi) {
        error(e.pos, "type " + t.str() + " has no field " + e.name);
        return Type::never();
    }
    if (fi->is_private && (!fn_ || fn_->owner != fi->declaring_type)) {
        error(e.pos, "field " + e.name + " is private to " + fi->declaring_type);
    }
    return fi->type;
}

Type Checker::bulk_update(Expr& e, Env& env) {
    auto t = expr(*e.args[0], env, nullptr);
    if (t.is_never()) {
        for (std::size_t i = 1; i < e.args.size(); ++i) expr(*e.args[i], env, nullptr);
        return t;
    }
    std::vector<std::pair<std::string, Type>> fields;
    if (t.kind() == TypeKind::Record) {
        for (std::size_t i = 0; i < t.args().size(); ++i) fields.emplace_back(t.field_names()[i], t.args()[i]);
    } else if (t.kind() == TypeKind::Nominal && u_.is_entity(t.name())) {
        for (const auto& f : u_.nominal(t.name())->fields) fields.emplace_back(f.name, f.type);
    } else {
        error(e.pos, "bulk update on type " + t.str() + "; only entities and records can be updated");
        return Type::never();
    }
    if (e.names.size() + 1 != e.args.size()) {
        error(e.pos, "bulk update fields must be named");
        return Type::never();
    }
    Env inner = env;
    for (const auto& [n, ft] : fields) inner.vars["$" + n] = VarInfo{ft, ft, false, true};
    std::set<std::string> seen;
    for (std::size_t i = 0; i < e.names.size(); ++i) {
        const auto& name = e.names[i];
        if (!seen.insert(name).second) error(e.pos, "field " + name + " updated twice");
        auto it = std::find_if(fields.begin(), fields.end(), [&](const auto& f) { return f.first == name; });
        if (it == fields.end()) {
            error(e.pos, "type " + t.str() + " has no field " + name);
            expr(*e.args[i + 1], inner, nullptr);
            continue;
        }
        if (t.kind() == TypeKind::Nominal) {
            const FieldInfo* fi = u_.nominal(t.name())->field(name);
            if (fi && fi->is_private && (!fn_ || fn_->owner != fi->declaring_type)) {
                error(e.pos, "field " + name + " is private to " + fi->declaring_type);
            }
        }
        auto vt = expr(*e.args[i + 1], inner, &it->second);
        expect_type(vt, it->second, e.args[i + 1]->pos, "value for field " + name);
    }
    return t;
}

Type Checker::construct(Expr& e, Env& env, const Type* expected) {
    const TypeExpr& te = *e.type;
    auto elements = [&](const Type* elem) -> std::optional<Type> {
        std::optional<Type> et = elem ? std::optional<Type>(*elem) : std::nullopt;
        for (auto& a : e.args) {
            if (a->kind == ExprKind::Lambda) {
                error(a->pos, lambda_misuse(Slot::Plain));
                continue;
            }
            auto t = expr(*a, env, et ? &*et : nullptr);
            if (!et) {
                et = t;
            } else {
                expect_type(t, *et, a->pos, "list element");
            }
        }
        return et;
    };
    bool generic_list = te.name == "List" && (te.kind == TypeExpr::Kind::Generic || te.kind == TypeExpr::Kind::Name);
    bool generic_map = te.name == "Map" && (te.kind == TypeExpr::Kind::Generic || te.kind == TypeExpr::Kind::Name);
    if (generic_list) {
        if (e.map_entries || !e.names.empty()) error(e.pos, "list constructor takes positional elements");
        std::optional<Type> elem;
        if (!te.args.empty()) {
            if (te.args.size() != 1) {
                error(e.pos, "List takes one type argument");
                return Type::never();
            }
            elem = resolve(te.args[0]);
            if (!elem) return Type::never();
        } else if (expected) {
            for (const auto& m : expected->members()) {
                if (m.kind() == TypeKind::List) elem = m.args()[0];
            }
        }
        auto et = elements(elem ? &*elem : nullptr);
        if (!et) {
            error(e.pos, "cannot infer the element type of an empty list; write List<T>{}");
            return Type::never();
        }
        return Type::list(*et);
    }
    if (generic_map) {
        std::optional<Type> k, v;
        if (te.args.size() == 2) {
            k = resolve(te.args[0]);
            v = resolve(te.args[1]);
            if (!k || !v) return Type::never();
        } else if (!te.args.empty()) {
            error(e.pos, "Map takes two type arguments");
            return Type::never();
        } else if (expected) {
            for (const auto& m : expected->members()) {
                if (m.kind() == TypeKind::Map) {
                    k = m.args()[0];
                    v = m.args()[1];
                }
            }
        }
        if (!e.map_entries && !e.args.empty()) error(e.pos, "map constructor entries are written k => v");
        for (std::size_t i = 0; i + 1 < e.args.size(); i += 2) {
            auto kt = expr(*e.args[i], env, k ? &*k : nullptr);
            auto vt = expr(*e.args[i + 1], env, v ? &*v : nullptr);
            if (!k) k = kt;
            else expect_type(kt, *k, e.args[i]->pos, "map key");
            if (!v) v = vt;
            else expect_type(vt, *v, e.args[i + 1]->pos, "map value");
        }
        if (!k || !v) {
            error(e.pos, "cannot infer the type of an empty map; write Map<K, V>{}");
            return Type::never();
        }
        if (!is_key_type(*k, u_)) error(e.pos, "map key type " + k->str() + " is not a key type");
        return Type::map(*k, *v);
    }
    if ((te.name == "Ok" || te.name == "Err") && te.kind == TypeExpr::Kind::Generic) {
        if (te.args.size() != 1 || e.args.size() != 1) {
            error(e.pos, te.name + " takes one type argument and one value");
            return Type::never();
        }
        auto vt = resolve(te.args[0]);
        if (!vt) return Type::never();
        auto t = expr(*e.args[0], env, &*vt);
        expect_type(t, *vt, e.args[0]->pos, te.name + " payload");
        return te.name == "Ok" ? Type::ok(*vt) : Type::err(*vt);
    }
    if (te.kind != TypeExpr::Kind::Name) {
        error(e.pos, "cannot construct " + render_type(te));
        return Type::never();
    }
    auto* info = u_.nominal(te.name);
    if (!info) {
        error(e.pos, "unknown entity " + te.name);
        for (auto& a : e.args) {
            if (a->kind != ExprKind::Lambda) expr(*a, env, nullptr);
        }
        return Type::never();
    }
    if (info->is_concept) {
        error(e.pos, "concept " + te.name + " cannot be constructed");
        return Type::never();
    }
    if (e.map_entries) {
        error(e.pos, "entity constructor cannot use => entries");
        return Type::never();
    }
    const auto& fields = info->fields;
    if (e.args.size() != fields.size()) {
        error(e.pos, te.name + " has " + std::to_string(fields.size()) + " field" + (fields.size() == 1 ? "" : "s") +
                         ", found " + std::to_string(e.args.size()) + " value" + (e.args.size() == 1 ? "" : "s"));
        for (auto& a : e.args) {
            if (a->kind != ExprKind::Lambda) expr(*a, env, nullptr);
        }
        return Type::never();
    }
    if (!e.names.empty()) {
        // Reorder named values into constructor order.
        std::vector<ExprPtr> ordered(fields.size());
        for (std::size_t i = 0; i < e.names.size(); ++i) {
            auto* fi = info->field(e.names[i]);
            if (!fi) {
                error(e.pos, te.name + " has no field " + e.names[i]);
                return Type::never();
            }
            auto idx = static_cast<std::size_t>(fi - fields.data());
            if (ordered[idx]) {
                error(e.pos, "field " + e.names[i] + " given twice");
                return Type::never();
            }
            ordered[idx] = e.args[i];
        }
        e.args = ordered;
        e.names.clear();
    }
    for (std::size_t i = 0; i < fields.size(); ++i) {
        Expr& a = *e.args[i];
        if (a.kind == ExprKind::Lambda) {
            error(a.pos, lambda_misuse(Slot::Plain));
            continue;
        }
        auto t = expr(a, env, &fields[i].type);
        expect_type(t, fields[i].type, a.pos, "field " + fields[i].name);
    }
    return Type::nominal(te.name);
}

}  // namespace

CheckedProgram check_program(const SurfaceProgram& program, Diagnostics& diags) {
    CheckedProgram out;
    out.file = program.file;
    Diagnostics local;
    out.universe = build_universe(program, local);
    Checker c(out, local);
    c.register_functions(program);
    if (!local.has_errors()) {
        c.check_all();
        c.check_examples();
        c.check_recursion();
    }
    diags.append(local);
    if (local.has_errors()) throw CompileError(local);
    return out;
}

CheckedProgram check_source(const std::string& source, const std::string& file, Diagnostics& diags) {
    auto prog = parse_source(source, file);
    return check_program(prog, diags);
}

void check_constant_expr(const CheckedProgram& prog, Expr& e, const Type& expected, Diagnostics& diags) {
    CheckedProgram copy = prog;
    Checker c(copy, diags);
    c.constant_expr(e, expected);
}

}  // namespace lx
