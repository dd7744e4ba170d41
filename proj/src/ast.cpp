#include "lx/ast.hpp"

#include <sstream>

#include "lx/lexer.hpp"

namespace lx {
namespace {

std::string join(const std::vector<std::string>& parts, const char* sep) {
    std::string s;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) s += sep;
        s += parts[i];
    }
    return s;
}

int binary_prec(const std::string& op) {
    if (op == "==>") return 1;
    if (op == "||") return 2;
    if (op == "&&") return 3;
    if (op == "==" || op == "!=" || op == "===" || op == "!==") return 4;
    if (op == "<" || op == "<=" || op == ">" || op == ">=") return 5;
    if (op == "+" || op == "-") return 6;
    return 7;
}

int prec(const Expr& e) {
    switch (e.kind) {
        case ExprKind::Binary: return binary_prec(e.name);
        case ExprKind::Unary: return 8;
        case ExprKind::MethodCall: return e.ref_tag ? 8 : 9;
        case ExprKind::IfExpr:
        case ExprKind::Lambda:
        case ExprKind::LetIn: return 0;
        default: return 10;
    }
}

std::string wrap(const Expr& e, int min_prec) {
    std::string s = render_expr(e);
    return prec(e) < min_prec ? "(" + s + ")" : s;
}

std::string render_literal(const Expr& e) {
    switch (e.lit) {
        case LitKind::None: return "none";
        case LitKind::True: return "true";
        case LitKind::False: return "false";
        case LitKind::Int:
        case LitKind::Float:
        case LitKind::Decimal:
        case LitKind::Rational: return e.text + e.suffix;
        case LitKind::TypedNumber: return e.text + "_" + e.suffix;
        case LitKind::String: return escape_string(e.text);
        case LitKind::TypedString: return escape_string(e.text) + e.suffix;
    }
    return "?";
}

std::string render_args(const std::vector<ExprPtr>& args, std::size_t from = 0) {
    std::vector<std::string> parts;
    for (std::size_t i = from; i < args.size(); ++i) parts.push_back(render_expr(*args[i]));
    return join(parts, ", ");
}

std::string render_generics(const std::vector<TypeExprPtr>& targs) {
    if (targs.empty()) return "";
    std::vector<std::string> parts;
    for (const auto& t : targs) parts.push_back(render_type(*t));
    return "<" + join(parts, ", ") + ">";
}

std::string level_prefix(const std::optional<CheckLevel>& l) {
    return l ? std::string(check_level_name(*l)) + " " : "";
}

class Renderer {
public:
    std::ostringstream out;
    int depth = 0;

    void line(const std::string& s) { out << std::string(static_cast<std::size_t>(depth) * 4, ' ') << s << "\n"; }

    void block_body(const Block& b) {
        ++depth;
        for (const auto& s : b) stmt(*s);
        --depth;
    }

    std::string inline_stmt(const Stmt& s) {
        Renderer r;
        r.stmt(s);
        std::string text = r.out.str();
        if (!text.empty() && text.back() == '\n') text.pop_back();
        return text;
    }

    std::string branch_head(const IfBranch& b) {
        if (b.flow) return render_flow(*b.flow) + " (" + render_expr(*b.cond) + ")";
        return "(" + render_expr(*b.cond) + ")";
    }

    void stmt(const Stmt& s) {
        switch (s.kind) {
            case StmtKind::Let:
            case StmtKind::Var: {
                std::string t = (s.kind == StmtKind::Let ? "let " : "var ") + s.name;
                if (s.type) t += ": " + render_type(*s.type);
                if (s.expr) t += " = " + render_expr(*s.expr);
                line(t + ";");
                break;
            }
            case StmtKind::Assign: line(s.name + " = " + render_expr(*s.expr) + ";"); break;
            case StmtKind::If: {
                for (std::size_t i = 0; i < s.branches.size(); ++i) {
                    line(std::string(i == 0 ? "if " : "elif ") + branch_head(s.branches[i]) + " {");
                    block_body(s.branches[i].body);
                    line("}");
                }
                if (s.else_body) {
                    line("else {");
                    block_body(*s.else_body);
                    line("}");
                }
                break;
            }
            case StmtKind::Match: {
                line("match (" + render_expr(*s.expr) + ") {");
                ++depth;
                for (std::size_t i = 0; i < s.arms.size(); ++i) {
                    const auto& a = s.arms[i];
                    std::string pat = a.kind == MatchArm::Kind::Wildcard ? "_"
                                      : a.kind == MatchArm::Kind::Literal ? render_expr(*a.literal)
                                                                           : render_type(*a.type);
                    std::string head = (i ? "| " : "") + pat + " => ";
                    if (a.braced) {
                        line(head + "{");
                        block_body(a.body);
                        line("}");
                    } else {
                        line(head + inline_stmt(*a.body[0]));
                    }
                }
                --depth;
                line("}");
                break;
            }
            case StmtKind::Return: line(s.expr ? "return " + render_expr(*s.expr) + ";" : "return;"); break;
            case StmtKind::Assert: line("assert " + level_prefix(s.level) + render_expr(*s.expr) + ";"); break;
            case StmtKind::Narrow: line(s.name + (s.early ? "@@" : "@") + render_flow(s.flow) + ";"); break;
            case StmtKind::ExprStmt: line(render_expr(*s.expr) + ";"); break;
            case StmtKind::Block:
                line("{");
                block_body(s.body);
                line("}");
                break;
            case StmtKind::Defer: line("defer;"); break;
            case StmtKind::Elided: line("...;"); break;
        }
    }

    void function(const FunctionDecl& f, const std::string& keyword) {
        std::vector<std::string> params;
        for (const auto& p : f.params) params.push_back(p.name + ": " + render_type(*p.type));
        std::string head = keyword + f.name + "(" + join(params, ", ") + ")";
        if (f.result) head += ": " + render_type(*f.result);
        line(head);
        ++depth;
        for (const auto& c : f.requires_) line("requires " + level_prefix(c.level) + render_expr(*c.expr) + ";");
        for (const auto& c : f.ensures) line("ensures " + level_prefix(c.level) + render_expr(*c.expr) + ";");
        if (!f.examples.empty()) {
            line("examples [");
            ++depth;
            for (std::size_t i = 0; i < f.examples.size(); ++i) {
                const auto& ex = f.examples[i];
                line("[" + render_args(ex.args) + "] => " + render_expr(*ex.result) +
                     (i + 1 < f.examples.size() ? "," : ""));
            }
            --depth;
            line("];");
        }
        --depth;
        switch (f.body_kind) {
            case BodyKind::None: line(";"); break;
            case BodyKind::Elided: line("{...}"); break;
            case BodyKind::Defer: line("{ defer; }"); break;
            case BodyKind::Block:
                line("{");
                block_body(f.body);
                line("}");
                break;
        }
    }

    void member(const Member& m) {
        switch (m.kind) {
            case MemberKind::Field:
                line(std::string(m.is_private ? "private " : "") + (m.field_keyword ? "field " : "") + m.name + ": " +
                     render_type(*m.type) + ";");
                break;
            case MemberKind::Const:
                line("const " + m.name + (m.type ? ": " + render_type(*m.type) : "") + " = " + render_expr(*m.expr) + ";");
                break;
            case MemberKind::Invariant: line("invariant " + level_prefix(m.level) + render_expr(*m.expr) + ";"); break;
            case MemberKind::Validate: line("validate " + level_prefix(m.level) + render_expr(*m.expr) + ";"); break;
            case MemberKind::Method:
            case MemberKind::Function: {
                std::string kw;
                if (m.fn->is_abstract) kw += "abstract ";
                if (m.fn->is_override) kw += "override ";
                if (m.fn->is_recursive) kw += "recursive ";
                kw += m.kind == MemberKind::Method ? "method " : "function ";
                if (m.fn->is_ref) kw += "ref ";
                function(*m.fn, kw);
                break;
            }
        }
    }

    void members(const std::vector<Member>& ms) {
        ++depth;
        for (const auto& m : ms) member(m);
        --depth;
    }

    void decl(const Decl& d) {
        std::string provides = d.provides.empty() ? "" : " provides " + join(d.provides, ", ");
        switch (d.kind) {
            case DeclKind::Validator: line("typedecl " + d.name + " = /" + d.regex + "/;"); break;
            case DeclKind::Typedecl:
                if (d.has_trailing) {
                    line("typedecl " + d.name + " = " + render_type(*d.type) + " & {");
                    members(d.members);
                    line("};");
                } else {
                    line("typedecl " + d.name + " = " + render_type(*d.type) + ";");
                }
                break;
            case DeclKind::Concept:
            case DeclKind::Entity:
                line(std::string(d.kind == DeclKind::Concept ? "concept " : "entity ") + d.name + provides + " {");
                members(d.members);
                line("}");
                break;
            case DeclKind::Datatype: {
                line("datatype " + d.name + provides + (d.has_using ? " using {" : " of"));
                if (d.has_using) {
                    members(d.using_members);
                    line("} of");
                }
                ++depth;
                for (std::size_t i = 0; i < d.cases.size(); ++i) {
                    line(std::string(i ? "| " : "") + d.cases[i].name + " {");
                    members(d.cases[i].members);
                    line("}");
                }
                --depth;
                if (d.has_trailing) {
                    line("& {");
                    members(d.members);
                    line("}");
                }
                break;
            }
            case DeclKind::Function: function(*d.fn, d.fn->is_recursive ? "recursive function " : "function "); break;
            case DeclKind::Const:
                line("const " + d.name + (d.type ? ": " + render_type(*d.type) : "") + " = " + render_expr(*d.expr) + ";");
                break;
            case DeclKind::Statement: stmt(*d.stmt); break;
        }
    }
};

// ---- structural dump ----

void dump_type(std::ostream& o, const TypeExprPtr& t) {
    if (!t) {
        o << "_";
        return;
    }
    o << "(T" << static_cast<int>(t->kind) << " " << t->name;
    for (std::size_t i = 0; i < t->args.size(); ++i) {
        o << " ";
        if (i < t->fields.size()) o << t->fields[i] << ":";
        dump_type(o, t->args[i]);
    }
    o << ")";
}

void dump_expr(std::ostream& o, const ExprPtr& e);

void dump_flow(std::ostream& o, const FlowOp& f) {
    o << "(F" << static_cast<int>(f.kind) << (f.negated ? "!" : "") << " ";
    dump_type(o, f.type);
    o << " ";
    dump_expr(o, f.literal);
    o << ")";
}

void dump_expr(std::ostream& o, const ExprPtr& e) {
    if (!e) {
        o << "_";
        return;
    }
    o << "(E" << static_cast<int>(e->kind) << " L" << static_cast<int>(e->lit) << " " << escape_string(e->text) << " "
      << e->suffix << " " << e->name << " " << e->scope << " " << e->index << " " << e->recursive_tag << e->ref_tag
      << e->is_pred << e->map_entries << e->no_parens << " [" << join(e->names, ",") << "] ";
    for (const auto& t : e->type_args) dump_type(o, t);
    o << " ";
    dump_type(o, e->type);
    o << " ";
    dump_flow(o, e->flow);
    for (const auto& a : e->args) {
        o << " ";
        dump_expr(o, a);
    }
    o << ")";
}

void dump_block(std::ostream& o, const Block& b);

void dump_stmt(std::ostream& o, const StmtPtr& s) {
    o << "(S" << static_cast<int>(s->kind) << " " << s->name << " ";
    dump_type(o, s->type);
    o << " ";
    dump_expr(o, s->expr);
    o << " " << (s->level ? check_level_name(*s->level) : "-") << " " << s->early << " ";
    dump_flow(o, s->flow);
    for (const auto& b : s->branches) {
        o << " (B ";
        if (b.flow) dump_flow(o, *b.flow);
        dump_expr(o, b.cond);
        dump_block(o, b.body);
        o << ")";
    }
    if (s->else_body) {
        o << " (else ";
        dump_block(o, *s->else_body);
        o << ")";
    }
    for (const auto& a : s->arms) {
        o << " (A" << static_cast<int>(a.kind) << a.braced << " ";
        dump_type(o, a.type);
        dump_expr(o, a.literal);
        dump_block(o, a.body);
        o << ")";
    }
    dump_block(o, s->body);
    o << ")";
}

void dump_block(std::ostream& o, const Block& b) {
    o << "{";
    for (const auto& s : b) dump_stmt(o, s);
    o << "}";
}

void dump_fn(std::ostream& o, const std::shared_ptr<FunctionDecl>& f) {
    if (!f) return;
    o << "(fn " << f->name << " " << f->is_abstract << f->is_override << f->is_recursive << f->is_ref;
    for (const auto& p : f->params) {
        o << " " << p.name << ":";
        dump_type(o, p.type);
    }
    o << " -> ";
    dump_type(o, f->result);
    for (const auto& c : f->requires_) {
        o << " (req " << (c.level ? check_level_name(*c.level) : "-") << " ";
        dump_expr(o, c.expr);
        o << ")";
    }
    for (const auto& c : f->ensures) {
        o << " (ens " << (c.level ? check_level_name(*c.level) : "-") << " ";
        dump_expr(o, c.expr);
        o << ")";
    }
    for (const auto& ex : f->examples) {
        o << " (ex";
        for (const auto& a : ex.args) {
            o << " ";
            dump_expr(o, a);
        }
        o << " => ";
        dump_expr(o, ex.result);
        o << ")";
    }
    o << " body" << static_cast<int>(f->body_kind);
    dump_block(o, f->body);
    o << ")";
}

void dump_members(std::ostream& o, const std::vector<Member>& ms) {
    for (const auto& m : ms) {
        o << " (M" << static_cast<int>(m.kind) << " " << m.name << " " << m.is_private << m.field_keyword << " "
          << (m.level ? check_level_name(*m.level) : "-") << " ";
        dump_type(o, m.type);
        dump_expr(o, m.expr);
        dump_fn(o, m.fn);
        o << ")";
    }
}

}  // namespace

std::string render_type(const TypeExpr& t) {
    switch (t.kind) {
        case TypeExpr::Kind::Name: return t.name;
        case TypeExpr::Kind::Generic: {
            std::vector<std::string> parts;
            for (const auto& a : t.args) parts.push_back(render_type(*a));
            return t.name + "<" + join(parts, ", ") + ">";
        }
        case TypeExpr::Kind::Tuple: {
            std::vector<std::string> parts;
            for (const auto& a : t.args) parts.push_back(render_type(*a));
            return "[" + join(parts, ", ") + "]";
        }
        case TypeExpr::Kind::Record: {
            std::vector<std::string> parts;
            for (std::size_t i = 0; i < t.args.size(); ++i) parts.push_back(t.fields[i] + ": " + render_type(*t.args[i]));
            return "{" + join(parts, ", ") + "}";
        }
        case TypeExpr::Kind::Union: {
            std::vector<std::string> parts;
            for (const auto& a : t.args) {
                std::string s = render_type(*a);
                parts.push_back(a->kind == TypeExpr::Kind::Union ? "(" + s + ")" : s);
            }
            return join(parts, " | ");
        }
    }
    return "?";
}

std::string render_flow(const FlowOp& f) {
    std::string s = f.negated ? "!" : "";
    switch (f.kind) {
        case FlowTest::Kind::None: return s + "none";
        case FlowTest::Kind::Some: return s + "some";
        case FlowTest::Kind::Ok: return s + "ok";
        case FlowTest::Kind::Err: return s + "err";
        case FlowTest::Kind::Result: return s + "result";
        case FlowTest::Kind::Type: return s + "<" + render_type(*f.type) + ">";
        case FlowTest::Kind::Literal: return s + "[" + render_expr(*f.literal) + "]";
    }
    return s;
}

std::string render_expr(const Expr& e) {
    switch (e.kind) {
        case ExprKind::Literal: return render_literal(e);
        case ExprKind::Var: return e.name;
        case ExprKind::Elided: return "...";
        case ExprKind::Tuple: return "[" + render_args(e.args) + "]";
        case ExprKind::Record: {
            std::vector<std::string> parts;
            for (std::size_t i = 0; i < e.args.size(); ++i) parts.push_back(e.names[i] + " = " + render_expr(*e.args[i]));
            return "{" + join(parts, ", ") + "}";
        }
        case ExprKind::Construct: {
            std::vector<std::string> parts;
            if (e.map_entries) {
                for (std::size_t i = 0; i + 1 < e.args.size(); i += 2)
                    parts.push_back(render_expr(*e.args[i]) + " => " + render_expr(*e.args[i + 1]));
            } else {
                for (std::size_t i = 0; i < e.args.size(); ++i)
                    parts.push_back((e.names.empty() ? "" : e.names[i] + " = ") + render_expr(*e.args[i]));
            }
            return render_type(*e.type) + "{" + join(parts, ", ") + "}";
        }
        case ExprKind::BulkUpdate: {
            std::vector<std::string> parts;
            for (std::size_t i = 0; i < e.names.size(); ++i) parts.push_back(e.names[i] + " = " + render_expr(*e.args[i + 1]));
            return wrap(*e.args[0], 9) + ".{" + join(parts, ", ") + "}";
        }
        case ExprKind::Index: return wrap(*e.args[0], 9) + "." + std::to_string(e.index);
        case ExprKind::Field: return wrap(*e.args[0], 9) + "." + e.name;
        case ExprKind::Unary: {
            const Expr& a = *e.args[0];
            if (e.name == "-" && a.kind == ExprKind::Literal) return "-(" + render_expr(a) + ")";
            return e.name + wrap(a, 8);
        }
        case ExprKind::Binary: {
            int p = binary_prec(e.name);
            bool right_assoc = e.name == "==>";
            std::string l = wrap(*e.args[0], right_assoc ? p + 1 : p);
            std::string r = wrap(*e.args[1], right_assoc ? p : p + 1);
            return l + " " + e.name + " " + r;
        }
        case ExprKind::Call:
            return e.name + render_generics(e.type_args) + (e.recursive_tag ? "[recursive]" : "") + "(" +
                   render_args(e.args) + ")";
        case ExprKind::StaticCall: {
            std::string s = e.scope + "::" + e.name;
            if (e.no_parens) return s;
            return s + render_generics(e.type_args) + (e.recursive_tag ? "[recursive]" : "") + "(" + render_args(e.args) + ")";
        }
        case ExprKind::MethodCall:
            return std::string(e.ref_tag ? "ref " : "") + wrap(*e.args[0], 9) + "." + e.name +
                   render_generics(e.type_args) + (e.recursive_tag ? "[recursive]" : "") + "(" + render_args(e.args, 1) + ")";
        case ExprKind::Lambda: {
            std::vector<std::string> ps;
            for (std::size_t i = 0; i < e.names.size(); ++i)
                ps.push_back(e.names[i] + (e.type_args[i] ? ": " + render_type(*e.type_args[i]) : ""));
            return std::string(e.is_pred ? "pred" : "fn") + "(" + join(ps, ", ") + ") => " + render_expr(*e.args[0]);
        }
        case ExprKind::FlowTest: return wrap(*e.args[0], 9) + "?" + render_flow(e.flow);
        case ExprKind::FlowCast: return wrap(*e.args[0], 9) + "@" + render_flow(e.flow);
        case ExprKind::FlowEarly: return wrap(*e.args[0], 9) + e.name + render_flow(e.flow);
        case ExprKind::IfExpr:
            return "if " + render_expr(*e.args[0]) + " then " + render_expr(*e.args[1]) + " else " + render_expr(*e.args[2]);
        case ExprKind::LetIn:
            return "let " + e.name + " = " + render_expr(*e.args[0]) + " in " + render_expr(*e.args[1]);
    }
    return "?";
}

std::string render(const SurfaceProgram& p) {
    Renderer r;
    for (std::size_t i = 0; i < p.decls.size(); ++i) {
        if (i && p.decls[i].kind != DeclKind::Statement) r.out << "\n";
        r.decl(p.decls[i]);
    }
    return r.out.str();
}

std::string dump(const SurfaceProgram& p) {
    std::ostringstream o;
    for (const auto& d : p.decls) {
        o << "(D" << static_cast<int>(d.kind) << " " << d.name << " /" << d.regex << "/ " << join(d.provides, ",") << " "
          << d.has_using << d.has_trailing << " ";
        dump_type(o, d.type);
        dump_members(o, d.members);
        o << " using";
        dump_members(o, d.using_members);
        for (const auto& c : d.cases) {
            o << " (case " << c.name;
            dump_members(o, c.members);
            o << ")";
        }
        dump_fn(o, d.fn);
        dump_expr(o, d.expr);
        if (d.stmt) dump_stmt(o, d.stmt);
        o << ")\n";
    }
    return o.str();
}

bool structurally_equal(const SurfaceProgram& a, const SurfaceProgram& b) { return dump(a) == dump(b); }

}  // namespace lx
