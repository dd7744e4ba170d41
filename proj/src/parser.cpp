#include "lx/parser.hpp"

#include <set>
#include <stdexcept>

namespace lx {

ExprPtr make_expr(ExprKind k, SourcePos pos) {
    auto e = std::make_shared<Expr>();
    e->kind = k;
    e->pos = std::move(pos);
    return e;
}

StmtPtr make_stmt(StmtKind k, SourcePos pos) {
    auto s = std::make_shared<Stmt>();
    s->kind = k;
    s->pos = std::move(pos);
    return s;
}

TypeExprPtr make_type_name(std::string name, SourcePos pos) {
    auto t = std::make_shared<TypeExpr>();
    t->kind = TypeExpr::Kind::Name;
    t->name = std::move(name);
    t->pos = std::move(pos);
    return t;
}

namespace {

struct ParseFailure : std::runtime_error {
    SourcePos pos;
    ParseFailure(SourcePos p, const std::string& msg) : std::runtime_error(msg), pos(std::move(p)) {}
};

const std::set<std::string> kDeclKeywords = {"typedecl", "concept", "entity", "datatype", "function", "const", "recursive"};
const std::set<std::string> kGenericTypes = {"List", "Map", "StringOf", "Ok", "Err", "Result"};
const std::set<std::string> kFlowSpecials = {"none", "some", "ok", "err", "result"};

std::string describe(const Token& t) {
    switch (t.kind) {
        case TokKind::End: return "end of input";
        case TokKind::Ident: return "'" + t.text + "'";
        case TokKind::Punct: return "'" + t.text + "'";
        case TokKind::String:
        case TokKind::TypedString: return "string literal";
        case TokKind::Regex: return "regex literal";
        case TokKind::Dollar: return "'$" + t.text + "'";
        default: return "numeric literal";
    }
}

class Parser {
public:
    Parser(const std::vector<Token>& toks, std::string file) : t_(toks), file_(std::move(file)) {}

    SurfaceProgram program() {
        SurfaceProgram p;
        p.file = file_;
        while (!at_end()) {
            std::size_t start = i_;
            try {
                p.decls.push_back(decl());
            } catch (const ParseFailure& f) {
                diags_.error(f.pos, f.what());
                if (i_ == start) ++i_;
                while (!at_end() && !(cur().kind == TokKind::Ident && kDeclKeywords.count(cur().text))) ++i_;
            }
        }
        if (diags_.has_errors()) throw CompileError(diags_);
        return p;
    }

    Block block_text() {
        Block b;
        try {
            while (!at_end()) b.push_back(stmt());
        } catch (const ParseFailure& f) {
            diags_.error(f.pos, f.what());
        }
        if (diags_.has_errors()) throw CompileError(diags_);
        return b;
    }

private:
    const std::vector<Token>& t_;
    std::string file_;
    std::size_t i_ = 0;
    Diagnostics diags_;

    const Token& cur() const { return t_[i_]; }
    const Token& ahead(std::size_t k) const { return t_[std::min(i_ + k, t_.size() - 1)]; }
    bool at_end() const { return cur().kind == TokKind::End; }
    SourcePos pos() const { return cur().pos; }

    bool is_punct(const char* p, std::size_t k = 0) const {
        const Token& t = ahead(k);
        return t.kind == TokKind::Punct && t.text == p;
    }
    bool is_kw(const char* w, std::size_t k = 0) const {
        const Token& t = ahead(k);
        return t.kind == TokKind::Ident && t.text == w;
    }
    bool accept(const char* p) {
        if (is_punct(p)) {
            ++i_;
            return true;
        }
        return false;
    }
    bool accept_kw(const char* w) {
        if (is_kw(w)) {
            ++i_;
            return true;
        }
        return false;
    }
    [[noreturn]] void fail(const std::string& expected) const {
        throw ParseFailure(pos(), "expected " + expected + ", found " + describe(cur()));
    }
    void expect(const char* p) {
        if (!accept(p)) fail(std::string("'") + p + "'");
    }
    void expect_kw(const char* w) {
        if (!accept_kw(w)) fail(std::string("'") + w + "'");
    }
    std::string ident(const char* what = "identifier") {
        if (cur().kind != TokKind::Ident) fail(what);
        return t_[i_++].text;
    }

    // ---- declarations ----

    Decl decl() {
        Decl d;
        d.pos = pos();
        if (is_kw("typedecl")) return typedecl();
        if (is_kw("concept") || is_kw("entity")) {
            d.kind = is_kw("concept") ? DeclKind::Concept : DeclKind::Entity;
            ++i_;
            d.name = ident("type name");
            d.provides = provides_clause();
            expect("{");
            d.members = members("}");
            expect("}");
            accept(";");
            return d;
        }
        if (is_kw("datatype")) return datatype();
        if (is_kw("function") || (is_kw("recursive") && is_kw("function", 1))) {
            d.kind = DeclKind::Function;
            bool rec = accept_kw("recursive");
            expect_kw("function");
            d.fn = function_decl();
            d.fn->is_recursive = rec;
            d.fn->pos = d.pos;
            d.name = d.fn->name;
            return d;
        }
        if (is_kw("const")) {
            ++i_;
            d.kind = DeclKind::Const;
            d.name = ident("constant name");
            if (accept(":")) d.type = type();
            expect("=");
            d.expr = expr();
            expect(";");
            return d;
        }
        d.kind = DeclKind::Statement;
        d.stmt = stmt(true);
        return d;
    }

    Decl typedecl() {
        Decl d;
        d.pos = pos();
        expect_kw("typedecl");
        d.name = ident("type name");
        expect("=");
        if (cur().kind == TokKind::Regex) {
            d.kind = DeclKind::Validator;
            d.regex = t_[i_++].text;
            expect(";");
            return d;
        }
        d.kind = DeclKind::Typedecl;
        d.type = type();
        if (accept("&")) {
            expect("{");
            d.members = members("}");
            expect("}");
            d.has_trailing = true;
        }
        expect(";");
        return d;
    }

    std::vector<std::string> provides_clause() {
        std::vector<std::string> out;
        if (accept_kw("provides")) {
            out.push_back(ident("concept name"));
            while (accept(",")) out.push_back(ident("concept name"));
        }
        return out;
    }

    Decl datatype() {
        Decl d;
        d.kind = DeclKind::Datatype;
        d.pos = pos();
        expect_kw("datatype");
        d.name = ident("type name");
        d.provides = provides_clause();
        if (accept_kw("using")) {
            d.has_using = true;
            expect("{");
            d.using_members = members("}");
            expect("}");
        }
        expect_kw("of");
        accept("|");
        do {
            DatatypeCase c;
            c.pos = pos();
            c.name = ident("case name");
            expect("{");
            c.members = members("}");
            expect("}");
            d.cases.push_back(std::move(c));
        } while (accept("|"));
        if (accept("&")) {
            d.has_trailing = true;
            expect("{");
            d.members = members("}");
            expect("}");
        }
        accept(";");
        return d;
    }

    std::optional<CheckLevel> level_prefix() {
        if (cur().kind != TokKind::Ident) return std::nullopt;
        auto lvl = parse_check_level(cur().text);
        if (!lvl) return std::nullopt;
        const Token& n = ahead(1);
        bool starts_expr = n.kind == TokKind::Ident || n.kind == TokKind::Dollar || n.kind == TokKind::Number ||
                           n.kind == TokKind::String || n.kind == TokKind::TypedString ||
                           n.kind == TokKind::TypedNumber || n.kind == TokKind::Rational ||
                           (n.kind == TokKind::Punct && (n.text == "!" || n.text == "-" || n.text == "[" || n.text == "("));
        if (!starts_expr) return std::nullopt;
        ++i_;
        return lvl;
    }

    std::vector<Member> members(const char* close) {
        std::vector<Member> out;
        while (!is_punct(close) && !at_end()) out.push_back(member());
        return out;
    }

    Member member() {
        Member m;
        m.pos = pos();
        bool is_abstract = false, is_override = false, is_recursive = false;
        while (true) {
            if (accept_kw("abstract")) is_abstract = true;
            else if (accept_kw("override")) is_override = true;
            else if (accept_kw("recursive")) is_recursive = true;
            else if (accept_kw("private")) m.is_private = true;
            else break;
        }
        auto finish_fn = [&](MemberKind k) {
            m.kind = k;
            bool is_ref = false;
            if (k == MemberKind::Method && is_kw("ref") && ahead(1).kind == TokKind::Ident) {
                ++i_;
                is_ref = true;
            }
            m.fn = function_decl();
            m.fn->is_abstract = is_abstract;
            m.fn->is_override = is_override;
            m.fn->is_recursive = is_recursive;
            m.fn->is_ref = is_ref;
            m.fn->pos = m.pos;
            m.name = m.fn->name;
            return m;
        };
        if (accept_kw("method")) return finish_fn(MemberKind::Method);
        if (accept_kw("function")) return finish_fn(MemberKind::Function);
        if (is_abstract || is_override || is_recursive) fail("'method' or 'function'");
        if (accept_kw("field")) {
            m.kind = MemberKind::Field;
            m.name = ident("field name");
            expect(":");
            m.type = type();
            expect(";");
            return m;
        }
        if (accept_kw("const")) {
            m.kind = MemberKind::Const;
            m.name = ident("constant name");
            if (accept(":")) m.type = type();
            expect("=");
            m.expr = expr();
            expect(";");
            return m;
        }
        if (accept_kw("invariant") || (is_kw("validate") && (++i_, true))) {
            m.kind = t_[i_ - 1].text == "invariant" ? MemberKind::Invariant : MemberKind::Validate;
            m.level = level_prefix();
            m.expr = expr();
            expect(";");
            return m;
        }
        if (cur().kind == TokKind::Ident && is_punct(":", 1)) {
            m.kind = MemberKind::Field;
            m.field_keyword = false;
            m.name = ident();
            expect(":");
            m.type = type();
            if (!accept(";")) accept(",");
            return m;
        }
        fail("member declaration");
    }

    std::shared_ptr<FunctionDecl> function_decl() {
        auto f = std::make_shared<FunctionDecl>();
        f->pos = pos();
        f->name = ident("function name");
        expect("(");
        if (!is_punct(")")) {
            do {
                Param p;
                p.pos = pos();
                p.name = ident("parameter name");
                expect(":");
                p.type = type();
                f->params.push_back(std::move(p));
            } while (accept(","));
        }
        expect(")");
        if (accept(":")) f->result = type();
        while (true) {
            if (is_kw("requires") || is_kw("ensures")) {
                bool req = cur().text == "requires";
                Condition c;
                c.pos = pos();
                ++i_;
                c.level = level_prefix();
                c.expr = expr();
                expect(";");
                (req ? f->requires_ : f->ensures).push_back(std::move(c));
            } else if (accept_kw("examples")) {
                expect("[");
                if (!is_punct("]")) {
                    do {
                        Example ex;
                        ex.pos = pos();
                        expect("[");
                        if (!is_punct("]")) {
                            do ex.args.push_back(expr());
                            while (accept(","));
                        }
                        expect("]");
                        expect("=>");
                        ex.result = expr();
                        f->examples.push_back(std::move(ex));
                    } while (accept(","));
                }
                expect("]");
                expect(";");
            } else {
                break;
            }
        }
        if (accept(";")) {
            f->body_kind = BodyKind::None;
            return f;
        }
        expect("{");
        if (is_punct("...") && is_punct("}", 1)) {
            i_ += 2;
            f->body_kind = BodyKind::Elided;
            return f;
        }
        if (is_kw("defer") && is_punct(";", 1) && is_punct("}", 2)) {
            i_ += 3;
            f->body_kind = BodyKind::Defer;
            return f;
        }
        f->body_kind = BodyKind::Block;
        while (!is_punct("}")) {
            if (at_end()) fail("'}'");
            f->body.push_back(stmt());
        }
        expect("}");
        return f;
    }

    // ---- types ----

    TypeExprPtr type() {
        SourcePos p = pos();
        auto first = type_postfix();
        if (!is_punct("|")) return first;
        auto u = std::make_shared<TypeExpr>();
        u->kind = TypeExpr::Kind::Union;
        u->pos = p;
        u->args.push_back(first);
        while (accept("|")) u->args.push_back(type_postfix());
        return u;
    }

    TypeExprPtr type_postfix() {
        SourcePos p = pos();
        auto t = type_atom();
        while (is_punct("?") && !(ahead(1).kind == TokKind::Ident && kFlowSpecials.count(ahead(1).text))) {
            ++i_;
            auto u = std::make_shared<TypeExpr>();
            u->kind = TypeExpr::Kind::Union;
            u->pos = p;
            u->args.push_back(t);
            u->args.push_back(make_type_name("None", p));
            t = u;
        }
        return t;
    }

    TypeExprPtr type_atom() {
        SourcePos p = pos();
        if (accept("(")) {
            auto t = type();
            expect(")");
            return t;
        }
        if (accept("[")) {
            auto t = std::make_shared<TypeExpr>();
            t->kind = TypeExpr::Kind::Tuple;
            t->pos = p;
            if (!is_punct("]")) {
                do t->args.push_back(type());
                while (accept(","));
            }
            expect("]");
            return t;
        }
        if (accept("{")) {
            auto t = std::make_shared<TypeExpr>();
            t->kind = TypeExpr::Kind::Record;
            t->pos = p;
            if (!is_punct("}")) {
                do {
                    t->fields.push_back(ident("field name"));
                    expect(":");
                    t->args.push_back(type());
                } while (accept(","));
            }
            expect("}");
            return t;
        }
        std::string name = ident("type");
        if (name == "none") name = "None";
        if (kGenericTypes.count(name) && is_punct("<")) {
            ++i_;
            auto t = std::make_shared<TypeExpr>();
            t->kind = TypeExpr::Kind::Generic;
            t->name = name;
            t->pos = p;
            do t->args.push_back(type());
            while (accept(","));
            expect(">");
            return t;
        }
        return make_type_name(name, p);
    }

    // Speculatively parses `<T, ...>`; restores the position on failure.
    std::optional<std::vector<TypeExprPtr>> try_type_args(bool require_call) {
        if (!is_punct("<")) return std::nullopt;
        std::size_t save = i_;
        Diagnostics save_diags = diags_;
        try {
            ++i_;
            std::vector<TypeExprPtr> args;
            do args.push_back(type());
            while (accept(","));
            expect(">");
            if (require_call && !is_punct("(") && !is_punct("[") && !is_punct("{")) throw ParseFailure(pos(), "");
            return args;
        } catch (const ParseFailure&) {
            i_ = save;
            diags_ = save_diags;
            return std::nullopt;
        }
    }

    // ---- statements ----

    Block block() {
        expect("{");
        Block b;
        while (!is_punct("}")) {
            if (at_end()) fail("'}'");
            b.push_back(stmt());
        }
        expect("}");
        return b;
    }

    bool flow_guard_ahead() const {
        std::size_t k = 0;
        if (is_punct("!", 0)) k = 1;
        const Token& t = ahead(k);
        if (t.kind == TokKind::Ident && kFlowSpecials.count(t.text)) return ahead(k + 1).kind == TokKind::Punct && ahead(k + 1).text == "(";
        return t.kind == TokKind::Punct && (t.text == "<" || t.text == "[");
    }

    IfBranch if_branch() {
        IfBranch b;
        if (flow_guard_ahead()) {
            b.flow = flow_op();
            expect("(");
            b.cond = expr();
            expect(")");
        } else {
            expect("(");
            b.cond = expr();
            expect(")");
        }
        b.body = block();
        return b;
    }

    void end_stmt(bool top) {
        if (top) {
            accept(";");
            return;
        }
        expect(";");
    }

    StmtPtr stmt(bool top = false) {
        SourcePos p = pos();
        if (is_kw("let") || is_kw("var")) {
            auto s = make_stmt(is_kw("let") ? StmtKind::Let : StmtKind::Var, p);
            ++i_;
            s->name = ident("variable name");
            if (accept(":")) s->type = type();
            if (s->kind == StmtKind::Let || is_punct("=")) {
                expect("=");
                s->expr = expr();
            }
            end_stmt(top);
            return s;
        }
        if (accept_kw("if")) {
            auto s = make_stmt(StmtKind::If, p);
            s->branches.push_back(if_branch());
            while (true) {
                if (accept_kw("elif")) {
                    s->branches.push_back(if_branch());
                } else if (is_kw("else") && is_kw("if", 1)) {
                    i_ += 2;
                    s->branches.push_back(if_branch());
                } else if (accept_kw("else")) {
                    s->else_body = block();
                    break;
                } else {
                    break;
                }
            }
            return s;
        }
        if (accept_kw("match")) {
            auto s = make_stmt(StmtKind::Match, p);
            expect("(");
            s->expr = expr();
            expect(")");
            expect("{");
            accept("|");
            while (!is_punct("}")) {
                if (at_end()) fail("'}'");
                s->arms.push_back(match_arm());
                accept("|");
            }
            expect("}");
            return s;
        }
        if (accept_kw("return")) {
            auto s = make_stmt(StmtKind::Return, p);
            if (!is_punct(";")) s->expr = expr();
            end_stmt(top);
            return s;
        }
        if (accept_kw("assert")) {
            auto s = make_stmt(StmtKind::Assert, p);
            s->level = level_prefix();
            s->expr = expr();
            end_stmt(top);
            return s;
        }
        if (is_kw("defer") && is_punct(";", 1)) {
            i_ += 2;
            return make_stmt(StmtKind::Defer, p);
        }
        if (is_punct("...") && (is_punct(";", 1) || is_punct("}", 1) || top || ahead(1).kind == TokKind::Ident)) {
            ++i_;
            accept(";");
            return make_stmt(StmtKind::Elided, p);
        }
        if (is_punct("{")) {
            auto s = make_stmt(StmtKind::Block, p);
            s->body = block();
            return s;
        }
        if (cur().kind == TokKind::Ident && is_punct("=", 1)) {
            auto s = make_stmt(StmtKind::Assign, p);
            s->name = ident();
            expect("=");
            s->expr = expr();
            end_stmt(top);
            return s;
        }
        auto e = expr();
        end_stmt(top);
        if ((e->kind == ExprKind::FlowCast || (e->kind == ExprKind::FlowEarly && e->name == "@@")) &&
            e->args[0]->kind == ExprKind::Var && e->args[0]->name != "this" && e->args[0]->name.rfind('$', 0) != 0) {
            auto s = make_stmt(StmtKind::Narrow, p);
            s->name = e->args[0]->name;
            s->flow = e->flow;
            s->early = e->kind == ExprKind::FlowEarly;
            return s;
        }
        auto s = make_stmt(StmtKind::ExprStmt, p);
        s->expr = e;
        return s;
    }

    MatchArm match_arm() {
        MatchArm a;
        a.pos = pos();
        if (is_kw("_")) {
            ++i_;
            a.kind = MatchArm::Kind::Wildcard;
        } else if (literal_ahead()) {
            a.kind = MatchArm::Kind::Literal;
            a.literal = literal();
        } else {
            a.kind = MatchArm::Kind::Type;
            a.type = type();
        }
        expect("=>");
        if (is_punct("{")) {
            a.braced = true;
            a.body = block();
        } else {
            a.body.push_back(stmt());
        }
        return a;
    }

    // ---- expressions ----

    bool literal_ahead() const {
        const Token& t = cur();
        switch (t.kind) {
            case TokKind::Number:
            case TokKind::Rational:
            case TokKind::TypedNumber:
            case TokKind::String:
            case TokKind::TypedString: return true;
            case TokKind::Ident: return t.text == "true" || t.text == "false" || t.text == "none";
            case TokKind::Punct: {
                const Token& n = ahead(1);
                return t.text == "-" && (n.kind == TokKind::Number || n.kind == TokKind::Rational || n.kind == TokKind::TypedNumber);
            }
            default: return false;
        }
    }

    ExprPtr literal() {
        SourcePos p = pos();
        bool neg = accept("-");
        const Token t = cur();
        auto e = make_expr(ExprKind::Literal, p);
        ++i_;
        switch (t.kind) {
            case TokKind::Number:
                e->text = t.text;
                e->suffix = t.suffix;
                if (t.suffix == "f") e->lit = LitKind::Float;
                else if (t.suffix == "d") e->lit = LitKind::Decimal;
                else if (t.text.find('.') != std::string::npos) e->lit = LitKind::Float;
                else e->lit = LitKind::Int;
                break;
            case TokKind::Rational:
                e->lit = LitKind::Rational;
                e->text = t.text;
                e->suffix = "R";
                break;
            case TokKind::TypedNumber:
                e->lit = LitKind::TypedNumber;
                e->text = t.text;
                e->suffix = t.suffix;
                break;
            case TokKind::String:
                e->lit = LitKind::String;
                e->text = t.text;
                break;
            case TokKind::TypedString:
                e->lit = LitKind::TypedString;
                e->text = t.text;
                e->suffix = t.suffix;
                break;
            case TokKind::Ident:
                e->lit = t.text == "true" ? LitKind::True : t.text == "false" ? LitKind::False : LitKind::None;
                break;
            default:
                --i_;
                fail("literal");
        }
        if (neg) {
            if (e->lit != LitKind::Int && e->lit != LitKind::Float && e->lit != LitKind::Decimal &&
                e->lit != LitKind::Rational && e->lit != LitKind::TypedNumber) {
                throw ParseFailure(p, "expected numeric literal after '-'");
            }
            e->text = "-" + e->text;
        }
        return e;
    }

    FlowOp flow_op() {
        FlowOp f;
        f.negated = accept("!");
        if (accept("<")) {
            f.kind = FlowTest::Kind::Type;
            f.type = type();
            expect(">");
            return f;
        }
        if (accept("[")) {
            f.kind = FlowTest::Kind::Literal;
            f.literal = literal();
            expect("]");
            return f;
        }
        std::string w = ident("flow test");
        if (w == "none") f.kind = FlowTest::Kind::None;
        else if (w == "some") f.kind = FlowTest::Kind::Some;
        else if (w == "ok") f.kind = FlowTest::Kind::Ok;
        else if (w == "err") f.kind = FlowTest::Kind::Err;
        else if (w == "result") f.kind = FlowTest::Kind::Result;
        else {
            --i_;
            fail("flow test");
        }
        return f;
    }

public:
    ExprPtr expr() { return implies(); }

private:
    ExprPtr binary(ExprPtr l, const std::string& op, ExprPtr r, SourcePos p) {
        auto e = make_expr(ExprKind::Binary, std::move(p));
        e->name = op;
        e->args = {std::move(l), std::move(r)};
        return e;
    }

    ExprPtr implies() {
        SourcePos p = pos();
        auto l = or_expr();
        if (accept("==>")) return binary(l, "==>", implies(), p);
        return l;
    }

    ExprPtr or_expr() {
        SourcePos p = pos();
        auto l = and_expr();
        while (accept("||")) l = binary(l, "||", and_expr(), p);
        return l;
    }

    ExprPtr and_expr() {
        SourcePos p = pos();
        auto l = eq_expr();
        while (accept("&&")) l = binary(l, "&&", eq_expr(), p);
        return l;
    }

    ExprPtr eq_expr() {
        SourcePos p = pos();
        auto l = rel_expr();
        while (true) {
            std::string op;
            for (const char* o : {"===", "!==", "==", "!="}) {
                if (is_punct(o)) {
                    op = o;
                    break;
                }
            }
            if (op.empty()) return l;
            ++i_;
            l = binary(l, op, rel_expr(), p);
        }
    }

    ExprPtr rel_expr() {
        SourcePos p = pos();
        auto l = add_expr();
        while (true) {
            std::string op;
            for (const char* o : {"<=", ">=", "<", ">"}) {
                if (is_punct(o)) {
                    op = o;
                    break;
                }
            }
            if (op.empty()) return l;
            ++i_;
            l = binary(l, op, add_expr(), p);
        }
    }

    ExprPtr add_expr() {
        SourcePos p = pos();
        auto l = mul_expr();
        while (is_punct("+") || is_punct("-")) {
            std::string op = t_[i_++].text;
            l = binary(l, op, mul_expr(), p);
        }
        return l;
    }

    ExprPtr mul_expr() {
        SourcePos p = pos();
        auto l = unary();
        while (is_punct("*") || is_punct("/") || is_punct("%")) {
            std::string op = t_[i_++].text;
            l = binary(l, op, unary(), p);
        }
        return l;
    }

    ExprPtr unary() {
        SourcePos p = pos();
        if (is_punct("-") && literal_ahead()) return postfix(literal());
        if (is_punct("!") || is_punct("-")) {
            auto e = make_expr(ExprKind::Unary, p);
            e->name = t_[i_++].text;
            e->args.push_back(unary());
            return e;
        }
        if (is_kw("ref") && ahead(1).kind != TokKind::Punct) {
            ++i_;
            auto e = postfix(primary());
            if (e->kind != ExprKind::MethodCall) throw ParseFailure(p, "'ref' must tag a method call");
            e->ref_tag = true;
            return e;
        }
        return postfix(primary());
    }

    bool recursive_tag() {
        if (is_punct("[") && is_kw("recursive", 1) && is_punct("]", 2)) {
            i_ += 3;
            return true;
        }
        return false;
    }

    std::vector<ExprPtr> call_args() {
        expect("(");
        std::vector<ExprPtr> args;
        if (!is_punct(")")) {
            do args.push_back(expr());
            while (accept(","));
        }
        expect(")");
        return args;
    }

    ExprPtr postfix(ExprPtr e) {
        while (true) {
            SourcePos p = pos();
            if (accept(".")) {
                if (is_punct("{")) {
                    ++i_;
                    auto u = make_expr(ExprKind::BulkUpdate, p);
                    u->args.push_back(e);
                    if (!is_punct("}")) {
                        do {
                            u->names.push_back(ident("field name"));
                            expect("=");
                            u->args.push_back(expr());
                        } while (accept(","));
                    }
                    expect("}");
                    e = u;
                    continue;
                }
                if (cur().kind == TokKind::Number && cur().suffix.empty()) {
                    auto x = make_expr(ExprKind::Index, p);
                    x->index = std::stoi(t_[i_++].text);
                    x->args.push_back(e);
                    e = x;
                    continue;
                }
                std::string name = ident("field or method name");
                auto targs = try_type_args(true);
                bool rec = recursive_tag();
                if (is_punct("(")) {
                    auto m = make_expr(ExprKind::MethodCall, p);
                    m->name = name;
                    if (targs) m->type_args = *targs;
                    m->recursive_tag = rec;
                    m->args.push_back(e);
                    for (auto& a : call_args()) m->args.push_back(a);
                    e = m;
                    continue;
                }
                if (targs || rec) fail("'('");
                auto f = make_expr(ExprKind::Field, p);
                f->name = name;
                f->args.push_back(e);
                e = f;
                continue;
            }
            ExprKind k;
            std::string op;
            if (is_punct("?")) {
                k = ExprKind::FlowTest;
            } else if (is_punct("@")) {
                k = ExprKind::FlowCast;
            } else if (is_punct("??") || is_punct("@@")) {
                k = ExprKind::FlowEarly;
                op = cur().text;
            } else {
                return e;
            }
            ++i_;
            auto f = make_expr(k, p);
            f->name = op;
            f->flow = flow_op();
            f->args.push_back(e);
            e = f;
        }
    }

    ExprPtr construct_body(ExprPtr c) {
        expect("{");
        if (!is_punct("}")) {
            do {
                if (cur().kind == TokKind::Ident && is_punct("=", 1)) {
                    c->names.push_back(ident());
                    expect("=");
                    c->args.push_back(expr());
                    continue;
                }
                auto v = expr();
                if (accept("=>")) {
                    c->map_entries = true;
                    c->args.push_back(v);
                    c->args.push_back(expr());
                } else {
                    c->names.emplace_back();
                    c->args.push_back(v);
                }
            } while (accept(","));
        }
        expect("}");
        if (c->map_entries) {
            c->names.clear();
            if (c->args.size() % 2 != 0) throw ParseFailure(c->pos, "malformed map entries");
        }
        bool any_named = false, any_positional = false;
        for (const auto& n : c->names) (n.empty() ? any_positional : any_named) = true;
        if (any_named && any_positional) throw ParseFailure(c->pos, "constructor mixes named and positional fields");
        if (!any_named) c->names.clear();
        return c;
    }

    ExprPtr primary() {
        SourcePos p = pos();
        const Token& t = cur();
        switch (t.kind) {
            case TokKind::Number:
            case TokKind::Rational:
            case TokKind::TypedNumber:
            case TokKind::String:
            case TokKind::TypedString: return literal();
            case TokKind::Dollar: {
                auto e = make_expr(ExprKind::Var, p);
                e->name = "$" + t.text;
                ++i_;
                return e;
            }
            case TokKind::Punct: {
                if (accept("(")) {
                    auto e = expr();
                    expect(")");
                    return e;
                }
                if (accept("[")) {
                    auto e = make_expr(ExprKind::Tuple, p);
                    if (!is_punct("]")) {
                        do e->args.push_back(expr());
                        while (accept(","));
                    }
                    expect("]");
                    return e;
                }
                if (accept("{")) {
                    auto e = make_expr(ExprKind::Record, p);
                    if (!is_punct("}")) {
                        do {
                            e->names.push_back(ident("field name"));
                            expect("=");
                            e->args.push_back(expr());
                        } while (accept(","));
                    }
                    expect("}");
                    return e;
                }
                if (accept("...")) return make_expr(ExprKind::Elided, p);
                fail("expression");
            }
            case TokKind::Ident: break;
            default: fail("expression");
        }
        std::string name = t.text;
        if (name == "true" || name == "false" || name == "none") return literal();
        if ((name == "fn" || name == "pred") && is_punct("(", 1)) {
            ++i_;
            auto e = make_expr(ExprKind::Lambda, p);
            e->is_pred = name == "pred";
            expect("(");
            if (!is_punct(")")) {
                do {
                    e->names.push_back(ident("parameter name"));
                    e->type_args.push_back(accept(":") ? type() : nullptr);
                } while (accept(","));
            }
            expect(")");
            expect("=>");
            e->args.push_back(expr());
            return e;
        }
        if (name == "if") {
            ++i_;
            auto e = make_expr(ExprKind::IfExpr, p);
            e->args.push_back(expr());
            expect_kw("then");
            e->args.push_back(expr());
            expect_kw("else");
            e->args.push_back(expr());
            return e;
        }
        ++i_;
        if (kGenericTypes.count(name) && is_punct("<")) {
            std::size_t save = i_;
            auto targs = try_type_args(false);
            if (targs && is_punct("{")) {
                auto c = make_expr(ExprKind::Construct, p);
                auto ty = std::make_shared<TypeExpr>();
                ty->kind = TypeExpr::Kind::Generic;
                ty->name = name;
                ty->args = *targs;
                ty->pos = p;
                c->type = ty;
                return construct_body(c);
            }
            i_ = save;
        }
        if (accept("::")) {
            auto e = make_expr(ExprKind::StaticCall, p);
            e->scope = name;
            e->name = ident("member name");
            if (auto targs = try_type_args(true)) e->type_args = *targs;
            e->recursive_tag = recursive_tag();
            if (is_punct("(")) {
                e->args = call_args();
            } else {
                if (!e->type_args.empty() || e->recursive_tag) fail("'('");
                e->no_parens = true;
            }
            return e;
        }
        if (is_punct("{") && std::isupper(static_cast<unsigned char>(name[0]))) {
            auto c = make_expr(ExprKind::Construct, p);
            c->type = make_type_name(name, p);
            return construct_body(c);
        }
        std::optional<std::vector<TypeExprPtr>> targs;
        if (is_punct("<")) targs = try_type_args(true);
        bool rec = recursive_tag();
        if (is_punct("(")) {
            auto e = make_expr(ExprKind::Call, p);
            e->name = name;
            if (targs) e->type_args = *targs;
            e->recursive_tag = rec;
            e->args = call_args();
            return e;
        }
        if (targs || rec) fail("'('");
        auto v = make_expr(ExprKind::Var, p);
        v->name = name;
        return v;
    }
};

}  // namespace

SurfaceProgram parse_program(const std::vector<Token>& tokens, const std::string& file) {
    return Parser(tokens, file).program();
}

SurfaceProgram parse_source(const std::string& source, const std::string& file) {
    return parse_program(tokenize(source, file), file);
}

Block parse_block_text(const std::string& source, const std::string& file) {
    auto toks = tokenize(source, file);
    return Parser(toks, file).block_text();
}

}  // namespace lx
