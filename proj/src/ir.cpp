#include "lx/ir.hpp"

#include <functional>
#include <set>
#include <sstream>

#include "lx/check.hpp"

namespace lx {

namespace {

const std::vector<std::pair<IrKind, const char*>> kKinds = {
    {IrKind::Const, "const"},     {IrKind::Var, "var"},         {IrKind::Let, "let"},       {IrKind::Ite, "ite"},
    {IrKind::Call, "call"},       {IrKind::Functor, "functor"}, {IrKind::Tuple, "tuple"},   {IrKind::Record, "record"},
    {IrKind::Entity, "entity"},   {IrKind::List, "list"},       {IrKind::Map, "map"},       {IrKind::Access, "access"},
    {IrKind::Is, "is"},           {IrKind::As, "as"},           {IrKind::Inject, "inject"}, {IrKind::Extract, "extract"},
    {IrKind::Eq, "eq"},           {IrKind::Neq, "neq"},         {IrKind::Prim, "prim"},     {IrKind::And, "and"},
    {IrKind::Or, "or"},           {IrKind::Implies, "implies"}, {IrKind::Assert, "assert"}, {IrKind::Error, "error"},
};

std::string escape(const std::string& s) {
    std::string out = "\"";
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out + "\"";
}

std::string pos_str(const SourcePos& p) { return std::to_string(p.line) + ":" + std::to_string(p.column); }

std::string const_text(const Value& v) {
    if (v.kind() == ValueKind::String) return escape(v.as_string());
    return to_string(v);
}

void write_expr(std::ostream& out, const IrNode& e, int indent) {
    out << "(" << ir_kind_name(e.kind) << " " << escape(e.type.str()) << " " << pos_str(e.pos);
    switch (e.kind) {
        case IrKind::Const: out << " " << const_text(e.value); break;
        case IrKind::Var:
        case IrKind::Let:
        case IrKind::Call:
        case IrKind::Inject:
        case IrKind::Prim: out << " " << e.name; break;
        case IrKind::Functor:
            out << " " << e.name << " " << (e.spec.empty() ? "-" : e.spec) << " " << e.ncaptures << " "
                << (e.on_map ? "map" : "list");
            break;
        case IrKind::Record:
            out << " (names";
            for (const auto& n : e.names) out << " " << n;
            out << ")";
            break;
        case IrKind::Entity: out << " " << (e.check ? "checked" : "unchecked"); break;
        case IrKind::Access:
            if (e.index >= 0) {
                out << " #" << e.index;
            } else {
                out << " " << e.name;
            }
            break;
        case IrKind::Is: out << " " << escape(e.test.str()); break;
        case IrKind::As: out << " " << escape(e.test.str()) << " " << (e.check ? "checked" : "unchecked"); break;
        case IrKind::Assert: out << " " << check_level_name(e.level) << " " << error_code_name(e.code); break;
        case IrKind::Error: out << " " << error_code_name(e.code); break;
        default: break;
    }
    for (const auto& k : e.kids) {
        out << "\n" << std::string(static_cast<std::size_t>(indent + 2), ' ');
        write_expr(out, *k, indent + 2);
    }
    out << ")";
}

// ---- reader ----

struct SExp {
    bool is_list = false;
    bool quoted = false;
    std::string atom;
    std::vector<SExp> items;
    int line = 0;
};

class Reader {
public:
    explicit Reader(const std::string& s) : s_(s) {}

    SExp read() {
        skip();
        if (i_ >= s_.size()) fail("unexpected end of input");
        SExp e;
        e.line = line_;
        char c = s_[i_];
        if (c == '(') {
            ++i_;
            e.is_list = true;
            for (;;) {
                skip();
                if (i_ >= s_.size()) fail("unterminated list");
                if (s_[i_] == ')') {
                    ++i_;
                    break;
                }
                e.items.push_back(read());
            }
            return e;
        }
        if (c == ')') fail("unexpected )");
        if (c == '"') {
            ++i_;
            e.quoted = true;
            while (i_ < s_.size() && s_[i_] != '"') {
                char d = s_[i_++];
                if (d == '\\' && i_ < s_.size()) {
                    char n = s_[i_++];
                    switch (n) {
                        case 'n': e.atom += '\n'; break;
                        case 't': e.atom += '\t'; break;
                        case 'r': e.atom += '\r'; break;
                        default: e.atom += n;
                    }
                } else {
                    if (d == '\n') ++line_;
                    e.atom += d;
                }
            }
            if (i_ >= s_.size()) fail("unterminated string");
            ++i_;
            return e;
        }
        while (i_ < s_.size() && !std::isspace(static_cast<unsigned char>(s_[i_])) && s_[i_] != '(' && s_[i_] != ')') {
            e.atom += s_[i_++];
        }
        return e;
    }

    bool at_end() {
        skip();
        return i_ >= s_.size();
    }

    [[noreturn]] void fail(const std::string& m) {
        Diagnostics d;
        d.error(SourcePos{"<ir>", line_, 1}, m);
        throw CompileError(d);
    }

private:
    void skip() {
        while (i_ < s_.size()) {
            char c = s_[i_];
            if (c == '\n') {
                ++line_;
                ++i_;
            } else if (std::isspace(static_cast<unsigned char>(c))) {
                ++i_;
            } else if (c == ';') {
                while (i_ < s_.size() && s_[i_] != '\n') ++i_;
            } else {
                break;
            }
        }
    }

    const std::string& s_;
    std::size_t i_ = 0;
    int line_ = 1;
};

class IrParser {
public:
    IrParser(const TypeUniverse& u, std::string file) : u_(u), file_(std::move(file)) {}

    [[noreturn]] void fail(const SExp& at, const std::string& m) {
        Diagnostics d;
        d.error(SourcePos{"<ir>", at.line, 1}, m);
        throw CompileError(d);
    }

    const SExp& item(const SExp& e, std::size_t i) {
        if (!e.is_list || i >= e.items.size()) fail(e, "malformed form");
        return e.items[i];
    }

    const std::string& atom(const SExp& e, std::size_t i) {
        const SExp& a = item(e, i);
        if (a.is_list) fail(a, "expected an atom");
        return a.atom;
    }

    Type type(const SExp& at, const std::string& s) {
        auto t = parse_type_string(s, u_);
        if (!t) fail(at, "unknown type " + s);
        return *t;
    }

    SourcePos pos(const SExp& at, const std::string& s) {
        auto colon = s.find(':');
        if (colon == std::string::npos) fail(at, "malformed position " + s);
        try {
            return SourcePos{file_, std::stoi(s.substr(0, colon)), std::stoi(s.substr(colon + 1))};
        } catch (const std::exception&) {
            fail(at, "malformed position " + s);
        }
    }

    int integer(const SExp& at, const std::string& s) {
        try {
            return std::stoi(s);
        } catch (const std::exception&) {
            fail(at, "expected an integer, found " + s);
        }
    }

    Value constant(const SExp& at, const SExp& lit, const Type& t) {
        if (lit.quoted) {
            if (t.kind() != TypeKind::String && t.kind() != TypeKind::ASCIIString) fail(at, "string constant of type " + t.str());
            return Value::string(lit.atom);
        }
        const std::string& s = lit.atom;
        if (s == "none") return Value::none();
        if (s == "true") return Value::boolean(true);
        if (s == "false") return Value::boolean(false);
        if (s.empty() || !t.is_numeric()) fail(at, "bad constant " + s);
        try {
            return numeric_from_text(t, s.substr(0, s.size() - 1));
        } catch (const std::exception&) {
            fail(at, "bad numeric constant " + s);
        }
    }

    IrPtr expr(const SExp& e) {
        if (!e.is_list || e.items.size() < 3) fail(e, "malformed expression");
        const std::string& k = atom(e, 0);
        std::optional<IrKind> kind;
        for (const auto& [kk, n] : kKinds) {
            if (k == n) kind = kk;
        }
        if (!kind) fail(e, "unknown node kind " + k);
        auto n = std::make_shared<IrNode>();
        n->kind = *kind;
        n->type = type(e, atom(e, 1));
        n->pos = pos(e, atom(e, 2));
        std::size_t next = 3;
        switch (n->kind) {
            case IrKind::Const: n->value = constant(e, item(e, next++), n->type); break;
            case IrKind::Var:
            case IrKind::Let:
            case IrKind::Call:
            case IrKind::Inject:
            case IrKind::Prim: n->name = atom(e, next++); break;
            case IrKind::Functor:
                n->name = atom(e, next++);
                n->spec = atom(e, next++);
                if (n->spec == "-") n->spec.clear();
                n->ncaptures = integer(e, atom(e, next++));
                n->on_map = atom(e, next++) == "map";
                break;
            case IrKind::Record: {
                const SExp& names = item(e, next++);
                if (!names.is_list || names.items.empty() || names.items[0].atom != "names") fail(e, "expected (names ...)");
                for (std::size_t i = 1; i < names.items.size(); ++i) n->names.push_back(names.items[i].atom);
                break;
            }
            case IrKind::Entity: n->check = atom(e, next++) == "checked"; break;
            case IrKind::Access: {
                const std::string& a = atom(e, next++);
                if (!a.empty() && a[0] == '#') {
                    n->index = integer(e, a.substr(1));
                } else {
                    n->name = a;
                }
                break;
            }
            case IrKind::Is: n->test = type(e, atom(e, next++)); break;
            case IrKind::As:
                n->test = type(e, atom(e, next++));
                n->check = atom(e, next++) == "checked";
                break;
            case IrKind::Assert: {
                auto l = parse_check_level(atom(e, next++));
                auto c = parse_error_code(atom(e, next++));
                if (!l || !c) fail(e, "bad assert attributes");
                n->level = *l;
                n->code = *c;
                break;
            }
            case IrKind::Error: {
                auto c = parse_error_code(atom(e, next++));
                if (!c) fail(e, "bad error code");
                n->code = *c;
                break;
            }
            default: break;
        }
        for (std::size_t i = next; i < e.items.size(); ++i) n->kids.push_back(expr(e.items[i]));
        return n;
    }

    IrCondition condition(const SExp& e) {
        auto l = parse_check_level(atom(e, 0));
        if (!l) fail(e, "bad check level");
        IrCondition c;
        c.level = *l;
        c.pos = pos(e, atom(e, 1));
        c.expr = expr(item(e, 2));
        return c;
    }

    IrFunction function(const SExp& e) {
        IrFunction f;
        f.name = atom(e, 1);
        for (std::size_t i = 2; i < e.items.size(); ++i) {
            const SExp& part = e.items[i];
            const std::string& tag = atom(part, 0);
            if (tag == "pos") {
                f.pos = pos(part, atom(part, 1));
            } else if (tag == "recursive") {
                f.is_recursive = atom(part, 1) == "true";
            } else if (tag == "params") {
                for (std::size_t j = 1; j < part.items.size(); ++j) {
                    const SExp& p = part.items[j];
                    f.params.emplace_back(atom(p, 0), type(p, atom(p, 1)));
                }
            } else if (tag == "result") {
                f.result = type(part, atom(part, 1));
            } else if (tag == "requires") {
                f.requires_.push_back(condition(item(part, 1)));
            } else if (tag == "ensures") {
                f.ensures.push_back(condition(item(part, 1)));
            } else if (tag == "body") {
                f.body = expr(item(part, 1));
            } else {
                fail(part, "unknown function part " + tag);
            }
        }
        if (!f.body) fail(e, "function " + f.name + " has no body");
        return f;
    }

private:
    const TypeUniverse& u_;
    std::string file_;
};

void assign_paths(IrNode& e, const std::string& path) {
    e.path = path;
    for (std::size_t i = 0; i < e.kids.size(); ++i) assign_paths(*e.kids[i], path + "." + std::to_string(i));
}

}  // namespace

const char* ir_kind_name(IrKind k) {
    for (const auto& [kk, n] : kKinds) {
        if (kk == k) return n;
    }
    return "?";
}

IrPtr ir_node(IrKind k, Type t, SourcePos pos, std::vector<IrPtr> kids) {
    auto n = std::make_shared<IrNode>();
    n->kind = k;
    n->type = std::move(t);
    n->pos = std::move(pos);
    n->kids = std::move(kids);
    return n;
}

IrPtr ir_const(Value v, Type t, SourcePos pos) {
    auto n = ir_node(IrKind::Const, std::move(t), std::move(pos));
    n->value = std::move(v);
    return n;
}

IrPtr ir_var(const std::string& name, Type t, SourcePos pos) {
    auto n = ir_node(IrKind::Var, std::move(t), std::move(pos));
    n->name = name;
    return n;
}

IrPtr ir_let(const std::string& name, IrPtr bound, IrPtr body) {
    auto pos = bound->pos;
    auto t = body->type;
    auto n = ir_node(IrKind::Let, t, pos, {std::move(bound), std::move(body)});
    n->name = name;
    return n;
}

IrPtr ir_ite(IrPtr c, IrPtr a, IrPtr b, Type t) {
    auto pos = c->pos;
    return ir_node(IrKind::Ite, std::move(t), pos, {std::move(c), std::move(a), std::move(b)});
}

IrPtr ir_call(const std::string& fn, std::vector<IrPtr> args, Type t, SourcePos pos) {
    auto n = ir_node(IrKind::Call, std::move(t), std::move(pos), std::move(args));
    n->name = fn;
    return n;
}

IrPtr ir_prim(const std::string& op, std::vector<IrPtr> args, Type t, SourcePos pos) {
    auto n = ir_node(IrKind::Prim, std::move(t), std::move(pos), std::move(args));
    n->name = op;
    return n;
}

IrPtr ir_bool(bool b, SourcePos pos) { return ir_const(Value::boolean(b), Type::boolean(), std::move(pos)); }

IrPtr ir_not(IrPtr e) {
    auto pos = e->pos;
    return ir_prim("!", {std::move(e)}, Type::boolean(), pos);
}

IrPtr ir_and(IrPtr a, IrPtr b) {
    auto pos = a->pos;
    return ir_node(IrKind::And, Type::boolean(), pos, {std::move(a), std::move(b)});
}

IrPtr ir_is(IrPtr e, Type test) {
    auto pos = e->pos;
    auto n = ir_node(IrKind::Is, Type::boolean(), pos, {std::move(e)});
    n->test = std::move(test);
    return n;
}

IrPtr ir_as(IrPtr e, Type test, bool checked) {
    auto pos = e->pos;
    auto n = ir_node(IrKind::As, test, pos, {std::move(e)});
    n->test = std::move(test);
    n->check = checked;
    return n;
}

IrPtr ir_access_field(IrPtr e, const std::string& field, Type t) {
    auto pos = e->pos;
    auto n = ir_node(IrKind::Access, std::move(t), pos, {std::move(e)});
    n->name = field;
    return n;
}

IrPtr ir_access_index(IrPtr e, int index, Type t) {
    auto pos = e->pos;
    auto n = ir_node(IrKind::Access, std::move(t), pos, {std::move(e)});
    n->index = index;
    return n;
}

IrPtr ir_clone(const IrPtr& e) {
    auto n = std::make_shared<IrNode>(*e);
    for (auto& k : n->kids) k = ir_clone(k);
    return n;
}

void finalize_paths(IrFunction& f) {
    if (f.body) assign_paths(*f.body, "b");
    for (std::size_t i = 0; i < f.requires_.size(); ++i) assign_paths(*f.requires_[i].expr, "r" + std::to_string(i));
    for (std::size_t i = 0; i < f.ensures.size(); ++i) assign_paths(*f.ensures[i].expr, "e" + std::to_string(i));
}

void finalize_paths(IrProgram& p) {
    for (auto& [_, f] : p.functions) finalize_paths(f);
}

std::string site_name(const std::string& fn, const std::string& path) { return fn + ":" + path; }

std::string serialize_ir(const IrProgram& p) {
    std::ostringstream out;
    out << "(ir " << escape(p.file) << "\n";
    out << "(entries";
    for (const auto& e : p.entries) out << " " << e;
    out << ")\n";
    for (const auto& [name, f] : p.functions) {
        out << "(function " << name << "\n";
        out << "  (pos " << pos_str(f.pos) << ")\n";
        out << "  (recursive " << (f.is_recursive ? "true" : "false") << ")\n";
        out << "  (params";
        for (const auto& [pn, pt] : f.params) out << " (" << pn << " " << escape(pt.str()) << ")";
        out << ")\n";
        out << "  (result " << escape(f.result.str()) << ")\n";
        for (const auto& c : f.requires_) {
            out << "  (requires (" << check_level_name(c.level) << " " << pos_str(c.pos) << "\n    ";
            write_expr(out, *c.expr, 4);
            out << "))\n";
        }
        for (const auto& c : f.ensures) {
            out << "  (ensures (" << check_level_name(c.level) << " " << pos_str(c.pos) << "\n    ";
            write_expr(out, *c.expr, 4);
            out << "))\n";
        }
        out << "  (body\n    ";
        write_expr(out, *f.body, 4);
        out << "))\n";
    }
    out << ")\n";
    return out.str();
}

IrProgram parse_ir(const std::string& text, const TypeUniverse& universe) {
    Reader r(text);
    SExp top = r.read();
    if (!r.at_end()) r.fail("trailing text after program");
    if (!top.is_list || top.items.size() < 2 || top.items[0].atom != "ir") r.fail("expected (ir ...)");
    IrProgram p;
    p.file = top.items[1].atom;
    p.universe = universe;
    IrParser ps(universe, p.file);
    for (std::size_t i = 2; i < top.items.size(); ++i) {
        const SExp& part = top.items[i];
        const std::string& tag = ps.atom(part, 0);
        if (tag == "entries") {
            for (std::size_t j = 1; j < part.items.size(); ++j) p.entries.push_back(part.items[j].atom);
        } else if (tag == "function") {
            auto f = ps.function(part);
            auto name = f.name;
            if (p.functions.count(name)) ps.fail(part, "duplicate function " + name);
            p.functions[name] = std::move(f);
        } else {
            ps.fail(part, "unknown top-level form " + tag);
        }
    }
    finalize_paths(p);
    return p;
}

bool ir_equal(const IrNode& a, const IrNode& b, bool with_pos) {
    if (a.kind != b.kind || a.type != b.type || a.name != b.name || a.spec != b.spec || a.ncaptures != b.ncaptures ||
        a.on_map != b.on_map || a.index != b.index || a.names != b.names || a.check != b.check || a.level != b.level ||
        a.code != b.code || a.kids.size() != b.kids.size()) {
        return false;
    }
    if (with_pos && a.pos != b.pos) return false;
    if ((a.kind == IrKind::Is || a.kind == IrKind::As) && a.test != b.test) return false;
    if (a.kind == IrKind::Const && !(value_equal(a.value, b.value) && a.value.kind() == b.value.kind())) {
        // Floats are not key values; compare their canonical spelling.
        if (to_string(a.value) != to_string(b.value)) return false;
    }
    for (std::size_t i = 0; i < a.kids.size(); ++i) {
        if (!ir_equal(*a.kids[i], *b.kids[i], with_pos)) return false;
    }
    return true;
}

bool ir_equal(const IrProgram& a, const IrProgram& b) {
    if (a.file != b.file || a.entries != b.entries || a.functions.size() != b.functions.size()) return false;
    auto conds_equal = [](const std::vector<IrCondition>& x, const std::vector<IrCondition>& y) {
        if (x.size() != y.size()) return false;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (x[i].level != y[i].level || x[i].pos != y[i].pos || !ir_equal(*x[i].expr, *y[i].expr)) return false;
        }
        return true;
    };
    for (const auto& [n, f] : a.functions) {
        auto it = b.functions.find(n);
        if (it == b.functions.end()) return false;
        const auto& g = it->second;
        if (f.params != g.params || f.result != g.result || f.is_recursive != g.is_recursive || f.pos != g.pos) return false;
        if (!conds_equal(f.requires_, g.requires_) || !conds_equal(f.ensures, g.ensures)) return false;
        if (!ir_equal(*f.body, *g.body)) return false;
    }
    return true;
}

namespace {

bool alpha(const IrNode& a, const IrNode& b, std::map<std::string, std::string>& ren) {
    if (a.kind != b.kind || a.type != b.type || a.kids.size() != b.kids.size()) return false;
    switch (a.kind) {
        case IrKind::Var: {
            auto it = ren.find(a.name);
            return (it != ren.end() ? it->second : a.name) == b.name;
        }
        case IrKind::Let: {
            if (!alpha(*a.kids[0], *b.kids[0], ren)) return false;
            auto saved = ren;
            ren[a.name] = b.name;
            bool ok = alpha(*a.kids[1], *b.kids[1], ren);
            ren = saved;
            return ok;
        }
        case IrKind::Const:
            return to_string(a.value) == to_string(b.value);
        default:
            break;
    }
    if (a.name != b.name || a.index != b.index || a.names != b.names || a.check != b.check || a.level != b.level ||
        a.code != b.code || a.ncaptures != b.ncaptures || a.on_map != b.on_map) {
        return false;
    }
    if ((a.kind == IrKind::Is || a.kind == IrKind::As) && a.test != b.test) return false;
    for (std::size_t i = 0; i < a.kids.size(); ++i) {
        if (!alpha(*a.kids[i], *b.kids[i], ren)) return false;
    }
    return true;
}

}  // namespace

bool ir_alpha_equal(const IrNode& a, const IrNode& b) {
    std::map<std::string, std::string> ren;
    return alpha(a, b, ren);
}

std::size_t ir_size(const IrNode& e) {
    std::size_t n = 1;
    for (const auto& k : e.kids) n += ir_size(*k);
    return n;
}

std::string ir_pretty(const IrNode& e) {
    auto kid = [&](std::size_t i) { return ir_pretty(*e.kids[i]); };
    auto list = [&](std::size_t from) {
        std::string out;
        for (std::size_t i = from; i < e.kids.size(); ++i) {
            if (i > from) out += ", ";
            out += kid(i);
        }
        return out;
    };
    switch (e.kind) {
        case IrKind::Const: return to_string(e.value);
        case IrKind::Var: return e.name;
        case IrKind::Let: return "let " + e.name + " = " + kid(0) + " in " + kid(1);
        case IrKind::Ite: return "if " + kid(0) + " then " + kid(1) + " else " + kid(2);
        case IrKind::Call: return e.name + "(" + list(0) + ")";
        case IrKind::Functor: return e.name + "[" + e.spec + "](" + list(0) + ")";
        case IrKind::Tuple: return "[" + list(0) + "]";
        case IrKind::Record: {
            std::string out = "{";
            for (std::size_t i = 0; i < e.kids.size(); ++i) {
                if (i) out += ", ";
                out += e.names[i] + "=" + kid(i);
            }
            return out + "}";
        }
        case IrKind::Entity: return e.type.str() + "{" + list(0) + "}";
        case IrKind::List:
        case IrKind::Map: return e.type.str() + "{" + list(0) + "}";
        case IrKind::Access: return kid(0) + "." + (e.index >= 0 ? std::to_string(e.index) : e.name);
        case IrKind::Is: return kid(0) + "?<" + e.test.str() + ">";
        case IrKind::As: return kid(0) + "@<" + e.test.str() + ">";
        case IrKind::Inject: return e.name + "::from(" + kid(0) + ")";
        case IrKind::Extract: return kid(0) + ".value()";
        case IrKind::Eq: return kid(0) + " == " + kid(1);
        case IrKind::Neq: return kid(0) + " != " + kid(1);
        case IrKind::Prim:
            if (e.name == "neg") return "-" + kid(0);
            if (e.name == "!") return "!" + kid(0);
            if (e.name == "concat") return "concat(" + list(0) + ")";
            return kid(0) + " " + e.name + " " + kid(1);
        case IrKind::And: return "(" + kid(0) + " && " + kid(1) + ")";
        case IrKind::Or: return "(" + kid(0) + " || " + kid(1) + ")";
        case IrKind::Implies: return "(" + kid(0) + " ==> " + kid(1) + ")";
        case IrKind::Assert:
            return std::string("assert[") + check_level_name(e.level) + "](" + kid(0) + ") in " + kid(1);
        case IrKind::Error: return std::string("error(") + error_code_name(e.code) + ")";
    }
    return "?";
}

// ---------------------------------------------------------------------------
// Validation

namespace {

class Validator {
public:
    explicit Validator(const IrProgram& p) : p_(p) {}

    std::vector<IrViolation> run() {
        for (const auto& e : p_.entries) {
            if (!p_.functions.count(e)) out_.push_back({e, "", "entry point does not name a function"});
        }
        for (const auto& [name, f] : p_.functions) {
            fn_ = &f;
            lets_.clear();
            std::set<std::string> scope;
            for (const auto& [pn, _] : f.params) {
                if (!scope.insert(pn).second) add("", "duplicate parameter " + pn);
            }
            if (!f.body) {
                add("", "missing body");
                continue;
            }
            for (const auto& c : f.requires_) {
                expr(*c.expr, scope);
                if (c.expr->type != Type::boolean()) add(c.expr->path, "requires clause is not Bool");
            }
            expr(*f.body, scope);
            if (!subtype(f.body->type, f.result, p_.universe)) {
                add(f.body->path, "body type " + f.body->type.str() + " does not fit result " + f.result.str());
            }
            auto post = scope;
            post.insert("$return");
            for (const auto& c : f.ensures) {
                expr(*c.expr, post);
                if (c.expr->type != Type::boolean()) add(c.expr->path, "ensures clause is not Bool");
            }
        }
        recursion();
        return out_;
    }

private:
    const IrProgram& p_;
    const IrFunction* fn_ = nullptr;
    std::set<std::string> lets_;
    std::vector<IrViolation> out_;
    std::map<std::string, std::set<std::string>> calls_;

    void add(const std::string& path, const std::string& rule) { out_.push_back({fn_ ? fn_->name : "", path, rule}); }

    bool all_key(const Type& t) {
        for (const auto& m : t.members()) {
            if (!is_key_type(m, p_.universe)) return false;
        }
        return true;
    }

    void want_bool(const IrNode& e, std::size_t i) {
        if (e.kids.size() > i && e.kids[i]->type != Type::boolean()) add(e.path, std::string(ir_kind_name(e.kind)) + " operand is not Bool");
    }

    void arity(const IrNode& e, std::size_t n) {
        if (e.kids.size() != n) add(e.path, std::string(ir_kind_name(e.kind)) + " expects " + std::to_string(n) + " operands");
    }

    void expr(const IrNode& e, const std::set<std::string>& scope) {
        const auto& u = p_.universe;
        switch (e.kind) {
            case IrKind::Const:
                if (e.value.kind() > ValueKind::String) add(e.path, "constant is not a primitive");
                break;
            case IrKind::Var:
                if (!scope.count(e.name)) add(e.path, "free variable " + e.name);
                break;
            case IrKind::Let: {
                arity(e, 2);
                if (e.kids.size() != 2) return;
                if (!lets_.insert(e.name).second) add(e.path, "duplicate binding " + e.name);
                if (scope.count(e.name)) add(e.path, "binding " + e.name + " shadows a parameter or binding");
                expr(*e.kids[0], scope);
                auto inner = scope;
                inner.insert(e.name);
                expr(*e.kids[1], inner);
                if (e.type != e.kids[1]->type) add(e.path, "let type differs from its body");
                return;
            }
            case IrKind::Ite:
                arity(e, 3);
                want_bool(e, 0);
                break;
            case IrKind::And:
            case IrKind::Or:
            case IrKind::Implies:
                arity(e, 2);
                want_bool(e, 0);
                want_bool(e, 1);
                break;
            case IrKind::Call: {
                calls_[fn_->name].insert(e.name);
                auto it = p_.functions.find(e.name);
                if (it == p_.functions.end()) {
                    add(e.path, "call to unknown function " + e.name);
                    break;
                }
                const auto& g = it->second;
                if (g.params.size() != e.kids.size()) {
                    add(e.path, "call to " + e.name + " with wrong arity");
                    break;
                }
                for (std::size_t i = 0; i < e.kids.size(); ++i) {
                    if (!subtype(e.kids[i]->type, g.params[i].second, u)) {
                        add(e.path, "argument " + std::to_string(i) + " of " + e.name + " is " + e.kids[i]->type.str() +
                                        ", expected " + g.params[i].second.str());
                    }
                }
                break;
            }
            case IrKind::Functor: {
                const FunctorSig* sig = find_functor(e.on_map, e.name);
                if (!sig) {
                    add(e.path, "functor " + e.name + " is not in the catalog");
                    break;
                }
                std::size_t want = static_cast<std::size_t>(e.ncaptures + sig->containers + sig->extra);
                if (e.kids.size() != want) add(e.path, "functor " + e.name + " has wrong operand count");
                if (sig->lambda_arity > 0) {
                    auto it = p_.functions.find(e.spec);
                    if (it == p_.functions.end()) {
                        add(e.path, "functor " + e.name + " specialization " + e.spec + " does not exist");
                    } else {
                        calls_[fn_->name].insert(e.spec);
                        if (it->second.params.size() != static_cast<std::size_t>(e.ncaptures + sig->lambda_arity)) {
                            add(e.path, "specialization " + e.spec + " has wrong arity");
                        }
                    }
                } else if (!e.spec.empty() || e.ncaptures != 0) {
                    add(e.path, "functor " + e.name + " takes no specialization");
                }
                break;
            }
            case IrKind::Record:
                if (e.names.size() != e.kids.size()) add(e.path, "record names do not match values");
                break;
            case IrKind::Entity: {
                if (e.type.kind() == TypeKind::Ok || e.type.kind() == TypeKind::Err) {
                    arity(e, 1);
                    break;
                }
                if (e.type.kind() != TypeKind::Nominal || !u.is_entity(e.type.name())) {
                    add(e.path, "constructor of non-entity " + e.type.str());
                    break;
                }
                arity(e, u.nominal(e.type.name())->fields.size());
                break;
            }
            case IrKind::Map:
                if (e.kids.size() % 2 != 0) add(e.path, "map constructor with odd operand count");
                break;
            case IrKind::Access:
            case IrKind::Is:
            case IrKind::As:
            case IrKind::Inject:
            case IrKind::Extract:
                arity(e, 1);
                break;
            case IrKind::Eq:
            case IrKind::Neq:
                arity(e, 2);
                if (e.kids.size() == 2 && (!all_key(e.kids[0]->type) || !all_key(e.kids[1]->type))) {
                    add(e.path, "equality on non-key type " + e.kids[0]->type.str());
                }
                break;
            case IrKind::Assert:
                arity(e, 2);
                want_bool(e, 0);
                break;
            default:
                break;
        }
        for (const auto& k : e.kids) expr(*k, scope);
    }

    void recursion() {
        // A call edge that closes a cycle must connect recursive functions.
        std::function<bool(const std::string&, const std::string&, std::set<std::string>&)> reaches =
            [&](const std::string& from, const std::string& to, std::set<std::string>& seen) {
                if (!seen.insert(from).second) return false;
                for (const auto& c : calls_[from]) {
                    if (c == to || reaches(c, to, seen)) return true;
                }
                return false;
            };
        for (const auto& [caller, callees] : calls_) {
            for (const auto& callee : callees) {
                std::set<std::string> seen;
                if (callee != caller && !reaches(callee, caller, seen)) continue;
                auto a = p_.functions.find(caller);
                auto b = p_.functions.find(callee);
                if (a == p_.functions.end() || b == p_.functions.end()) continue;
                if (!a->second.is_recursive || !b->second.is_recursive) {
                    out_.push_back({caller, "", "call to " + callee + " is in a cycle of non-recursive functions"});
                }
            }
        }
    }
};

}  // namespace

std::vector<IrViolation> validate_ir(const IrProgram& p) { return Validator(p).run(); }

}  // namespace lx
