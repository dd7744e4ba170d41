#include "lx/verify.hpp"

#include <algorithm>
#include <atomic>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "lx/external.hpp"
#include "lx/regex.hpp"

namespace lx {

namespace {

struct Unsupported {
    std::string feature;
};

// ---------------------------------------------------------------- terms

bool all_digits(const std::string& s) {
    return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::optional<BigInt> int_lit(const std::string& t) {
    if (all_digits(t)) return BigInt(t);
    if (t.size() > 4 && t.rfind("(- ", 0) == 0 && t.back() == ')') {
        auto inner = t.substr(3, t.size() - 4);
        if (all_digits(inner)) return BigInt(-BigInt(inner));
    }
    return std::nullopt;
}

bool is_str_lit(const std::string& t) { return !t.empty() && t[0] == '"'; }

std::string t_not(const std::string& a) {
    if (a == "true") return "false";
    if (a == "false") return "true";
    if (a.rfind("(not ", 0) == 0) return a.substr(5, a.size() - 6);
    return "(not " + a + ")";
}

std::string t_nary(const char* op, const std::vector<std::string>& xs, const char* unit, const char* zero) {
    std::vector<std::string> keep;
    for (const auto& x : xs) {
        if (x == zero) return zero;
        if (x == unit) continue;
        if (std::find(keep.begin(), keep.end(), x) == keep.end()) keep.push_back(x);
    }
    if (keep.empty()) return unit;
    if (keep.size() == 1) return keep[0];
    std::string s = std::string("(") + op;
    for (const auto& k : keep) s += " " + k;
    return s + ")";
}

std::string t_and(const std::vector<std::string>& xs) { return t_nary("and", xs, "true", "false"); }
std::string t_or(const std::vector<std::string>& xs) { return t_nary("or", xs, "false", "true"); }

std::string t_eq(const std::string& a, const std::string& b) {
    if (a == b) return "true";
    auto x = int_lit(a), y = int_lit(b);
    if (x && y) return *x == *y ? "true" : "false";
    bool ba = a == "true" || a == "false", bb = b == "true" || b == "false";
    if (ba && bb) return "false";
    if (is_str_lit(a) && is_str_lit(b)) return "false";
    return "(= " + a + " " + b + ")";
}

std::string t_ite(const std::string& c, const std::string& a, const std::string& b) {
    if (c == "true" || a == b) return a;
    if (c == "false") return b;
    return "(ite " + c + " " + a + " " + b + ")";
}

std::string t_cmp(const char* op, const std::string& a, const std::string& b) {
    auto x = int_lit(a), y = int_lit(b);
    if (x && y) {
        std::string o = op;
        bool r = o == "<" ? *x < *y : o == "<=" ? *x <= *y : o == ">" ? *x > *y : *x >= *y;
        return r ? "true" : "false";
    }
    return std::string("(") + op + " " + a + " " + b + ")";
}

std::string t_arith(char op, const std::string& a, const std::string& b) {
    auto x = int_lit(a), y = int_lit(b);
    if (x && y) {
        switch (op) {
            case '+': return smt_int(*x + *y);
            case '-': return smt_int(*x - *y);
            case '*': return smt_int(*x * *y);
            case '/':
                if (*y != 0) return smt_int(*x / *y);
                break;
            case '%':
                if (*y != 0) return smt_int(*x % *y);
                break;
        }
    }
    switch (op) {
        case '+': return "(+ " + a + " " + b + ")";
        case '-': return "(- " + a + " " + b + ")";
        case '*': return "(* " + a + " " + b + ")";
        case '/':
            // Truncating division from the solver's Euclidean `div`.
            return "(ite (>= " + a + " 0) (ite (>= " + b + " 0) (div " + a + " " + b + ") (- (div " + a + " (- " + b +
                   ")))) (ite (>= " + b + " 0) (- (div (- " + a + ") " + b + ")) (div (- " + a + ") (- " + b + "))))";
        default: {
            std::string q = t_arith('/', a, b);
            return "(- " + a + " (* " + b + " " + q + "))";
        }
    }
}

const BigInt& int_min() {
    static const BigInt v(std::numeric_limits<std::int64_t>::min());
    return v;
}
const BigInt& int_max() {
    static const BigInt v(std::numeric_limits<std::int64_t>::max());
    return v;
}
const BigInt& nat_max() {
    static const BigInt v(std::numeric_limits<std::uint64_t>::max());
    return v;
}

// Definitions and declarations shared by every query of one program.
class Terms {
public:
    std::string def(const std::string& sort, const std::string& expr) {
        if (expr.find('(') == std::string::npos || int_lit(expr)) return expr;
        auto it = by_expr_.find(expr);
        if (it != by_expr_.end()) return it->second;
        std::string name = "t" + std::to_string(defs_.size());
        add({name, sort, expr, false});
        by_expr_[expr] = name;
        return name;
    }

    void declare(const std::string& name, const std::string& sort) { add({name, sort, "", true}); }

    // Declarations and definitions reachable from the roots, in creation order.
    std::string emit(const std::vector<std::string>& roots) const {
        std::vector<bool> need(defs_.size(), false);
        std::vector<std::size_t> work;
        auto scan = [&](const std::string& t) {
            std::size_t i = 0;
            while (i < t.size()) {
                if (t[i] == '"') {
                    ++i;
                    while (i < t.size()) {
                        if (t[i] == '"' && !(i + 1 < t.size() && t[i + 1] == '"')) break;
                        i += (t[i] == '"') ? 2 : 1;
                    }
                    ++i;
                    continue;
                }
                if (t[i] == '(' || t[i] == ')' || std::isspace(static_cast<unsigned char>(t[i]))) {
                    ++i;
                    continue;
                }
                std::size_t j = i;
                while (j < t.size() && t[j] != '(' && t[j] != ')' && !std::isspace(static_cast<unsigned char>(t[j]))) ++j;
                auto it = index_.find(t.substr(i, j - i));
                if (it != index_.end() && !need[it->second]) {
                    need[it->second] = true;
                    work.push_back(it->second);
                }
                i = j;
            }
        };
        for (const auto& r : roots) scan(r);
        while (!work.empty()) {
            auto k = work.back();
            work.pop_back();
            scan(defs_[k].expr);
        }
        std::string out;
        for (std::size_t k = 0; k < defs_.size(); ++k) {
            if (!need[k]) continue;
            const auto& d = defs_[k];
            if (d.is_const) {
                out += "(declare-const " + d.name + " " + d.sort + ")\n";
            } else {
                out += "(define-fun " + d.name + " () " + d.sort + " " + d.expr + ")\n";
            }
        }
        return out;
    }

private:
    struct Def {
        std::string name, sort, expr;
        bool is_const;
    };
    std::vector<Def> defs_;
    std::map<std::string, std::size_t> index_;
    std::map<std::string, std::string> by_expr_;

    void add(Def d) {
        index_[d.name] = defs_.size();
        defs_.push_back(std::move(d));
    }
};

// ---------------------------------------------------------------- symbolic values

struct Sym;
using SymP = std::shared_ptr<const Sym>;

// Mirrors a Value with solver terms at the leaves. A union carries an Int
// tag selecting one of its alternatives.
struct Sym {
    Type type;
    std::string term;  // scalar value; List/Map length
    std::vector<SymP> kids;
    std::string tag;
    std::vector<std::pair<int, SymP>> alts;

    bool is_union() const { return !tag.empty(); }
};

SymP mk(Type t, std::string term = "", std::vector<SymP> kids = {}) {
    auto s = std::make_shared<Sym>();
    s->type = std::move(t);
    s->term = std::move(term);
    s->kids = std::move(kids);
    return s;
}

const char* sort_of(const Type& t) {
    switch (t.kind()) {
        case TypeKind::Bool: return "Bool";
        case TypeKind::Nat:
        case TypeKind::Int:
        case TypeKind::BigNat:
        case TypeKind::BigInt: return "Int";
        case TypeKind::String:
        case TypeKind::StringOf: return "String";
        default: return nullptr;
    }
}

bool unsupported_kind(TypeKind k) {
    return k == TypeKind::Float || k == TypeKind::Decimal || k == TypeKind::Rational || k == TypeKind::ASCIIString;
}

[[noreturn]] void unsupported(const std::string& what) { throw Unsupported{what}; }

struct EnvNode;
using Env = std::shared_ptr<const EnvNode>;
struct EnvNode {
    std::string name;
    SymP val;
    Env next;
};

Env extend(Env e, const std::string& n, SymP v) { return std::make_shared<EnvNode>(EnvNode{n, std::move(v), std::move(e)}); }

struct State {
    std::vector<std::string> pc;
    int rec_depth = 0;
};

using K = std::function<void(State, SymP)>;

// Codes an integral arithmetic operation can raise, in evaluator order.
std::vector<ErrorCode> arith_codes(const std::string& op, TypeKind k) {
    std::vector<ErrorCode> out;
    bool div = op == "/" || op == "%";
    if (div) out.push_back(ErrorCode::DivZero);
    switch (k) {
        case TypeKind::Nat:
            if (op == "-") out.push_back(ErrorCode::NatUnderflow);
            if (op == "+" || op == "*") out.push_back(ErrorCode::Overflow);
            break;
        case TypeKind::Int:
            if (op == "+" || op == "-" || op == "*" || op == "/" || op == "neg") out.push_back(ErrorCode::Overflow);
            break;
        case TypeKind::BigNat:
            if (op == "-") out.push_back(ErrorCode::NatUnderflow);
            break;
        case TypeKind::Float:
        case TypeKind::Decimal:
            if (op != "neg" && op != "%") out.push_back(ErrorCode::Overflow);
            if (k == TypeKind::Decimal && op == "%") out.push_back(ErrorCode::Overflow);
            break;
        default: break;
    }
    return out;
}

bool is_arith(const std::string& op) { return op == "+" || op == "-" || op == "*" || op == "/" || op == "%" || op == "neg"; }

// ---------------------------------------------------------------- site enumeration

using SiteKey = std::pair<std::string, ErrorCode>;

struct SiteWalker {
    const IrProgram& p;
    const CheckConfig& cfg;
    std::vector<ErrorSite>& out;
    std::string fn;

    void add(const std::string& path, ErrorCode c, const SourcePos& pos) {
        ErrorSite s;
        s.function = fn;
        s.path = path;
        s.code = c;
        s.pos = pos;
        out.push_back(std::move(s));
    }

    void walk(const IrNode& e) {
        const auto& u = p.universe;
        switch (e.kind) {
            case IrKind::Prim:
                if (is_arith(e.name)) {
                    for (auto c : arith_codes(e.name, e.kids[0]->type.kind())) add(e.path, c, e.pos);
                }
                break;
            case IrKind::Functor:
                if (e.name == "get" || e.name == "slice") add(e.path, ErrorCode::IndexOutOfBounds, e.pos);
                if (!e.on_map && (e.name == "max" || e.name == "maxArg")) add(e.path, ErrorCode::EmptyCollection, e.pos);
                if (!e.on_map && (e.name == "sum" || e.name == "sumOf")) {
                    for (auto c : arith_codes("+", e.type.kind())) add(e.path, c, e.pos);
                }
                break;
            case IrKind::As:
                if (e.check) add(e.path, ErrorCode::CastFail, e.pos);
                break;
            case IrKind::Assert:
                if (cfg.enabled(e.level)) add(e.path, e.code, e.pos);
                break;
            case IrKind::Error: add(e.path, e.code, e.pos); break;
            case IrKind::Inject: {
                if (u.validator(e.name)) {
                    add(e.path, ErrorCode::RegexMismatch, e.pos);
                    break;
                }
                const auto* td = u.typedecl(e.name);
                if (td->base.kind() == TypeKind::StringOf && e.kids[0]->type.kind() == TypeKind::String) {
                    add(e.path, ErrorCode::RegexMismatch, e.pos);
                }
                for (std::size_t k = 0; k < td->invariants.size(); ++k) {
                    if (cfg.enabled(td->invariants[k].level)) {
                        add(e.path + "/inv" + std::to_string(k), ErrorCode::InvariantFail, td->invariants[k].pos);
                    }
                }
                break;
            }
            case IrKind::Entity:
                if (e.check && e.type.kind() == TypeKind::Nominal) {
                    auto invs = u.construction_invariants(e.type.name());
                    for (std::size_t k = 0; k < invs.size(); ++k) {
                        if (cfg.enabled(invs[k].level)) {
                            add(e.path + "/inv" + std::to_string(k), ErrorCode::InvariantFail, invs[k].pos);
                        }
                    }
                }
                break;
            case IrKind::Call: {
                const auto& g = p.functions.at(e.name);
                for (std::size_t i = 0; i < g.requires_.size(); ++i) {
                    if (cfg.enabled(g.requires_[i].level)) {
                        add(e.path + "/pre" + std::to_string(i), ErrorCode::PreconditionFail, g.requires_[i].pos);
                    }
                }
                break;
            }
            default: break;
        }
        for (const auto& k : e.kids) walk(*k);
    }
};

std::vector<CheckRef> enabled_checks(const std::vector<CheckRef>& all, const CheckConfig& cfg) {
    std::vector<CheckRef> out;
    for (const auto& c : all) {
        if (cfg.enabled(c.level)) out.push_back(c);
    }
    return out;
}

// Top-level validates of an ingested parameter, when it is an entity.
std::vector<CheckRef> ingest_validates(const IrProgram& p, const Type& t) {
    if (t.kind() != TypeKind::Nominal || !p.universe.is_entity(t.name())) return {};
    return p.universe.construction_validates(t.name());
}

}  // namespace

const char* verdict_name(VerdictKind k) {
    switch (k) {
        case VerdictKind::Witness: return "witness";
        case VerdictKind::NoWitness: return "no-witness-within-bounds";
        case VerdictKind::Timeout: return "solver-timeout";
        case VerdictKind::Unsupported: return "unsupported";
    }
    return "?";
}

std::size_t VerifyReport::count(VerdictKind k) const {
    return static_cast<std::size_t>(
        std::count_if(sites.begin(), sites.end(), [&](const SiteReport& r) { return r.verdict.kind == k; }));
}

std::vector<ErrorSite> enumerate_error_sites(const IrProgram& p, const CheckConfig& cfg, const std::set<std::string>& ingest) {
    std::vector<ErrorSite> out;
    for (const auto& [name, f] : p.functions) {
        SiteWalker w{p, cfg, out, name};
        if (ingest.count(name)) {
            for (std::size_t j = 0; j < f.params.size(); ++j) {
                auto vals = ingest_validates(p, f.params[j].second);
                for (std::size_t k = 0; k < vals.size(); ++k) {
                    if (cfg.enabled(vals[k].level)) {
                        w.add("arg" + std::to_string(j) + "/val" + std::to_string(k), ErrorCode::ValidateFail, vals[k].pos);
                    }
                }
            }
        }
        for (const auto& r : f.requires_) w.walk(*r.expr);
        w.walk(*f.body);
        for (std::size_t i = 0; i < f.ensures.size(); ++i) {
            w.walk(*f.ensures[i].expr);
            if (cfg.enabled(f.ensures[i].level)) w.add("e" + std::to_string(i), ErrorCode::PostconditionFail, f.ensures[i].pos);
        }
    }
    for (std::size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i + 1);
    return out;
}

namespace {

// ---------------------------------------------------------------- exploration

struct Leaf {
    std::string name;
    std::string sort;
};

struct EntryEncoding {
    std::string entry;
    std::vector<SymP> inputs;
    std::vector<std::string> assumptions;
    std::vector<Leaf> leaves;
    std::map<int, std::vector<std::string>> firings;  // site id -> path formulas
    std::optional<std::string> unsupported;
};

class Explorer {
public:
    Explorer(const IrProgram& p, const VerifyOptions& o, Terms& terms, const std::map<SiteKey, int>& sites)
        : p_(p), u_(p.universe), o_(o), terms_(terms), sites_(sites) {}

    EntryEncoding explore(const std::string& entry, int index) {
        EntryEncoding enc;
        enc.entry = entry;
        enc_ = &enc;
        paths_ = 0;
        const auto& f = p_.functions.at(entry);
        bool ingest = o_.ingest.count(entry) > 0;
        try {
            std::vector<std::vector<std::string>> own_validates(f.params.size());
            for (std::size_t j = 0; j < f.params.size(); ++j) {
                std::string name = "e" + std::to_string(index) + "_a" + std::to_string(j);
                enc.inputs.push_back(input(f.params[j].second, name, 0, enc.assumptions, enc.leaves, ingest,
                                           ingest ? &own_validates[j] : nullptr));
            }
            recording_ = true;
            call(entry, enc.inputs, "", State{}, [](State, SymP) {});
            if (ingest) {
                std::vector<std::string> all;
                for (const auto& v : own_validates) all.insert(all.end(), v.begin(), v.end());
                std::string valid = t_and(all);
                for (auto& [_, fs] : enc.firings) {
                    for (auto& fm : fs) fm = t_and({valid, fm});
                }
                for (std::size_t j = 0; j < f.params.size(); ++j) {
                    const auto& vs = own_validates[j];
                    for (std::size_t k = 0; k < vs.size(); ++k) {
                        auto it = sites_.find({site_name(entry, "arg" + std::to_string(j) + "/val" + std::to_string(k)),
                                               ErrorCode::ValidateFail});
                        if (it == sites_.end()) continue;
                        std::vector<std::string> parts;
                        for (std::size_t i = 0; i < f.params.size(); ++i) {
                            if (i != j) parts.insert(parts.end(), own_validates[i].begin(), own_validates[i].end());
                        }
                        parts.insert(parts.end(), vs.begin(), vs.begin() + static_cast<long>(k));
                        parts.push_back(t_not(vs[k]));
                        enc.firings[it->second].push_back(t_and(parts));
                    }
                }
            }
        } catch (const Unsupported& u) {
            enc.unsupported = u.feature;
            enc.firings.clear();
        }
        enc_ = nullptr;
        return enc;
    }

private:
    const IrProgram& p_;
    const TypeUniverse& u_;
    const VerifyOptions& o_;
    Terms& terms_;
    const std::map<SiteKey, int>& sites_;
    EntryEncoding* enc_ = nullptr;
    bool recording_ = true;
    std::size_t paths_ = 0;

    void count_path() {
        if (++paths_ > o_.path_limit) unsupported("path-limit");
    }

    // Records the site firing under the current path and continues on the
    // path where it does not fire. Returns false when no such path remains.
    bool fire(const std::string& site, ErrorCode code, State& st, const std::string& cond) {
        if (cond == "false") return true;
        if (recording_) {
            auto it = sites_.find({site, code});
            if (it == sites_.end()) throw std::logic_error(std::string("site not enumerated: ") + site + " " + error_code_name(code));
            auto parts = st.pc;
            parts.push_back(cond);
            enc_->firings[it->second].push_back(t_and(parts));
        }
        if (cond == "true") return false;
        st.pc.push_back(t_not(cond));
        return true;
    }

    void branch(const State& st, const std::string& c, const std::function<void(State)>& yes,
                const std::function<void(State)>& no) {
        if (c == "true") return yes(st);
        if (c == "false") return no(st);
        count_path();
        State a = st;
        a.pc.push_back(c);
        yes(a);
        State b = st;
        b.pc.push_back(t_not(c));
        no(b);
    }

    // Cases on the concrete length of a list or map.
    void with_len(const SymP& s, const State& st, const std::function<void(State, std::size_t)>& f) {
        if (auto n = int_lit(s->term)) return f(st, static_cast<std::size_t>(*n));
        for (std::size_t n = 0; n <= s->kids.size() / (s->type.kind() == TypeKind::Map ? 2 : 1); ++n) {
            count_path();
            State a = st;
            a.pc.push_back(t_eq(s->term, std::to_string(n)));
            f(a, n);
        }
    }

    std::string def(const char* sort, const std::string& e) { return terms_.def(sort, e); }
    SymP boolean(const std::string& t) { return mk(Type::boolean(), def("Bool", t)); }

    // ------------------------------------------------ inputs

    static bool has_nominal(const Type& t, const TypeUniverse& u, std::set<std::string>& seen) {
        switch (t.kind()) {
            case TypeKind::Nominal: return true;
            case TypeKind::Typedecl: return has_nominal(u.typedecl(t.name())->base, u, seen);
            default:
                for (const auto& a : t.args()) {
                    if (has_nominal(a, u, seen)) return true;
                }
                return false;
        }
    }

    bool flat_entity(const std::string& e) const {
        std::set<std::string> seen;
        for (const auto& f : u_.nominal(e)->fields) {
            if (has_nominal(f.type, u_, seen)) return false;
        }
        return true;
    }

    std::string declare(const std::string& name, const char* sort, std::vector<Leaf>& leaves) {
        terms_.declare(name, sort);
        leaves.push_back({name, sort});
        return name;
    }

    SymP input(const Type& t, const std::string& name, int depth, std::vector<std::string>& assume,
               std::vector<Leaf>& leaves, bool validates, std::vector<std::string>* own_validates = nullptr) {
        const auto& b = o_.bounds;
        switch (t.kind()) {
            case TypeKind::None: return mk(t);
            case TypeKind::Bool: return mk(t, declare(name, "Bool", leaves));
            case TypeKind::Nat:
            case TypeKind::Int:
            case TypeKind::BigNat:
            case TypeKind::BigInt: {
                auto x = declare(name, "Int", leaves);
                BigInt lo = t.kind() == TypeKind::Int ? int_min() : t.kind() == TypeKind::BigInt ? BigInt(-b.magnitude) : BigInt(0);
                BigInt hi = t.kind() == TypeKind::Nat ? nat_max() : t.kind() == TypeKind::Int ? int_max() : b.magnitude;
                assume.push_back("(<= " + smt_int(lo) + " " + x + " " + smt_int(hi) + ")");
                return mk(t, x);
            }
            case TypeKind::String:
            case TypeKind::StringOf: {
                auto x = declare(name, "String", leaves);
                assume.push_back("(<= (str.len " + x + ") " + std::to_string(b.string) + ")");
                assume.push_back("(str.in_re " + x + " (re.* (re.range \" \" \"~\")))");
                if (t.kind() == TypeKind::StringOf) assume.push_back("(str.in_re " + x + " " + regex_smt(t.name()) + ")");
                return mk(t, x);
            }
            case TypeKind::Typedecl: {
                const auto* td = u_.typedecl(t.name());
                auto base = input(td->base, name, depth, assume, leaves, validates);
                for (const auto& c : enabled_checks(td->invariants, o_.cfg)) assume.push_back(pure_call(c.function, {base}));
                return mk(t, "", {base});
            }
            case TypeKind::Tuple:
            case TypeKind::Record: {
                std::vector<SymP> kids;
                for (std::size_t i = 0; i < t.args().size(); ++i) {
                    kids.push_back(input(t.args()[i], name + "_" + std::to_string(i), depth, assume, leaves, validates));
                }
                return mk(t, "", std::move(kids));
            }
            case TypeKind::Ok:
            case TypeKind::Err: return mk(t, "", {input(t.args()[0], name + "_0", depth, assume, leaves, validates)});
            case TypeKind::List: {
                auto len = declare(name + "_len", "Int", leaves);
                assume.push_back("(<= 0 " + len + " " + std::to_string(b.list) + ")");
                std::vector<SymP> kids;
                for (int i = 0; i < b.list; ++i) {
                    std::vector<std::string> inner;
                    kids.push_back(input(t.args()[0], name + "_" + std::to_string(i), depth, inner, leaves, validates));
                    if (!inner.empty()) assume.push_back("(=> (< " + std::to_string(i) + " " + len + ") " + t_and(inner) + ")");
                }
                auto s = mk(t, len, std::move(kids));
                return s;
            }
            case TypeKind::Map: {
                auto len = declare(name + "_len", "Int", leaves);
                assume.push_back("(<= 0 " + len + " " + std::to_string(b.map) + ")");
                std::vector<SymP> kids;
                for (int i = 0; i < b.map; ++i) {
                    std::vector<std::string> inner;
                    kids.push_back(input(t.args()[0], name + "_k" + std::to_string(i), depth, inner, leaves, validates));
                    kids.push_back(input(t.args()[1], name + "_v" + std::to_string(i), depth, inner, leaves, validates));
                    if (!inner.empty()) assume.push_back("(=> (< " + std::to_string(i) + " " + len + ") " + t_and(inner) + ")");
                    if (i > 0) {
                        assume.push_back("(=> (< " + std::to_string(i) + " " + len + ") " +
                                         key_lt(kids[2 * (i - 1)], kids[2 * i]) + ")");
                    }
                }
                return mk(t, len, std::move(kids));
            }
            case TypeKind::Nominal:
                if (u_.is_entity(t.name())) {
                    std::vector<SymP> kids;
                    const auto* info = u_.nominal(t.name());
                    for (std::size_t i = 0; i < info->fields.size(); ++i) {
                        kids.push_back(input(info->fields[i].type, name + "_" + info->fields[i].name, depth + 1, assume,
                                             leaves, validates));
                    }
                    auto s = mk(t, "", std::move(kids));
                    for (const auto& c : enabled_checks(u_.construction_invariants(t.name()), o_.cfg)) {
                        assume.push_back(pure_call(c.function, field_args(c.function, s)));
                    }
                    if (validates) {
                        for (const auto& c : u_.construction_validates(t.name())) {
                            if (!o_.cfg.enabled(c.level)) {
                                // Keeps positions aligned with site numbering.
                                if (own_validates) own_validates->push_back("true");
                                continue;
                            }
                            auto v = pure_call(c.function, field_args(c.function, s));
                            (own_validates ? own_validates->push_back(v) : assume.push_back(v));
                        }
                    }
                    return s;
                }
                [[fallthrough]];
            case TypeKind::Union: {
                auto members = u_.concrete_members(t);
                if (depth >= o_.bounds.unroll) {
                    std::vector<Type> flat;
                    for (const auto& m : members) {
                        if (m.kind() != TypeKind::Nominal || flat_entity(m.name())) flat.push_back(m);
                    }
                    members = flat;
                }
                if (members.empty()) {
                    assume.push_back("false");
                    return mk(Type::none());
                }
                if (members.size() == 1) return input(members[0], name, depth, assume, leaves, validates);
                auto s = std::make_shared<Sym>();
                s->type = t;
                s->tag = declare(name + "_tag", "Int", leaves);
                assume.push_back("(<= 0 " + s->tag + " " + std::to_string(members.size() - 1) + ")");
                for (std::size_t i = 0; i < members.size(); ++i) {
                    std::vector<std::string> inner;
                    s->alts.emplace_back(static_cast<int>(i),
                                         input(members[i], name + "_" + std::to_string(i), depth, inner, leaves, validates));
                    if (!inner.empty()) assume.push_back("(=> (= " + s->tag + " " + std::to_string(i) + ") " + t_and(inner) + ")");
                }
                return s;
            }
            default: unsupported(type_kind_name(t.kind()));
        }
    }

    std::string regex_smt(const std::string& validator) {
        const auto* v = u_.validator(validator);
        auto re = Regex::parse(v->regex);
        if (!re) unsupported("regex " + v->regex);
        return re->to_smt();
    }

    std::string key_lt(const SymP& a, const SymP& b) {
        if (a->type.kind() == TypeKind::Typedecl) return key_lt(a->kids[0], b->kids[0]);
        switch (a->type.kind()) {
            case TypeKind::Bool: return "(and (not " + a->term + ") " + b->term + ")";
            case TypeKind::Nat:
            case TypeKind::Int:
            case TypeKind::BigNat:
            case TypeKind::BigInt: return "(< " + a->term + " " + b->term + ")";
            case TypeKind::String:
            case TypeKind::StringOf: return "(str.< " + a->term + " " + b->term + ")";
            default: unsupported("map key " + a->type.str());
        }
    }

    std::vector<SymP> field_args(const std::string& fn, const SymP& ent) {
        std::vector<SymP> args;
        for (const auto& [pn, _] : p_.functions.at(fn).params) args.push_back(field(ent, pn));
        return args;
    }

    // Formula for "the call returns true without error".
    std::string pure_call(const std::string& fn, std::vector<SymP> args) {
        bool saved = recording_;
        recording_ = false;
        std::vector<std::string> ok;
        call(fn, std::move(args), "", State{}, [&](State s, SymP r) {
            s.pc.push_back(r->term);
            ok.push_back(t_and(s.pc));
        });
        recording_ = saved;
        return t_or(ok);
    }

    // ------------------------------------------------ values

    SymP const_sym(const Value& v, const Type& t) {
        switch (v.kind()) {
            case ValueKind::None: return mk(Type::none());
            case ValueKind::Bool: return mk(Type::boolean(), v.as_bool() ? "true" : "false");
            case ValueKind::Nat: return mk(Type::nat(), std::to_string(v.as_nat()));
            case ValueKind::Int: return mk(Type::int_(), smt_int(BigInt(v.as_int())));
            case ValueKind::BigNat: return mk(Type::big_nat(), smt_int(v.as_big()));
            case ValueKind::BigInt: return mk(Type::big_int(), smt_int(v.as_big()));
            case ValueKind::String: return mk(Type::string(), smt_string_literal(v.as_string()));
            case ValueKind::StringOf: return mk(Type::string_of(v.name()), smt_string_literal(v.as_string()));
            case ValueKind::Typedecl: return mk(Type::typedecl(v.name()), "", {const_sym(v.base(), Type())});
            case ValueKind::Tuple:
            case ValueKind::Record:
            case ValueKind::Entity:
            case ValueKind::List: {
                std::vector<SymP> kids;
                for (const auto& x : v.items()) kids.push_back(const_sym(x, Type()));
                std::string len = v.kind() == ValueKind::List ? std::to_string(kids.size()) : "";
                return mk(v.type(), len, std::move(kids));
            }
            case ValueKind::Map: {
                std::vector<SymP> kids;
                for (std::size_t i = 0; i < v.map_size(); ++i) {
                    kids.push_back(const_sym(v.map_key(i), Type()));
                    kids.push_back(const_sym(v.map_value(i), Type()));
                }
                return mk(v.type(), std::to_string(v.map_size()), std::move(kids));
            }
            default: (void)t; unsupported(type_kind_name(value_type(v).kind()));
        }
    }

    std::string is_type(const SymP& v, const Type& t) {
        if (v->is_union()) {
            std::vector<std::string> xs;
            for (const auto& [i, a] : v->alts) {
                auto c = is_type(a, t);
                xs.push_back(t_and({t_eq(v->tag, std::to_string(i)), c}));
            }
            return t_or(xs);
        }
        return subtype(v->type, t, u_) ? "true" : "false";
    }

    SymP narrow(const SymP& v, const Type& t) {
        if (!v->is_union()) return subtype(v->type, t, u_) ? v : nullptr;
        auto s = std::make_shared<Sym>(*v);
        s->alts.clear();
        for (const auto& [i, a] : v->alts) {
            if (auto n = narrow(a, t)) s->alts.emplace_back(i, n);
        }
        if (s->alts.empty()) return nullptr;
        if (s->alts.size() == 1) return s->alts[0].second;
        return s;
    }

    std::string eq_term(const SymP& a, const SymP& b) {
        if (a->is_union()) {
            std::vector<std::string> xs;
            for (const auto& [i, x] : a->alts) xs.push_back(t_and({t_eq(a->tag, std::to_string(i)), eq_term(x, b)}));
            return t_or(xs);
        }
        if (b->is_union()) return eq_term(b, a);
        TypeKind ka = a->type.kind(), kb = b->type.kind();
        if (ka != kb) return "false";
        switch (ka) {
            case TypeKind::None: return "true";
            case TypeKind::Bool:
            case TypeKind::Nat:
            case TypeKind::Int:
            case TypeKind::BigNat:
            case TypeKind::BigInt:
            case TypeKind::String: return t_eq(a->term, b->term);
            case TypeKind::StringOf: return a->type.name() == b->type.name() ? t_eq(a->term, b->term) : "false";
            case TypeKind::Typedecl: return a->type.name() == b->type.name() ? eq_term(a->kids[0], b->kids[0]) : "false";
            case TypeKind::Tuple:
            case TypeKind::Record:
            case TypeKind::Nominal:
            case TypeKind::Ok:
            case TypeKind::Err: {
                if (a->type.str() != b->type.str()) return "false";
                std::vector<std::string> xs;
                for (std::size_t i = 0; i < a->kids.size(); ++i) xs.push_back(eq_term(a->kids[i], b->kids[i]));
                return t_and(xs);
            }
            default: unsupported("equality on " + a->type.str());
        }
    }

    std::string gt_term(const SymP& a, const SymP& b) {
        switch (a->type.kind()) {
            case TypeKind::Nat:
            case TypeKind::Int:
            case TypeKind::BigNat:
            case TypeKind::BigInt: return t_cmp(">", a->term, b->term);
            case TypeKind::String:
            case TypeKind::StringOf: return "(str.< " + b->term + " " + a->term + ")";
            default: unsupported("ordering on " + a->type.str());
        }
    }

    SymP field(const SymP& v, const std::string& name) {
        const Type& t = v->type;
        if (t.kind() == TypeKind::Record) {
            const auto& names = t.field_names();
            for (std::size_t i = 0; i < names.size(); ++i) {
                if (names[i] == name) return v->kids[i];
            }
        } else if (t.kind() == TypeKind::Ok || t.kind() == TypeKind::Err) {
            return v->kids.at(0);
        } else if (t.kind() == TypeKind::Nominal) {
            const auto* info = u_.nominal(t.name());
            for (std::size_t i = 0; i < info->fields.size(); ++i) {
                if (info->fields[i].name == name) return v->kids[i];
            }
        }
        throw std::logic_error("no field " + name + " on " + t.str());
    }

    void access(const IrNode& e, const SymP& v, const State& st, const K& k) {
        if (v->is_union()) {
            if (const char* sort = sort_of(e.type)) {
                // Scalar fields merge into one term.
                std::string t;
                for (std::size_t j = v->alts.size(); j-- > 0;) {
                    auto x = select(e, v->alts[j].second);
                    if (x->is_union()) unsupported("nested union access");
                    t = t.empty() ? x->term : t_ite(t_eq(v->tag, std::to_string(v->alts[j].first)), x->term, t);
                }
                return k(st, mk(e.type, def(sort, t)));
            }
            for (const auto& [i, a] : v->alts) {
                count_path();
                State s = st;
                s.pc.push_back(t_eq(v->tag, std::to_string(i)));
                access(e, a, s, k);
            }
            return;
        }
        k(st, select(e, v));
    }

    SymP select(const IrNode& e, const SymP& v) {
        if (v->is_union()) unsupported("nested union access");
        if (e.index >= 0) return v->kids.at(static_cast<std::size_t>(e.index));
        return field(v, e.name);
    }

    // ------------------------------------------------ evaluation

    static bool error_free(const IrNode& e) {
        switch (e.kind) {
            case IrKind::Const:
            case IrKind::Var:
            case IrKind::Is:
            case IrKind::Eq:
            case IrKind::Neq:
            case IrKind::And:
            case IrKind::Or:
            case IrKind::Implies:
            case IrKind::Extract:
            case IrKind::Access:
            case IrKind::Ite:
            case IrKind::Let:
            case IrKind::Tuple:
            case IrKind::Record:
                break;
            case IrKind::As:
                if (e.check) return false;
                break;
            case IrKind::Entity:
                if (e.check) return false;
                break;
            case IrKind::Prim:
                if (is_arith(e.name) || e.name == "concat") return e.name == "concat";
                break;
            default: return false;
        }
        for (const auto& k : e.kids) {
            if (!error_free(*k)) return false;
        }
        return true;
    }

    // Evaluates an error-free expression when it yields one value on the
    // current path without adding conditions.
    SymP try_pure(const IrNode& e, const IrFunction& fn, const Env& env, const State& st) {
        if (!error_free(e)) return nullptr;
        std::vector<SymP> got;
        bool extra = false;
        ex(e, fn, env, st, [&](State s, SymP v) {
            if (s.pc.size() != st.pc.size()) extra = true;
            got.push_back(std::move(v));
        });
        if (extra || got.size() != 1) return nullptr;
        return got[0];
    }

    void ex_all(const std::vector<IrPtr>& xs, std::size_t i, const IrFunction& fn, const Env& env, State st,
                std::vector<SymP> acc, const std::function<void(State, std::vector<SymP>)>& k) {
        if (i == xs.size()) return k(std::move(st), std::move(acc));
        ex(*xs[i], fn, env, std::move(st), [&, i, acc](State s, SymP v) mutable {
            auto next = acc;
            next.push_back(std::move(v));
            ex_all(xs, i + 1, fn, env, std::move(s), std::move(next), k);
        });
    }

    void ex(const IrNode& e, const IrFunction& fn, const Env& env, State st, const K& k) {
        std::string site = site_name(fn.name, e.path);
        switch (e.kind) {
            case IrKind::Const: return k(std::move(st), const_sym(e.value, e.type));
            case IrKind::Var:
                for (auto n = env; n; n = n->next) {
                    if (n->name == e.name) return k(std::move(st), n->val);
                }
                throw std::logic_error("unbound " + e.name);
            case IrKind::Let:
                return ex(*e.kids[0], fn, env, std::move(st), [&](State s, SymP v) {
                    ex(*e.kids[1], fn, extend(env, e.name, std::move(v)), std::move(s), k);
                });
            case IrKind::Ite:
                return ex(*e.kids[0], fn, env, std::move(st), [&](State s, SymP c) {
                    if (const char* sort = sort_of(e.type); sort && c->term != "true" && c->term != "false") {
                        auto a = try_pure(*e.kids[1], fn, env, s);
                        auto b = a ? try_pure(*e.kids[2], fn, env, s) : nullptr;
                        if (a && b && !a->is_union() && !b->is_union() && a->type == b->type) {
                            return k(s, mk(a->type, def(sort, t_ite(c->term, a->term, b->term))));
                        }
                    }
                    branch(s, c->term, [&](State y) { ex(*e.kids[1], fn, env, std::move(y), k); },
                           [&](State n) { ex(*e.kids[2], fn, env, std::move(n), k); });
                });
            case IrKind::And:
            case IrKind::Or:
            case IrKind::Implies:
                return ex(*e.kids[0], fn, env, std::move(st), [&](State s, SymP a) {
                    // The value when the left operand decides the result.
                    bool short_on = e.kind != IrKind::And;
                    const char* short_val = e.kind == IrKind::Or || e.kind == IrKind::Implies ? "true" : "false";
                    std::string lhs = e.kind == IrKind::Implies ? t_not(a->term) : a->term;
                    if (auto b = try_pure(*e.kids[1], fn, env, s)) {
                        std::string t = e.kind == IrKind::And ? t_and({lhs, b->term}) : t_or({lhs, b->term});
                        return k(s, boolean(t));
                    }
                    std::string decides = short_on ? lhs : t_not(lhs);
                    branch(s, decides, [&](State y) { k(std::move(y), mk(Type::boolean(), short_val)); },
                           [&](State n) { ex(*e.kids[1], fn, env, std::move(n), k); });
                });
            case IrKind::Call:
                return ex_all(e.kids, 0, fn, env, std::move(st), {}, [&, site](State s, std::vector<SymP> args) {
                    call(e.name, std::move(args), site, std::move(s), k);
                });
            case IrKind::Functor:
                return ex_all(e.kids, 0, fn, env, std::move(st), {}, [&, site](State s, std::vector<SymP> xs) {
                    std::vector<SymP> caps(xs.begin(), xs.begin() + e.ncaptures);
                    std::vector<SymP> args(xs.begin() + e.ncaptures, xs.end());
                    functor(e, caps, args, site, std::move(s), k);
                });
            case IrKind::Tuple:
            case IrKind::List:
                return ex_all(e.kids, 0, fn, env, std::move(st), {}, [&](State s, std::vector<SymP> xs) {
                    std::string len = e.kind == IrKind::List ? std::to_string(xs.size()) : "";
                    k(std::move(s), mk(e.type, len, std::move(xs)));
                });
            case IrKind::Record:
                return ex_all(e.kids, 0, fn, env, std::move(st), {}, [&](State s, std::vector<SymP> xs) {
                    std::vector<SymP> sorted;
                    for (const auto& n : e.type.field_names()) {
                        for (std::size_t i = 0; i < e.names.size(); ++i) {
                            if (e.names[i] == n) sorted.push_back(xs[i]);
                        }
                    }
                    k(std::move(s), mk(e.type, "", std::move(sorted)));
                });
            case IrKind::Entity:
                return ex_all(e.kids, 0, fn, env, std::move(st), {}, [&, site](State s, std::vector<SymP> xs) {
                    auto v = mk(e.type, "", std::move(xs));
                    if (!e.check || e.type.kind() != TypeKind::Nominal) return k(std::move(s), v);
                    construct(v, site, std::move(s), k);
                });
            case IrKind::Map: {
                std::vector<std::pair<Value, std::size_t>> keys;
                for (std::size_t i = 0; i + 1 < e.kids.size(); i += 2) {
                    if (e.kids[i]->kind != IrKind::Const) unsupported("map literal with computed keys");
                    keys.emplace_back(e.kids[i]->value, i);
                }
                return ex_all(e.kids, 0, fn, env, std::move(st), {}, [&, keys](State s, std::vector<SymP> xs) {
                    std::vector<std::pair<Value, std::size_t>> order;
                    for (const auto& [kv, i] : keys) {
                        auto it = std::find_if(order.begin(), order.end(),
                                               [&](const auto& o) { return value_equal(o.first, kv); });
                        if (it != order.end()) {
                            it->second = i;
                        } else {
                            order.emplace_back(kv, i);
                        }
                    }
                    std::stable_sort(order.begin(), order.end(),
                                     [](const auto& a, const auto& b) { return key_compare(a.first, b.first) < 0; });
                    std::vector<SymP> kids;
                    for (const auto& [_, i] : order) {
                        kids.push_back(xs[i]);
                        kids.push_back(xs[i + 1]);
                    }
                    k(std::move(s), mk(e.type, std::to_string(order.size()), std::move(kids)));
                });
            }
            case IrKind::Access:
                return ex(*e.kids[0], fn, env, std::move(st), [&](State s, SymP v) { access(e, v, s, k); });
            case IrKind::Is:
                return ex(*e.kids[0], fn, env, std::move(st),
                          [&](State s, SymP v) { k(std::move(s), boolean(is_type(v, e.test))); });
            case IrKind::As:
                return ex(*e.kids[0], fn, env, std::move(st), [&, site](State s, SymP v) {
                    if (e.check && !fire(site, ErrorCode::CastFail, s, t_not(is_type(v, e.test)))) return;
                    auto n = narrow(v, e.test);
                    if (!n) return;
                    k(std::move(s), n);
                });
            case IrKind::Inject:
                return ex(*e.kids[0], fn, env, std::move(st),
                          [&, site](State s, SymP v) { inject(e.name, v, site, std::move(s), k); });
            case IrKind::Extract:
                return ex(*e.kids[0], fn, env, std::move(st), [&](State s, SymP v) {
                    if (v->is_union()) unsupported("extract from a union");
                    if (v->type.kind() == TypeKind::StringOf) return k(std::move(s), mk(Type::string(), v->term));
                    k(std::move(s), v->kids.at(0));
                });
            case IrKind::Eq:
            case IrKind::Neq:
                return ex_all(e.kids, 0, fn, env, std::move(st), {}, [&](State s, std::vector<SymP> xs) {
                    auto t = eq_term(xs[0], xs[1]);
                    k(std::move(s), boolean(e.kind == IrKind::Eq ? t : t_not(t)));
                });
            case IrKind::Prim:
                return ex_all(e.kids, 0, fn, env, std::move(st), {},
                              [&, site](State s, std::vector<SymP> xs) { prim(e, xs, site, std::move(s), k); });
            case IrKind::Assert:
                if (!o_.cfg.enabled(e.level)) return ex(*e.kids[1], fn, env, std::move(st), k);
                return ex(*e.kids[0], fn, env, std::move(st), [&, site](State s, SymP c) {
                    if (!fire(site, e.code, s, t_not(c->term))) return;
                    ex(*e.kids[1], fn, env, std::move(s), k);
                });
            case IrKind::Error: fire(site, e.code, st, "true"); return;
        }
    }

    void call(const std::string& name, std::vector<SymP> args, const std::string& call_site, State st, const K& k) {
        const IrFunction& f = p_.functions.at(name);
        int saved = st.rec_depth;
        if (f.is_recursive && !is_generated_function(name)) {
            // Unrolling bound: deeper paths are assumed unreachable.
            if (st.rec_depth > o_.bounds.unroll) return;
            ++st.rec_depth;
        }
        Env env;
        for (std::size_t i = 0; i < f.params.size(); ++i) env = extend(env, f.params[i].first, args[i]);
        std::function<void(std::size_t, State)> pre = [&](std::size_t i, State s) {
            if (i == f.requires_.size()) {
                return ex(*f.body, f, env, std::move(s), [&](State s2, SymP r) {
                    Env with_ret = extend(env, "$return", r);
                    std::function<void(std::size_t, State)> post = [&](std::size_t j, State s3) {
                        if (j == f.ensures.size()) {
                            s3.rec_depth = saved;
                            return k(std::move(s3), r);
                        }
                        if (!o_.cfg.enabled(f.ensures[j].level)) return post(j + 1, std::move(s3));
                        ex(*f.ensures[j].expr, f, with_ret, std::move(s3), [&, j](State s4, SymP c) {
                            if (!fire(site_name(name, "e" + std::to_string(j)), ErrorCode::PostconditionFail, s4,
                                      t_not(c->term)))
                                return;
                            post(j + 1, std::move(s4));
                        });
                    };
                    post(0, std::move(s2));
                });
            }
            if (!o_.cfg.enabled(f.requires_[i].level)) return pre(i + 1, std::move(s));
            ex(*f.requires_[i].expr, f, env, std::move(s), [&, i](State s2, SymP c) {
                if (call_site.empty()) {
                    if (c->term == "false") return;
                    if (c->term != "true") s2.pc.push_back(c->term);
                } else if (!fire(call_site + "/pre" + std::to_string(i), ErrorCode::PreconditionFail, s2, t_not(c->term))) {
                    return;
                }
                pre(i + 1, std::move(s2));
            });
        };
        pre(0, std::move(st));
    }

    void run_checks(const std::vector<CheckRef>& all, const std::function<std::vector<SymP>(const CheckRef&)>& args,
                    const std::string& site, State st, const std::function<void(State)>& done) {
        std::function<void(std::size_t, State)> step = [&](std::size_t i, State s) {
            if (i == all.size()) return done(std::move(s));
            if (!o_.cfg.enabled(all[i].level)) return step(i + 1, std::move(s));
            call(all[i].function, args(all[i]), site, std::move(s), [&, i](State s2, SymP r) {
                if (!fire(site + "/inv" + std::to_string(i), ErrorCode::InvariantFail, s2, t_not(r->term))) return;
                step(i + 1, std::move(s2));
            });
        };
        step(0, std::move(st));
    }

    void construct(const SymP& v, const std::string& site, State st, const K& k) {
        run_checks(u_.construction_invariants(v->type.name()),
                   [&](const CheckRef& c) { return field_args(c.function, v); }, site, std::move(st),
                   [&](State s) { k(std::move(s), v); });
    }

    void inject(const std::string& name, const SymP& v, const std::string& site, State st, const K& k) {
        if (u_.validator(name)) {
            auto in = "(str.in_re " + v->term + " " + regex_smt(name) + ")";
            if (!fire(site, ErrorCode::RegexMismatch, st, t_not(in))) return;
            return k(std::move(st), mk(Type::string_of(name), v->term));
        }
        const auto* td = u_.typedecl(name);
        SymP base = v;
        if (td->base.kind() == TypeKind::StringOf && v->type.kind() == TypeKind::String) {
            auto in = "(str.in_re " + v->term + " " + regex_smt(td->base.name()) + ")";
            if (!fire(site, ErrorCode::RegexMismatch, st, t_not(in))) return;
            base = mk(td->base, v->term);
        }
        run_checks(td->invariants, [&](const CheckRef&) { return std::vector<SymP>{base}; }, site, std::move(st),
                   [&](State s) { k(std::move(s), mk(Type::typedecl(name), "", {base})); });
    }

    // Checked integral arithmetic with the evaluator's error order.
    void arith(const std::string& op, const SymP& a, const SymP& b, const Type& t, const std::string& site, State st,
               const K& k) {
        TypeKind kind = t.kind();
        if (kind != TypeKind::Nat && kind != TypeKind::Int && kind != TypeKind::BigNat && kind != TypeKind::BigInt) {
            unsupported(std::string("arithmetic on ") + type_kind_name(kind));
        }
        if (op == "/" || op == "%") {
            if (!fire(site, ErrorCode::DivZero, st, t_eq(b->term, "0"))) return;
        }
        std::string r = op == "neg" ? t_arith('-', "0", a->term) : t_arith(op[0], a->term, b->term);
        r = def("Int", r);
        for (auto c : arith_codes(op, kind)) {
            if (c == ErrorCode::DivZero) continue;
            std::string bad;
            if (c == ErrorCode::NatUnderflow) {
                bad = t_cmp("<", r, "0");
            } else if (kind == TypeKind::Nat) {
                bad = t_cmp(">", r, smt_int(nat_max()));
            } else {
                bad = t_or({t_cmp("<", r, smt_int(int_min())), t_cmp(">", r, smt_int(int_max()))});
            }
            if (!fire(site, c, st, bad)) return;
        }
        k(std::move(st), mk(t, r));
    }

    void prim(const IrNode& e, const std::vector<SymP>& xs, const std::string& site, State st, const K& k) {
        const std::string& op = e.name;
        if (op == "!") return k(std::move(st), boolean(t_not(xs[0]->term)));
        if (op == "concat") {
            std::vector<std::string> parts;
            for (const auto& x : xs) parts.push_back(x->term);
            std::string t = parts.size() == 1 ? parts[0] : "(str.++";
            if (parts.size() > 1) {
                for (const auto& p : parts) t += " " + p;
                t += ")";
            }
            return k(std::move(st), mk(Type::string(), def("String", t)));
        }
        if (op == "<" || op == "<=" || op == ">" || op == ">=") {
            const SymP& a = xs[0];
            const SymP& b = xs[1];
            if (unsupported_kind(a->type.kind())) unsupported(type_kind_name(a->type.kind()));
            if (sort_of(a->type) == std::string("String")) {
                bool swap = op[0] == '>';
                const SymP& l = swap ? b : a;
                const SymP& r = swap ? a : b;
                std::string f = op.size() == 2 ? "str.<=" : "str.<";
                return k(std::move(st), boolean("(" + f + " " + l->term + " " + r->term + ")"));
            }
            if (sort_of(a->type) != std::string("Int")) unsupported("ordering on " + a->type.str());
            return k(std::move(st), boolean(t_cmp(op.c_str(), a->term, b->term)));
        }
        if (is_arith(op)) {
            if (unsupported_kind(xs[0]->type.kind())) unsupported(type_kind_name(xs[0]->type.kind()));
            return arith(op, xs[0], op == "neg" ? xs[0] : xs[1], xs[0]->type, site, std::move(st), k);
        }
        throw std::logic_error("unknown primitive " + op);
    }

    // ------------------------------------------------ functors

    using Ks = std::function<void(State, std::vector<SymP>)>;

    void map_each(const std::vector<SymP>& xs, std::size_t i, std::vector<SymP> acc, State st,
                  const std::function<void(const SymP&, State, const K&)>& f, const Ks& k) {
        if (i == xs.size()) return k(std::move(st), std::move(acc));
        f(xs[i], std::move(st), [&, i, acc](State s, SymP v) mutable {
            auto next = acc;
            next.push_back(std::move(v));
            map_each(xs, i + 1, std::move(next), std::move(s), f, k);
        });
    }

    void functor(const IrNode& e, const std::vector<SymP>& caps, const std::vector<SymP>& args, const std::string& site,
                 State st, const K& k) {
        auto spec = [&](std::vector<SymP> xs, State s, const K& kk) {
            std::vector<SymP> all = caps;
            all.insert(all.end(), xs.begin(), xs.end());
            call(e.spec, std::move(all), site, std::move(s), kk);
        };
        const std::string& name = e.name;
        const Type& rt = e.type;
        const SymP& c = args.at(0);
        if (e.on_map) {
            if (name == "size") return k(std::move(st), mk(Type::nat(), c->term));
            return with_len(c, st, [&](State s, std::size_t n) {
                if (name == "has" || name == "get") {
                    std::vector<std::string> hits;
                    for (std::size_t i = 0; i < n; ++i) hits.push_back(eq_term(c->kids[2 * i], args[1]));
                    if (name == "has") return k(std::move(s), boolean(t_or(hits)));
                    if (!fire(site, ErrorCode::IndexOutOfBounds, s, t_not(t_or(hits)))) return;
                    for (std::size_t i = 0; i < n; ++i) {
                        if (hits[i] == "false") continue;
                        count_path();
                        State a = s;
                        if (hits[i] != "true") a.pc.push_back(hits[i]);
                        k(std::move(a), c->kids[2 * i + 1]);
                    }
                    return;
                }
                // map / filter over entries in key order.
                std::vector<std::size_t> idx(n);
                for (std::size_t i = 0; i < n; ++i) idx[i] = i;
                std::function<void(std::size_t, State, std::vector<SymP>)> step = [&](std::size_t i, State s2,
                                                                                      std::vector<SymP> out) {
                    if (i == n) {
                        std::string len = std::to_string(out.size() / 2);
                        return k(std::move(s2), mk(rt, len, std::move(out)));
                    }
                    spec({c->kids[2 * i], c->kids[2 * i + 1]}, std::move(s2), [&, i, out](State s3, SymP r) {
                        if (name == "map") {
                            auto o = out;
                            o.push_back(c->kids[2 * i]);
                            o.push_back(r);
                            return step(i + 1, std::move(s3), std::move(o));
                        }
                        branch(s3, r->term,
                               [&](State y) {
                                   auto o = out;
                                   o.push_back(c->kids[2 * i]);
                                   o.push_back(c->kids[2 * i + 1]);
                                   step(i + 1, std::move(y), std::move(o));
                               },
                               [&](State no) { step(i + 1, std::move(no), out); });
                    });
                };
                step(0, std::move(s), {});
            });
        }

        if (name == "size") return k(std::move(st), mk(Type::nat(), c->term));
        with_len(c, st, [&](State s, std::size_t n) {
            std::vector<SymP> xs(c->kids.begin(), c->kids.begin() + static_cast<long>(n));
            list_functor(e, name, rt, xs, args, site, std::move(s), spec, k);
        });
    }

    using Spec = std::function<void(std::vector<SymP>, State, const K&)>;

    void list_functor(const IrNode& e, const std::string& name, const Type& rt, const std::vector<SymP>& xs,
                      const std::vector<SymP>& args, const std::string& site, State st, const Spec& spec, const K& k) {
        std::size_t n = xs.size();
        auto list = [&](std::vector<SymP> items) {
            std::string len = std::to_string(items.size());
            return mk(rt, len, std::move(items));
        };
        if (name == "get") {
            const std::string& i = args[1]->term;
            if (!fire(site, ErrorCode::IndexOutOfBounds, st, t_cmp(">=", i, std::to_string(n)))) return;
            for (std::size_t j = 0; j < n; ++j) {
                std::string c = t_eq(i, std::to_string(j));
                if (c == "false") continue;
                count_path();
                State a = st;
                if (c != "true") a.pc.push_back(c);
                k(std::move(a), xs[j]);
            }
            return;
        }
        if (name == "slice") {
            const std::string& i = args[1]->term;
            const std::string& j = args[2]->term;
            std::string bad = t_or({t_cmp(">", i, j), t_cmp(">", j, std::to_string(n))});
            if (!fire(site, ErrorCode::IndexOutOfBounds, st, bad)) return;
            for (std::size_t a = 0; a <= n; ++a) {
                for (std::size_t b = a; b <= n; ++b) {
                    std::string c = t_and({t_eq(i, std::to_string(a)), t_eq(j, std::to_string(b))});
                    if (c == "false") continue;
                    count_path();
                    State s = st;
                    if (c != "true") s.pc.push_back(c);
                    k(std::move(s), list(std::vector<SymP>(xs.begin() + static_cast<long>(a), xs.begin() + static_cast<long>(b))));
                }
            }
            return;
        }
        if (name == "concat" || name == "zip") {
            return with_len(args[1], st, [&](State s, std::size_t m) {
                std::vector<SymP> out;
                if (name == "concat") {
                    out = xs;
                    out.insert(out.end(), args[1]->kids.begin(), args[1]->kids.begin() + static_cast<long>(m));
                } else {
                    Type pt = rt.args().at(0);
                    for (std::size_t i = 0; i < std::min(n, m); ++i) out.push_back(mk(pt, "", {xs[i], args[1]->kids[i]}));
                }
                k(std::move(s), list(std::move(out)));
            });
        }
        if (name == "pushBack") {
            auto out = xs;
            out.push_back(args[1]);
            return k(std::move(st), list(std::move(out)));
        }
        if (name == "contains") {
            std::vector<std::string> hits;
            for (const auto& x : xs) hits.push_back(eq_term(x, args[1]));
            return k(std::move(st), boolean(t_or(hits)));
        }
        if (name == "map") {
            return map_each(xs, 0, {}, std::move(st), [&](const SymP& x, State s, const K& kk) { spec({x}, std::move(s), kk); },
                            [&](State s, std::vector<SymP> out) { k(std::move(s), list(std::move(out))); });
        }
        if (name == "count") {
            return map_each(xs, 0, {}, std::move(st), [&](const SymP& x, State s, const K& kk) { spec({x}, std::move(s), kk); },
                            [&](State s, std::vector<SymP> bs) {
                                std::string t = "0";
                                for (const auto& b : bs) t = t_arith('+', t, t_ite(b->term, "1", "0"));
                                k(std::move(s), mk(Type::nat(), def("Int", t)));
                            });
        }
        if (name == "filter") {
            std::function<void(std::size_t, State, std::vector<SymP>)> step = [&](std::size_t i, State s, std::vector<SymP> out) {
                if (i == n) return k(std::move(s), list(std::move(out)));
                spec({xs[i]}, std::move(s), [&, i, out](State s2, SymP r) {
                    branch(s2, r->term,
                           [&](State y) {
                               auto o = out;
                               o.push_back(xs[i]);
                               step(i + 1, std::move(y), std::move(o));
                           },
                           [&](State no) { step(i + 1, std::move(no), out); });
                });
            };
            return step(0, std::move(st), {});
        }
        if (name == "join") {
            const SymP& other = args[1];
            return with_len(other, st, [&](State s0, std::size_t m) {
                Type pt = rt.args().at(0);
                std::function<void(std::size_t, State, std::vector<SymP>)> step = [&](std::size_t q, State s,
                                                                                      std::vector<SymP> out) {
                    if (q == n * m) return k(std::move(s), list(std::move(out)));
                    const SymP& x = xs[q / m];
                    const SymP& y = other->kids[q % m];
                    spec({x, y}, std::move(s), [&, q, out, x, y](State s2, SymP r) {
                        branch(s2, r->term,
                               [&](State yes) {
                                   auto o = out;
                                   o.push_back(mk(pt, "", {x, y}));
                                   step(q + 1, std::move(yes), std::move(o));
                               },
                               [&](State no) { step(q + 1, std::move(no), out); });
                    });
                };
                step(0, std::move(s0), {});
            });
        }
        if (name == "has" || name == "allOf" || name == "find") {
            // Stops at the first deciding element.
            std::function<void(std::size_t, State)> step = [&](std::size_t i, State s) {
                if (i == n) {
                    if (name == "find") return k(std::move(s), mk(Type::none()));
                    return k(std::move(s), mk(Type::boolean(), name == "allOf" ? "true" : "false"));
                }
                spec({xs[i]}, std::move(s), [&, i](State s2, SymP r) {
                    std::string stop = name == "allOf" ? t_not(r->term) : r->term;
                    branch(s2, stop,
                           [&](State y) {
                               if (name == "find") return k(std::move(y), xs[i]);
                               k(std::move(y), mk(Type::boolean(), name == "allOf" ? "false" : "true"));
                           },
                           [&](State no) { step(i + 1, std::move(no)); });
                });
            };
            return step(0, std::move(st));
        }
        if (name == "unique") {
            std::vector<std::pair<std::size_t, std::size_t>> pairs;
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(i, j);
            }
            std::function<void(std::size_t, State)> step = [&](std::size_t q, State s) {
                if (q == pairs.size()) return k(std::move(s), mk(Type::boolean(), "true"));
                spec({xs[pairs[q].first], xs[pairs[q].second]}, std::move(s), [&, q](State s2, SymP r) {
                    branch(s2, r->term, [&](State y) { step(q + 1, std::move(y)); },
                           [&](State no) { k(std::move(no), mk(Type::boolean(), "false")); });
                });
            };
            return step(0, std::move(st));
        }
        if (name == "reduce") {
            std::function<void(std::size_t, State, SymP)> step = [&](std::size_t i, State s, SymP acc) {
                if (i == n) return k(std::move(s), acc);
                spec({acc, xs[i]}, std::move(s), [&, i](State s2, SymP r) { step(i + 1, std::move(s2), r); });
            };
            return step(0, std::move(st), args[1]);
        }
        if (name == "sum" || name == "sumOf") {
            if (unsupported_kind(rt.kind())) unsupported(type_kind_name(rt.kind()));
            std::function<void(std::size_t, State, SymP)> step = [&](std::size_t i, State s, SymP acc) {
                if (i == n) return k(std::move(s), acc);
                auto add = [&, i, acc](State s2, SymP x) {
                    arith("+", acc, x, rt, site, std::move(s2), [&, i](State s3, SymP r) { step(i + 1, std::move(s3), r); });
                };
                if (name == "sum") return add(std::move(s), xs[i]);
                spec({xs[i]}, std::move(s), add);
            };
            return step(0, std::move(st), mk(rt, "0"));
        }
        if (name == "max" || name == "maxArg") {
            if (n == 0) {
                fire(site, ErrorCode::EmptyCollection, st, "true");
                return;
            }
            auto key = [&](std::size_t i, State s, const K& kk) {
                if (name == "max") return kk(std::move(s), xs[i]);
                spec({xs[i]}, std::move(s), kk);
            };
            std::function<void(std::size_t, State, std::size_t, SymP)> step = [&](std::size_t i, State s, std::size_t best,
                                                                                  SymP best_key) {
                if (i == n) return k(std::move(s), xs[best]);
                key(i, std::move(s), [&, i, best, best_key](State s2, SymP kv) {
                    branch(s2, gt_term(kv, best_key), [&](State y) { step(i + 1, std::move(y), i, kv); },
                           [&](State no) { step(i + 1, std::move(no), best, best_key); });
                });
            };
            return key(0, std::move(st), [&](State s, SymP k0) { step(1, std::move(s), 0, k0); });
        }
        (void)e;
        throw std::logic_error("unknown list functor " + name);
    }
};

// ---------------------------------------------------------------- decoding

using Model = std::map<std::string, SExpr>;

const SExpr& model_value(const Model& m, const std::string& term) {
    auto it = m.find(term);
    if (it == m.end()) throw std::runtime_error("model has no value for " + term);
    return it->second;
}

BigInt model_int(const Model& m, const std::string& term) {
    if (auto v = int_lit(term)) return *v;
    auto v = sexpr_int(model_value(m, term));
    if (!v) throw std::runtime_error("non-integer model value for " + term);
    return *v;
}

Value decode(const SymP& s, const Model& m) {
    if (s->is_union()) {
        auto tag = model_int(m, s->tag);
        for (const auto& [i, a] : s->alts) {
            if (BigInt(i) == tag) return decode(a, m);
        }
        throw std::runtime_error("model tag out of range");
    }
    const Type& t = s->type;
    switch (t.kind()) {
        case TypeKind::None: return Value::none();
        case TypeKind::Bool: {
            if (s->term == "true" || s->term == "false") return Value::boolean(s->term == "true");
            return Value::boolean(model_value(m, s->term).atom == "true");
        }
        case TypeKind::Nat: return Value::nat(static_cast<std::uint64_t>(model_int(m, s->term)));
        case TypeKind::Int: return Value::int_(static_cast<std::int64_t>(model_int(m, s->term)));
        case TypeKind::BigNat: return Value::big_nat(model_int(m, s->term));
        case TypeKind::BigInt: return Value::big_int(model_int(m, s->term));
        case TypeKind::String:
        case TypeKind::StringOf: {
            const auto& v = model_value(m, s->term);
            if (!v.is_string) throw std::runtime_error("non-string model value for " + s->term);
            return t.kind() == TypeKind::String ? Value::string(v.atom) : Value::string_of(t.name(), v.atom);
        }
        case TypeKind::Typedecl: return Value::typedecl(t.name(), decode(s->kids[0], m));
        case TypeKind::Tuple:
        case TypeKind::Record:
        case TypeKind::Nominal:
        case TypeKind::Ok:
        case TypeKind::Err: {
            std::vector<Value> xs;
            for (const auto& k : s->kids) xs.push_back(decode(k, m));
            if (t.kind() == TypeKind::Tuple) return Value::tuple(t, xs);
            if (t.kind() == TypeKind::Record) return Value::record(t, xs);
            return Value::entity(t, xs);
        }
        case TypeKind::List: {
            auto n = static_cast<std::size_t>(model_int(m, s->term));
            std::vector<Value> xs;
            for (std::size_t i = 0; i < n; ++i) xs.push_back(decode(s->kids.at(i), m));
            return Value::list(t, xs);
        }
        case TypeKind::Map: {
            auto n = static_cast<std::size_t>(model_int(m, s->term));
            std::vector<std::pair<Value, Value>> es;
            for (std::size_t i = 0; i < n; ++i) es.emplace_back(decode(s->kids.at(2 * i), m), decode(s->kids.at(2 * i + 1), m));
            return Value::map(t, es);
        }
        default: throw std::runtime_error("cannot decode " + t.str());
    }
}

// ---------------------------------------------------------------- driver

struct Session {
    const IrProgram& p;
    const VerifyOptions& o;
    std::vector<ErrorSite> sites;
    std::map<SiteKey, int> index;
    Terms terms;
    std::vector<EntryEncoding> entries;
    std::map<std::string, std::set<std::string>> reach;  // entry -> functions reachable

    Session(const IrProgram& prog, const VerifyOptions& opts) : p(prog), o(opts) {
        sites = enumerate_error_sites(p, o.cfg, o.ingest);
        for (const auto& s : sites) index[{s.name(), s.code}] = s.id;
        run_with_large_stack([&]() {
            Explorer ex(p, o, terms, index);
            for (std::size_t i = 0; i < p.entries.size(); ++i) entries.push_back(ex.explore(p.entries[i], static_cast<int>(i)));
        });
        for (const auto& e : p.entries) reach[e] = reachable(e);
    }

    std::set<std::string> reachable(const std::string& entry) const {
        std::set<std::string> seen{entry};
        std::vector<std::string> work{entry};
        auto visit = [&](const std::string& f) {
            if (p.functions.count(f) && seen.insert(f).second) work.push_back(f);
        };
        std::function<void(const IrNode&)> walk = [&](const IrNode& e) {
            if (e.kind == IrKind::Call) visit(e.name);
            if (e.kind == IrKind::Functor && !e.spec.empty()) visit(e.spec);
            if (e.kind == IrKind::Entity && e.check && e.type.kind() == TypeKind::Nominal) {
                for (const auto& c : p.universe.construction_invariants(e.type.name())) visit(c.function);
            }
            if (e.kind == IrKind::Inject) {
                if (const auto* td = p.universe.typedecl(e.name)) {
                    for (const auto& c : td->invariants) visit(c.function);
                }
            }
            for (const auto& k : e.kids) walk(*k);
        };
        while (!work.empty()) {
            auto f = work.back();
            work.pop_back();
            const auto& fn = p.functions.at(f);
            for (const auto& r : fn.requires_) walk(*r.expr);
            walk(*fn.body);
            for (const auto& r : fn.ensures) walk(*r.expr);
        }
        return seen;
    }

    // Entries whose exploration reached the site.
    std::vector<std::size_t> involved(int id) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            auto it = entries[i].firings.find(id);
            if (it != entries[i].firings.end() && !it->second.empty()) out.push_back(i);
        }
        return out;
    }

    std::string script(const ErrorSite& site) const {
        auto ids = involved(site.id);
        std::vector<std::string> roots, asserts, values;
        bool selector = ids.size() > 1;
        std::vector<std::string> choices;
        for (auto i : ids) {
            const auto& enc = entries[i];
            std::string guard = selector ? "(= sel " + std::to_string(i) + ")" : "";
            auto wrap = [&](const std::string& f) { return selector ? "(=> " + guard + " " + f + ")" : f; };
            std::string assume = t_and(enc.assumptions);
            std::string fire = t_or(enc.firings.at(site.id));
            roots.push_back(assume);
            roots.push_back(fire);
            if (assume != "true") asserts.push_back(wrap(assume));
            asserts.push_back(wrap(fire));
            if (selector) choices.push_back(guard);
            for (const auto& l : enc.leaves) {
                values.push_back(l.name);
                roots.push_back(l.name);
            }
        }
        std::string out = "; site " + std::to_string(site.id) + " " + site.name() + " " + error_code_name(site.code) + "\n";
        out += "(set-logic ALL)\n(set-option :produce-models true)\n";
        if (selector) out += "(declare-const sel Int)\n";
        out += terms.emit(roots);
        if (ids.empty()) asserts.push_back("false");
        for (const auto& a : asserts) out += "(assert " + a + ")\n";
        if (selector) out += "(assert " + t_or(choices) + ")\n";
        out += "(check-sat)\n";
        if (selector) values.insert(values.begin(), "sel");
        if (!values.empty()) {
            out += "(get-value (";
            for (std::size_t i = 0; i < values.size(); ++i) out += (i ? " " : "") + values[i];
            out += "))\n";
        }
        return out;
    }

    SiteVerdict solve(const ErrorSite& site) const {
        SiteVerdict v;
        auto ids = involved(site.id);
        std::string unsupported_feature;
        for (std::size_t i = 0; i < entries.size(); ++i) {
            if (entries[i].unsupported && reach.at(entries[i].entry).count(site.function)) {
                unsupported_feature = *entries[i].unsupported;
                break;
            }
        }
        std::string text = script(site);
        if (!o.dump_dir.empty()) {
            std::ofstream(std::filesystem::path(o.dump_dir) / ("site_" + std::to_string(site.id) + ".smt2")) << text;
        }
        auto fallback = [&]() {
            if (!unsupported_feature.empty()) {
                v.kind = VerdictKind::Unsupported;
                v.feature = unsupported_feature;
            }
            return v;
        };
        if (ids.empty()) return fallback();
        auto res = invoke_solver(o.solver, text, o.timeout_seconds);
        switch (res.status) {
            case SolverResult::Status::Unsat: return fallback();
            case SolverResult::Status::Timeout:
            case SolverResult::Status::Unknown:
                v.kind = VerdictKind::Timeout;
                v.note = solver_status_name(res.status);
                return v;
            case SolverResult::Status::Error:
                if (res.diagnostics.find("not found") != std::string::npos ||
                    res.diagnostics.find("cannot start") != std::string::npos) {
                    throw SolverMissing(res.diagnostics);
                }
                v.kind = VerdictKind::Timeout;
                v.note = res.diagnostics;
                return v;
            case SolverResult::Status::Sat: break;
        }
        try {
            auto body = res.output.substr(res.output.find('\n') + 1);
            auto exprs = parse_sexprs(body);
            Model m;
            if (!exprs.empty()) {
                for (const auto& pair : exprs[0].items) {
                    if (pair.is_list && pair.items.size() == 2) m[pair.items[0].atom] = pair.items[1];
                }
            }
            std::size_t chosen = ids[0];
            if (ids.size() > 1) chosen = static_cast<std::size_t>(model_int(m, "sel"));
            const auto& enc = entries.at(chosen);
            Counterexample cx;
            cx.entry = enc.entry;
            cx.site = site.id;
            for (const auto& in : enc.inputs) cx.args.push_back(decode(in, m));
            Outcome actual;
            if (confirm_witness(p, site, cx, o, &actual)) {
                v.kind = VerdictKind::Witness;
                v.witness = cx;
                return v;
            }
            std::string shown;
            for (const auto& a : cx.args) shown += (shown.empty() ? "" : ", ") + to_string(a);
            v.kind = VerdictKind::Unsupported;
            v.feature = "unconfirmed-model";
            v.note = "model " + cx.entry + "(" + shown + ") gave " + outcome_str(actual);
        } catch (const std::exception& e) {
            v.kind = VerdictKind::Unsupported;
            v.feature = "undecodable-model";
            v.note = e.what();
        }
        return v;
    }
};

}  // namespace

std::string encode_site(const IrProgram& p, const ErrorSite& site, const VerifyOptions& opts) {
    Session s(p, opts);
    for (const auto& x : s.sites) {
        if (x.name() == site.name() && x.code == site.code) return s.script(x);
    }
    throw std::invalid_argument("unknown site " + site.name());
}

bool confirm_witness(const IrProgram& p, const ErrorSite& site, const Counterexample& cx, const VerifyOptions& opts,
                     Outcome* actual) {
    bool ingest = opts.ingest.count(cx.entry) > 0;
    Evaluator ev(p, opts.cfg);
    const auto& f = p.functions.at(cx.entry);
    if (cx.args.size() != f.params.size()) return false;
    std::optional<std::size_t> val_arg;
    std::string val_suffix;
    if (site.code == ErrorCode::ValidateFail && site.path.rfind("arg", 0) == 0) {
        auto slash = site.path.find('/');
        val_arg = std::stoul(site.path.substr(3, slash - 3));
        val_suffix = site.path.substr(slash);
    }
    for (std::size_t j = 0; j < cx.args.size(); ++j) {
        if (!value_has_type(cx.args[j], f.params[j].second, p.universe)) return false;
        Outcome c = ev.check_value(cx.args[j], ingest);
        if (val_arg && *val_arg == j) {
            if (actual) *actual = c;
            std::string want = f.params[j].second.name() + ":$" + val_suffix;
            if (!(c.error && c.error->code == ErrorCode::ValidateFail && c.error->site == want)) return false;
        } else if (!c.ok()) {
            if (actual) *actual = c;
            return false;
        }
    }
    if (val_arg) return true;
    Outcome o = ev.call(cx.entry, cx.args);
    if (actual) *actual = o;
    return o.error && o.error->code == site.code && o.error->site == site.name();
}

VerifyReport verify_program(const IrProgram& p, const VerifyOptions& opts) {
    VerifyReport report;
    if (!opts.dump_dir.empty()) std::filesystem::create_directories(opts.dump_dir);
    Session session(p, opts);
    std::vector<std::size_t> chosen;
    for (std::size_t i = 0; i < session.sites.size(); ++i) {
        if (!opts.site_filter || opts.site_filter(session.sites[i])) chosen.push_back(i);
    }
    report.sites.resize(chosen.size());
    std::atomic<std::size_t> next{0};
    std::mutex err_mu;
    std::optional<std::string> missing;
    auto worker = [&]() {
        while (true) {
            std::size_t i = next++;
            if (i >= chosen.size()) return;
            const auto& site = session.sites[chosen[i]];
            report.sites[i].site = site;
            try {
                report.sites[i].verdict = session.solve(site);
            } catch (const SolverMissing& e) {
                std::lock_guard<std::mutex> lock(err_mu);
                missing = e.what();
                next = chosen.size();
            }
        }
    };
    int jobs = std::max(1, opts.jobs);
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int j = 0; j < jobs; ++j) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (missing) throw SolverMissing(*missing);
    return report;
}

namespace {

std::string pos_str(const SourcePos& p) { return p.file + ":" + std::to_string(p.line) + ":" + std::to_string(p.column); }

std::string call_str(const Counterexample& cx) {
    std::string s = cx.entry + "(";
    for (std::size_t i = 0; i < cx.args.size(); ++i) s += (i ? ", " : "") + to_string(cx.args[i]);
    return s + ")";
}

}  // namespace

std::string report_text(const IrProgram& p, const VerifyReport& r) {
    (void)p;
    std::string out;
    for (const auto& s : r.sites) {
        out += "site " + std::to_string(s.site.id) + " " + s.site.name() + " " + error_code_name(s.site.code) + " (" +
               pos_str(s.site.pos) + "): " + verdict_name(s.verdict.kind);
        if (s.verdict.kind == VerdictKind::Witness) out += " " + call_str(*s.verdict.witness);
        if (s.verdict.kind == VerdictKind::Unsupported) out += " (" + s.verdict.feature + ")";
        out += "\n";
    }
    out += std::to_string(r.sites.size()) + " sites: " + std::to_string(r.count(VerdictKind::Witness)) + " witness, " +
           std::to_string(r.count(VerdictKind::NoWitness)) + " no-witness, " + std::to_string(r.count(VerdictKind::Timeout)) +
           " timeout, " + std::to_string(r.count(VerdictKind::Unsupported)) + " unsupported\n";
    return out;
}

nlohmann::json report_json(const IrProgram& p, const VerifyReport& r) {
    nlohmann::json sites = nlohmann::json::array();
    for (const auto& s : r.sites) {
        nlohmann::json j;
        j["id"] = s.site.id;
        j["function"] = s.site.function;
        j["site"] = s.site.name();
        j["code"] = error_code_name(s.site.code);
        j["position"] = pos_str(s.site.pos);
        j["verdict"] = verdict_name(s.verdict.kind);
        if (s.verdict.kind == VerdictKind::Unsupported) j["feature"] = s.verdict.feature;
        if (s.verdict.witness) {
            const auto& cx = *s.verdict.witness;
            const auto& f = p.functions.at(cx.entry);
            nlohmann::json args = nlohmann::json::array();
            for (std::size_t i = 0; i < cx.args.size(); ++i) args.push_back(value_to_json(cx.args[i], f.params[i].second, p.universe));
            j["witness"] = {{"entry", cx.entry}, {"args", args}, {"text", call_str(cx)}};
        }
        sites.push_back(std::move(j));
    }
    nlohmann::json out;
    out["sites"] = sites;
    out["summary"] = {{"sites", r.sites.size()},
                      {"witness", r.count(VerdictKind::Witness)},
                      {"no-witness-within-bounds", r.count(VerdictKind::NoWitness)},
                      {"solver-timeout", r.count(VerdictKind::Timeout)},
                      {"unsupported", r.count(VerdictKind::Unsupported)}};
    return out;
}

}  // namespace lx
