#include "lx/regex.hpp"

#include <set>
#include <stdexcept>

#include "lx/value.hpp"

namespace lx {
namespace {

struct RegexParser {
    std::vector<std::uint32_t> cps;
    std::size_t i = 0;

    bool at_end() const { return i >= cps.size(); }
    std::uint32_t peek() const { return cps[i]; }

    RegexNode parse_alt() {
        RegexNode first = parse_concat();
        if (at_end() || peek() != '|') return first;
        RegexNode alt;
        alt.kind = RegexNode::Kind::Alt;
        alt.children.push_back(std::move(first));
        while (!at_end() && peek() == '|') {
            ++i;
            alt.children.push_back(parse_concat());
        }
        return alt;
    }

    RegexNode parse_concat() {
        RegexNode cat;
        cat.kind = RegexNode::Kind::Concat;
        while (!at_end() && peek() != '|' && peek() != ')') cat.children.push_back(parse_repeat());
        if (cat.children.empty()) return RegexNode{};
        if (cat.children.size() == 1) return std::move(cat.children[0]);
        return cat;
    }

    int parse_int() {
        if (at_end() || peek() < '0' || peek() > '9') throw std::runtime_error("expected a number in quantifier");
        int n = 0;
        while (!at_end() && peek() >= '0' && peek() <= '9') n = n * 10 + static_cast<int>(cps[i++] - '0');
        return n;
    }

    RegexNode parse_repeat() {
        RegexNode atom = parse_atom();
        while (!at_end()) {
            std::uint32_t c = peek();
            int lo = 0;
            int hi = -1;
            if (c == '*') {
                ++i;
            } else if (c == '+') {
                ++i;
                lo = 1;
            } else if (c == '?') {
                ++i;
                hi = 1;
            } else if (c == '{') {
                ++i;
                lo = parse_int();
                hi = lo;
                if (!at_end() && peek() == ',') {
                    ++i;
                    hi = (!at_end() && peek() == '}') ? -1 : parse_int();
                }
                if (at_end() || peek() != '}') throw std::runtime_error("unterminated quantifier");
                ++i;
                if (hi != -1 && hi < lo) throw std::runtime_error("quantifier bounds out of order");
            } else {
                break;
            }
            RegexNode rep;
            rep.kind = RegexNode::Kind::Repeat;
            rep.min = lo;
            rep.max = hi;
            rep.children.push_back(std::move(atom));
            atom = std::move(rep);
        }
        return atom;
    }

    static RegexNode chars(std::vector<std::pair<std::uint32_t, std::uint32_t>> r, bool neg = false) {
        RegexNode n;
        n.kind = RegexNode::Kind::Chars;
        n.ranges = std::move(r);
        n.negated = neg;
        return n;
    }

    std::vector<std::pair<std::uint32_t, std::uint32_t>> escape_ranges(std::uint32_t c, bool& is_class) {
        is_class = true;
        switch (c) {
            case 'd': return {{'0', '9'}};
            case 'w': return {{'0', '9'}, {'A', 'Z'}, {'_', '_'}, {'a', 'z'}};
            case 's': return {{' ', ' '}, {'\t', '\r'}};
            default: break;
        }
        is_class = false;
        std::uint32_t lit = c;
        if (c == 'n') lit = '\n';
        if (c == 't') lit = '\t';
        if (c == 'r') lit = '\r';
        return {{lit, lit}};
    }

    RegexNode parse_atom() {
        std::uint32_t c = cps[i++];
        switch (c) {
            case '(': {
                RegexNode inner = parse_alt();
                if (at_end() || peek() != ')') throw std::runtime_error("unbalanced parenthesis");
                ++i;
                return inner;
            }
            case ')': throw std::runtime_error("unbalanced parenthesis");
            case '*':
            case '+':
            case '?':
            case '{': throw std::runtime_error("quantifier without operand");
            case '.': {
                RegexNode n;
                n.kind = RegexNode::Kind::Any;
                return n;
            }
            case '[': return parse_class();
            case '\\': {
                if (at_end()) throw std::runtime_error("dangling escape");
                bool cls = false;
                return chars(escape_ranges(cps[i++], cls));
            }
            default: return chars({{c, c}});
        }
    }

    RegexNode parse_class() {
        bool neg = false;
        if (!at_end() && peek() == '^') {
            neg = true;
            ++i;
        }
        std::vector<std::pair<std::uint32_t, std::uint32_t>> ranges;
        bool first = true;
        while (true) {
            if (at_end()) throw std::runtime_error("unterminated character class");
            std::uint32_t c = cps[i++];
            if (c == ']' && !first) break;
            first = false;
            std::uint32_t lo = c;
            if (c == '\\') {
                if (at_end()) throw std::runtime_error("dangling escape");
                bool cls = false;
                auto rs = escape_ranges(cps[i++], cls);
                if (cls) {
                    ranges.insert(ranges.end(), rs.begin(), rs.end());
                    continue;
                }
                lo = rs[0].first;
            }
            std::uint32_t hi = lo;
            if (i + 1 < cps.size() && peek() == '-' && cps[i + 1] != ']') {
                ++i;
                hi = cps[i++];
                if (hi == '\\' && !at_end()) {
                    bool cls = false;
                    hi = escape_ranges(cps[i++], cls)[0].first;
                }
                if (hi < lo) throw std::runtime_error("character range out of order");
            }
            ranges.emplace_back(lo, hi);
        }
        return chars(std::move(ranges), neg);
    }
};

bool chars_match(const RegexNode& n, std::uint32_t c) {
    bool in = false;
    for (const auto& [lo, hi] : n.ranges) {
        if (c >= lo && c <= hi) {
            in = true;
            break;
        }
    }
    return in != n.negated;
}

using PosSet = std::set<std::size_t>;

PosSet step(const RegexNode& n, const std::vector<std::uint32_t>& s, const PosSet& from) {
    switch (n.kind) {
        case RegexNode::Kind::Empty: return from;
        case RegexNode::Kind::Chars:
        case RegexNode::Kind::Any: {
            PosSet out;
            for (auto p : from) {
                if (p < s.size() && (n.kind == RegexNode::Kind::Any || chars_match(n, s[p]))) out.insert(p + 1);
            }
            return out;
        }
        case RegexNode::Kind::Concat: {
            PosSet cur = from;
            for (const auto& c : n.children) {
                cur = step(c, s, cur);
                if (cur.empty()) break;
            }
            return cur;
        }
        case RegexNode::Kind::Alt: {
            PosSet out;
            for (const auto& c : n.children) {
                auto r = step(c, s, from);
                out.insert(r.begin(), r.end());
            }
            return out;
        }
        case RegexNode::Kind::Repeat: {
            PosSet cur = from;
            for (int k = 0; k < n.min; ++k) {
                cur = step(n.children[0], s, cur);
                if (cur.empty()) return cur;
            }
            PosSet out = cur;
            PosSet frontier = cur;
            for (int k = n.min; n.max == -1 || k < n.max; ++k) {
                PosSet next = step(n.children[0], s, frontier);
                PosSet fresh;
                for (auto p : next) {
                    if (out.insert(p).second) fresh.insert(p);
                }
                if (n.max == -1 && fresh.empty()) break;
                frontier = n.max == -1 ? fresh : next;
                if (frontier.empty()) break;
            }
            return out;
        }
    }
    return {};
}

std::string cp_literal(std::uint32_t c) { return smt_string_literal(utf8_encode({c})); }

std::string smt_of(const RegexNode& n) {
    switch (n.kind) {
        case RegexNode::Kind::Empty: return "(str.to_re \"\")";
        case RegexNode::Kind::Any: return "re.allchar";
        case RegexNode::Kind::Chars: {
            std::vector<std::string> parts;
            for (const auto& [lo, hi] : n.ranges) {
                if (lo == hi) {
                    parts.push_back("(str.to_re " + cp_literal(lo) + ")");
                } else {
                    parts.push_back("(re.range " + cp_literal(lo) + " " + cp_literal(hi) + ")");
                }
            }
            std::string set;
            if (parts.empty()) {
                set = "re.none";
            } else if (parts.size() == 1) {
                set = parts[0];
            } else {
                set = "(re.union";
                for (const auto& p : parts) set += " " + p;
                set += ")";
            }
            if (n.negated) return "(re.inter re.allchar (re.comp " + set + "))";
            return set;
        }
        case RegexNode::Kind::Concat: {
            std::string out = "(re.++";
            for (const auto& c : n.children) out += " " + smt_of(c);
            return out + ")";
        }
        case RegexNode::Kind::Alt: {
            std::string out = "(re.union";
            for (const auto& c : n.children) out += " " + smt_of(c);
            return out + ")";
        }
        case RegexNode::Kind::Repeat: {
            std::string inner = smt_of(n.children[0]);
            if (n.min == 0 && n.max == -1) return "(re.* " + inner + ")";
            if (n.min == 1 && n.max == -1) return "(re.+ " + inner + ")";
            if (n.min == 0 && n.max == 1) return "(re.opt " + inner + ")";
            if (n.max == -1) {
                return "(re.++ ((_ re.loop " + std::to_string(n.min) + " " + std::to_string(n.min) + ") " + inner +
                       ") (re.* " + inner + "))";
            }
            return "((_ re.loop " + std::to_string(n.min) + " " + std::to_string(n.max) + ") " + inner + ")";
        }
    }
    return "re.none";
}

}  // namespace

std::optional<Regex> Regex::parse(const std::string& source, std::string* error) {
    RegexParser p;
    p.cps = utf8_decode(source);
    try {
        RegexNode root = p.parse_alt();
        if (!p.at_end()) throw std::runtime_error("unbalanced parenthesis");
        Regex r;
        r.source_ = source;
        r.root_ = std::move(root);
        return r;
    } catch (const std::exception& e) {
        if (error) *error = e.what();
        return std::nullopt;
    }
}

bool Regex::full_match(const std::string& s) const {
    auto cps = utf8_decode(s);
    auto ends = step(root_, cps, PosSet{0});
    return ends.count(cps.size()) > 0;
}

std::string Regex::to_smt() const { return smt_of(root_); }

std::string smt_string_literal(const std::string& utf8) {
    std::string out = "\"";
    for (auto cp : utf8_decode(utf8)) {
        if (cp == '"') {
            out += "\"\"";
        } else if (cp >= 0x20 && cp < 0x7F && cp != '\\') {
            out += static_cast<char>(cp);
        } else {
            char buf[16];
            std::snprintf(buf, sizeof buf, "\\u{%x}", cp);
            out += buf;
        }
    }
    return out + "\"";
}

}  // namespace lx
