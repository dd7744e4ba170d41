#include "lx/harness.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "lx/eval.hpp"
#include "lx/external.hpp"
#include "lx/lower.hpp"

namespace lx {

namespace {

bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

// Offsets of `defer ;` outside comments and string literals.
std::vector<std::pair<std::size_t, std::size_t>> defer_tokens(const std::string& s) {
    std::vector<std::pair<std::size_t, std::size_t>> out;
    std::size_t i = 0;
    while (i < s.size()) {
        if (s.compare(i, 2, "//") == 0) {
            while (i < s.size() && s[i] != '\n') ++i;
        } else if (s.compare(i, 2, "/*") == 0) {
            auto end = s.find("*/", i + 2);
            i = end == std::string::npos ? s.size() : end + 2;
        } else if (s[i] == '"') {
            for (++i; i < s.size() && s[i] != '"'; ++i) {
                if (s[i] == '\\') ++i;
            }
            ++i;
        } else if (ident_char(s[i])) {
            std::size_t j = i;
            while (j < s.size() && ident_char(s[j])) ++j;
            if (s.compare(i, j - i, "defer") == 0) {
                std::size_t k = j;
                while (k < s.size() && std::isspace(static_cast<unsigned char>(s[k]))) ++k;
                if (k < s.size() && s[k] == ';') out.emplace_back(i, k + 1 - i);
            }
            i = j;
        } else {
            ++i;
        }
    }
    return out;
}

}  // namespace

HoleSpec find_hole(const std::string& source, const std::string& file) {
    auto toks = defer_tokens(source);
    if (toks.size() != 1) {
        throw std::invalid_argument(file + ": expected exactly one `defer;` hole, found " + std::to_string(toks.size()));
    }
    Diagnostics d;
    auto cp = check_source(source, file, d);
    HoleSpec h;
    for (const auto& [name, f] : cp.functions) {
        if (f.deferred) h.function = name;
    }
    if (h.function.empty()) throw std::invalid_argument(file + ": the hole is not a function body");
    const auto& f = cp.functions.at(h.function);
    if (f.kind == FnKind::Method) throw std::invalid_argument(file + ": holes in methods are not supported");
    h.offset = toks[0].first;
    h.length = toks[0].second;
    return h;
}

std::optional<SplicedProgram> splice_candidate(const std::string& source, const std::string& file, const HoleSpec& hole,
                                               const std::string& body, std::string& diagnostics) {
    std::string text = source.substr(0, hole.offset) + body + source.substr(hole.offset + hole.length);
    SplicedProgram sp;
    Diagnostics d;
    try {
        sp.checked = check_source(text, file, d);
    } catch (const CompileError& e) {
        diagnostics = e.diagnostics().str();
        return std::nullopt;
    }
    const auto& f = sp.checked.functions.at(hole.function);
    if (f.deferred) {
        diagnostics = "candidate leaves the body deferred\n";
        return std::nullopt;
    }
    sp.ir = lower_program(sp.checked);
    // Example literals are evaluated as synthesized constants.
    CheckedProgram with_consts = sp.checked;
    std::vector<std::vector<std::string>> names;
    for (std::size_t i = 0; i < f.examples.size(); ++i) {
        const auto& ex = f.examples[i];
        std::vector<std::string> row;
        auto add = [&](const ExprPtr& e, const Type& t, const std::string& suffix) {
            CheckedFunction c;
            c.name = hole.function + "$example$" + std::to_string(i) + "$" + suffix;
            c.kind = FnKind::Const;
            c.result = t;
            c.expr = e;
            c.pos = ex.pos;
            with_consts.functions[c.name] = c;
            row.push_back(c.name);
        };
        for (std::size_t j = 0; j < ex.args.size(); ++j) add(ex.args[j], f.params[j].second, "a" + std::to_string(j));
        if (ex.result) add(ex.result, f.result, "r");
        names.push_back(row);
    }
    auto consts = lower_program(with_consts);
    for (std::size_t i = 0; i < f.examples.size(); ++i) {
        ExampleCase ec;
        ec.pos = f.examples[i].pos;
        for (std::size_t j = 0; j < names[i].size(); ++j) {
            auto o = evaluate(consts, names[i][j], {});
            if (!o.ok()) {
                diagnostics = format_diagnostic({Severity::Error, ec.pos, "example literal fails: " + outcome_str(o)}) + "\n";
                return std::nullopt;
            }
            if (j < f.examples[i].args.size()) {
                ec.args.push_back(*o.value);
            } else {
                ec.expected = *o.value;
            }
        }
        sp.examples.push_back(std::move(ec));
    }
    return sp;
}

std::vector<ExampleResult> run_examples(const SplicedProgram& sp, const HoleSpec& hole, const CheckConfig& cfg) {
    std::vector<ExampleResult> out;
    for (const auto& ex : sp.examples) {
        ExampleResult r;
        r.actual = evaluate(sp.ir, hole.function, ex.args, cfg);
        r.ensures_ok = !(r.actual.error && r.actual.error->code == ErrorCode::PostconditionFail);
        if (ex.expected) {
            r.expected = to_string(*ex.expected);
            r.passed = r.actual.ok() && value_equal(*r.actual.value, *ex.expected);
        } else {
            r.passed = r.actual.ok();
        }
        out.push_back(std::move(r));
    }
    return out;
}

bool CandidateReport::ensures_clean() const {
    if (!verified) return false;
    return std::all_of(ensures.begin(), ensures.end(),
                       [](const SiteReport& s) { return s.verdict.kind == VerdictKind::NoWitness; });
}

std::vector<CandidateReport> rank_candidates(std::vector<CandidateReport> reports) {
    std::stable_sort(reports.begin(), reports.end(), [](const CandidateReport& a, const CandidateReport& b) {
        if (a.compiles != b.compiles) return a.compiles;
        if (a.examples_passed != b.examples_passed) return a.examples_passed > b.examples_passed;
        if (a.ensures_clean() != b.ensures_clean()) return a.ensures_clean();
        return a.index < b.index;
    });
    for (std::size_t i = 0; i < reports.size(); ++i) reports[i].rank = i + 1;
    return reports;
}

std::vector<std::string> split_candidates(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream in(text);
    std::string line, cur;
    auto flush = [&]() {
        auto b = cur.find_first_not_of(" \t\r\n");
        if (b != std::string::npos) {
            auto e = cur.find_last_not_of(" \t\r\n");
            out.push_back(cur.substr(b, e - b + 1));
        }
        cur.clear();
    };
    while (std::getline(in, line)) {
        std::string t = line;
        while (!t.empty() && (t.back() == '\r' || t.back() == ' ' || t.back() == '\t')) t.pop_back();
        if (t == "---") {
            flush();
        } else {
            cur += line + "\n";
        }
    }
    flush();
    return out;
}

std::vector<CandidateReport> evaluate_candidates(const std::string& source, const std::string& file,
                                                 const std::vector<std::string>& bodies, const VerifyOptions& opts) {
    HoleSpec hole = find_hole(source, file);
    std::vector<CandidateReport> reports;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
        CandidateReport r;
        r.index = i;
        r.body = bodies[i];
        auto sp = splice_candidate(source, file, hole, bodies[i], r.diagnostics);
        if (sp) {
            r.compiles = true;
            r.examples = run_examples(*sp, hole, opts.cfg);
            r.examples_passed =
                static_cast<std::size_t>(std::count_if(r.examples.begin(), r.examples.end(), [](const auto& e) { return e.passed; }));
            if (r.all_examples_pass()) {
                VerifyOptions vo = opts;
                vo.site_filter = [&](const ErrorSite& s) {
                    return s.function == hole.function && s.code == ErrorCode::PostconditionFail && s.path.rfind("e", 0) == 0;
                };
                r.ensures = verify_program(sp->ir, vo).sites;
                r.verified = true;
            }
        }
        reports.push_back(std::move(r));
    }
    return rank_candidates(std::move(reports));
}

namespace {

std::string one_line(const std::string& s) {
    std::string out;
    bool space = false;
    for (char c : s) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            space = !out.empty();
            continue;
        }
        if (space) out += ' ';
        space = false;
        out += c;
    }
    return out;
}

std::string ensures_status(const CandidateReport& r) {
    if (!r.verified) return "not-checked";
    for (const auto& s : r.ensures) {
        if (s.verdict.kind != VerdictKind::NoWitness) return verdict_name(s.verdict.kind);
    }
    return verdict_name(VerdictKind::NoWitness);
}

}  // namespace

std::string rank_report_text(const std::vector<CandidateReport>& ranked) {
    std::string out;
    for (const auto& r : ranked) {
        out += "#" + std::to_string(r.rank) + " candidate " + std::to_string(r.index + 1) + ": ";
        if (!r.compiles) {
            out += "does not compile\n";
            std::istringstream in(r.diagnostics);
            std::string line;
            while (std::getline(in, line)) out += "    " + line + "\n";
            continue;
        }
        out += "examples " + std::to_string(r.examples_passed) + "/" + std::to_string(r.examples.size()) + ", ensures " +
               ensures_status(r) + "\n";
        out += "    " + one_line(r.body) + "\n";
        for (std::size_t i = 0; i < r.examples.size(); ++i) {
            const auto& e = r.examples[i];
            if (e.passed) continue;
            out += "    example " + std::to_string(i + 1) + ": got " + outcome_str(e.actual);
            if (!e.expected.empty()) out += ", expected " + e.expected;
            out += "\n";
        }
        for (const auto& s : r.ensures) {
            if (s.verdict.kind == VerdictKind::NoWitness) continue;
            out += "    " + s.site.name() + ": " + verdict_name(s.verdict.kind);
            if (s.verdict.witness) {
                out += " " + s.verdict.witness->entry + "(";
                for (std::size_t j = 0; j < s.verdict.witness->args.size(); ++j) {
                    out += (j ? ", " : "") + to_string(s.verdict.witness->args[j]);
                }
                out += ")";
            }
            out += "\n";
        }
    }
    return out;
}

nlohmann::json rank_report_json(const std::vector<CandidateReport>& ranked) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : ranked) {
        nlohmann::json j;
        j["rank"] = r.rank;
        j["candidate"] = r.index + 1;
        j["body"] = r.body;
        j["compiles"] = r.compiles;
        if (!r.compiles) j["diagnostics"] = r.diagnostics;
        nlohmann::json exs = nlohmann::json::array();
        for (const auto& e : r.examples) {
            nlohmann::json x;
            x["passed"] = e.passed;
            x["ensures"] = e.ensures_ok;
            x["actual"] = outcome_str(e.actual);
            if (!e.expected.empty()) x["expected"] = e.expected;
            exs.push_back(std::move(x));
        }
        j["examples"] = exs;
        j["examples_passed"] = r.examples_passed;
        j["ensures"] = ensures_status(r);
        nlohmann::json sites = nlohmann::json::array();
        for (const auto& s : r.ensures) {
            nlohmann::json x;
            x["site"] = s.site.name();
            x["verdict"] = verdict_name(s.verdict.kind);
            if (s.verdict.witness) {
                nlohmann::json args = nlohmann::json::array();
                for (const auto& a : s.verdict.witness->args) args.push_back(to_string(a));
                x["witness"] = args;
            }
            sites.push_back(std::move(x));
        }
        j["ensures_sites"] = sites;
        out.push_back(std::move(j));
    }
    return out;
}

}  // namespace lx
