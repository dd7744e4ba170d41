#include <map>
#include <set>
#include <sstream>

#include "acceptance.hpp"
#include "lx/gen.hpp"
#include "lx/verify.hpp"

using namespace lx;

namespace acceptance {

namespace {

std::set<std::string> ingest_entries(const std::string& source) {
    std::set<std::string> out;
    std::istringstream in(header(source, "ingest"));
    std::string name;
    while (in >> name) out.insert(name);
    return out;
}

// Replays a witness without the verifier's confirmation routine.
bool replays(const IrProgram& p, const ErrorSite& site, const Counterexample& cx, const CheckConfig& cfg) {
    Evaluator ev(p, cfg);
    auto slash = site.path.find('/');
    if (site.code == ErrorCode::ValidateFail && site.path.rfind("arg", 0) == 0 && slash != std::string::npos) {
        auto j = std::stoul(site.path.substr(3, slash - 3));
        auto o = ev.check_value(cx.args.at(j), true);
        return o.error && o.error->code == ErrorCode::ValidateFail;
    }
    auto o = ev.call(cx.entry, cx.args);
    return o.error && o.error->code == site.code && o.error->site == site.name();
}

}  // namespace

Result witness_soundness() {
    std::size_t programs = 0, seeded = 0, witnesses = 0;
    std::set<ErrorCode> seeded_codes;
    std::vector<std::string> problems;
    for (const auto& rel : fixture_files({"exhaustible", "oracle", "programs", "seeded"})) {
        auto source = read_text(fixture_path(rel));
        auto c = compile_fixture(rel);
        ++programs;
        VerifyOptions o;
        o.ingest = ingest_entries(source);
        auto r = verify_program(c.ir, o);
        std::set<ErrorCode> found;
        for (const auto& s : r.sites) {
            if (s.verdict.kind == VerdictKind::Unsupported && s.verdict.feature == "unconfirmed-model") {
                problems.push_back(rel + ": refuted model at " + s.site.name() + " (" + s.verdict.note + ")");
            }
            if (s.verdict.kind != VerdictKind::Witness) continue;
            ++witnesses;
            found.insert(s.site.code);
            if (!s.verdict.witness || !confirm_witness(c.ir, s.site, *s.verdict.witness, o) ||
                !replays(c.ir, s.site, *s.verdict.witness, o.cfg)) {
                problems.push_back(rel + ": witness for " + s.site.name() + " does not replay");
            }
        }
        auto declared = header(source, "seeded");
        if (declared.empty()) continue;
        ++seeded;
        std::istringstream in(declared);
        std::string name;
        while (in >> name) {
            auto code = parse_error_code(name);
            if (!code) {
                problems.push_back(rel + ": unknown code " + name);
                continue;
            }
            seeded_codes.insert(*code);
            if (!found.count(*code)) problems.push_back(rel + ": no confirmed witness for seeded " + name);
        }
    }
    std::string missing;
    for (auto code : all_error_codes()) {
        // The recursion budget is an assumption of the encoding, not a site.
        if (code == ErrorCode::RecursionBudgetExceeded) continue;
        if (!seeded_codes.count(code)) missing += std::string(" ") + error_code_name(code);
    }
    if (!missing.empty()) problems.push_back("codes without a seeded program:" + missing);
    if (seeded < 30) problems.push_back("only " + std::to_string(seeded) + " seeded programs");
    std::string detail = std::to_string(programs) + " programs (" + std::to_string(seeded) + " seeded, " +
                         std::to_string(seeded_codes.size()) + " codes), " + std::to_string(witnesses) +
                         " witnesses, all replayed";
    if (!problems.empty()) {
        detail = std::to_string(problems.size()) + " problems";
        for (std::size_t i = 0; i < problems.size() && i < 5; ++i) detail += "; " + problems[i];
    }
    return {problems.empty(), detail};
}

namespace {

EnumDomain domain(std::int64_t reach) {
    EnumDomain d;
    d.ints.clear();
    d.nats.clear();
    for (std::int64_t i = -reach; i <= reach; ++i) d.ints.push_back(i);
    for (std::int64_t i = 0; i <= reach; ++i) d.nats.push_back(static_cast<std::uint64_t>(i));
    d.strings = {};
    Bounds b;
    d.max_list = b.list;
    d.max_map = b.map;
    return d;
}

struct Exhaustion {
    std::size_t accepted = 0;
    std::set<std::string> reached;  // `site code`
};

// Runs every entry on every input the verifier would consider: arguments
// whose own checks pass and which satisfy the entry's requires clauses.
Exhaustion exhaust(const IrProgram& p, const EnumDomain& d, const CheckConfig& cfg) {
    Exhaustion out;
    for (const auto& entry : p.entries) {
        const auto& f = p.functions.at(entry);
        std::vector<std::vector<Value>> columns;
        for (const auto& [name, t] : f.params) columns.push_back(enumerate_values(t, p.universe, d));
        for (const auto& args : cartesian(columns)) {
            Evaluator ev(p, cfg);
            bool valid = true;
            for (const auto& a : args) valid = valid && ev.check_value(a, false).ok();
            if (!valid) continue;
            auto o = ev.call(entry, args);
            if (o.error && o.error->code == ErrorCode::PreconditionFail && o.error->site.rfind(entry + ":r", 0) == 0) continue;
            ++out.accepted;
            if (o.error) out.reached.insert(o.error->site + " " + error_code_name(o.error->code));
        }
    }
    return out;
}

}  // namespace

Result bounded_completeness() {
    auto files = fixture_files({"exhaustible"});
    std::size_t sites = 0, witnesses = 0;
    std::vector<std::string> problems;
    for (const auto& rel : files) {
        auto c = compile_fixture(rel);
        VerifyOptions o;
        // The wider domain must add no accepted inputs, so the narrower
        // one already covers the whole bounded input space.
        auto wide = exhaust(c.ir, domain(4), o.cfg);
        auto narrow = exhaust(c.ir, domain(3), o.cfg);
        if (wide.accepted != narrow.accepted) {
            problems.push_back(rel + ": input space not closed under the enumeration domain");
            continue;
        }
        auto r = verify_program(c.ir, o);
        std::set<std::string> known;
        for (const auto& s : r.sites) {
            ++sites;
            std::string key = s.site.name() + " " + error_code_name(s.site.code);
            known.insert(key);
            bool reachable = wide.reached.count(key) > 0;
            bool witnessed = s.verdict.kind == VerdictKind::Witness;
            if (witnessed) ++witnesses;
            if (reachable != witnessed || (!witnessed && s.verdict.kind != VerdictKind::NoWitness)) {
                problems.push_back(rel + ": " + key + " verifier " + verdict_name(s.verdict.kind) + ", enumeration " +
                                   (reachable ? "reaches it" : "does not reach it"));
            }
        }
        for (const auto& k : wide.reached) {
            if (!known.count(k)) problems.push_back(rel + ": enumeration reaches unlisted site " + k);
        }
    }
    std::string detail = std::to_string(files.size()) + " programs, " + std::to_string(sites) + " sites (" +
                         std::to_string(witnesses) + " witness) match enumeration";
    if (files.size() < 10) problems.push_back("only " + std::to_string(files.size()) + " exhaustible programs");
    if (!problems.empty()) {
        detail = std::to_string(problems.size()) + " mismatches";
        for (std::size_t i = 0; i < problems.size() && i < 6; ++i) detail += "; " + problems[i];
    }
    return {problems.empty(), detail};
}

}  // namespace acceptance
