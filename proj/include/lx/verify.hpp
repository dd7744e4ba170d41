#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "lx/eval.hpp"
#include "lx/ir.hpp"
#include "lx/smt.hpp"

namespace lx {

struct ErrorSite {
    int id = 0;            // 1-based, in enumeration order
    std::string function;  // IR function holding the site
    std::string path;      // IR path plus `/pre<i>`, `/inv<k>` or `arg<j>/val<k>` suffixes
    ErrorCode code = ErrorCode::AssertFail;
    SourcePos pos;

    // The evaluator's site string, `function:path`.
    std::string name() const { return site_name(function, path); }
};

struct Bounds {
    int list = 3;
    int string = 16;
    int unroll = 4;
    BigInt magnitude = BigInt(1) << 20;
    int map = 3;
};

struct Counterexample {
    std::string entry;
    std::vector<Value> args;
    int site = 0;
};

enum class VerdictKind { Witness, NoWitness, Timeout, Unsupported };

const char* verdict_name(VerdictKind k);

struct SiteVerdict {
    VerdictKind kind = VerdictKind::NoWitness;
    std::optional<Counterexample> witness;  // confirmed, for Witness
    std::string feature;                    // for Unsupported
    std::string note;                       // solver diagnostics, refuted models
};

struct VerifyOptions {
    Bounds bounds;
    CheckConfig cfg;
    std::string solver = default_solver_path();
    double timeout_seconds = 10;
    int jobs = 1;
    std::set<std::string> ingest;  // entries whose arguments arrive through validation
    std::string dump_dir;          // when set, writes site_<id>.smt2 per site
    std::size_t path_limit = 20000;
    // When set, only matching sites are solved and reported.
    std::function<bool(const ErrorSite&)> site_filter;
};

// Every error site of the program under `cfg`, sorted by function name then
// pre-order path. Ingestion validates are listed for `ingest` entries.
std::vector<ErrorSite> enumerate_error_sites(const IrProgram& p, const CheckConfig& cfg,
                                             const std::set<std::string>& ingest = {});

struct SiteReport {
    ErrorSite site;
    SiteVerdict verdict;
};

struct VerifyReport {
    std::vector<SiteReport> sites;
    bool solver_missing = false;

    std::size_t count(VerdictKind k) const;
};

// Thrown when the solver cannot be started.
struct SolverMissing : std::runtime_error {
    using std::runtime_error::runtime_error;
};

VerifyReport verify_program(const IrProgram& p, const VerifyOptions& opts);

// Script for one site, exactly as sent to the solver; empty entries list
// means the site is unreachable from every entry within bounds.
std::string encode_site(const IrProgram& p, const ErrorSite& site, const VerifyOptions& opts);

// Replays a counterexample: confirmed iff the evaluator fails with the
// site's code at the site's location.
bool confirm_witness(const IrProgram& p, const ErrorSite& site, const Counterexample& cx, const VerifyOptions& opts,
                     Outcome* actual = nullptr);

std::string report_text(const IrProgram& p, const VerifyReport& r);
nlohmann::json report_json(const IrProgram& p, const VerifyReport& r);

}  // namespace lx
