#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lx/check.hpp"
#include "lx/verify.hpp"

namespace lx {

// The single `defer;` body of a specification program.
struct HoleSpec {
    std::string function;
    std::size_t offset = 0;  // of `defer;` in the source text
    std::size_t length = 0;
};

// Locates the hole; throws std::invalid_argument unless there is exactly one.
HoleSpec find_hole(const std::string& source, const std::string& file);

struct ExampleCase {
    std::vector<Value> args;
    std::optional<Value> expected;
    SourcePos pos;
};

struct SplicedProgram {
    CheckedProgram checked;
    IrProgram ir;
    std::vector<ExampleCase> examples;
};

// Replaces the hole with `body` and runs the static pipeline. Returns
// nullopt and fills `diagnostics` when the candidate does not compile.
std::optional<SplicedProgram> splice_candidate(const std::string& source, const std::string& file, const HoleSpec& hole,
                                               const std::string& body, std::string& diagnostics);

struct ExampleResult {
    bool passed = false;
    bool ensures_ok = true;  // false when the run failed a postcondition
    Outcome actual;
    std::string expected;
};

std::vector<ExampleResult> run_examples(const SplicedProgram& sp, const HoleSpec& hole, const CheckConfig& cfg);

struct CandidateReport {
    std::size_t index = 0;  // 0-based position in the supplied order
    std::string body;
    bool compiles = false;
    std::string diagnostics;
    std::vector<ExampleResult> examples;
    std::size_t examples_passed = 0;
    bool verified = false;  // ensures were checked with the verifier
    std::vector<SiteReport> ensures;
    std::size_t rank = 0;  // 1-based after ranking

    bool all_examples_pass() const { return compiles && examples_passed == examples.size(); }
    bool ensures_clean() const;
};

// Sorts by (compiles, examples passed, ensures clean, supplied order) and
// assigns ranks.
std::vector<CandidateReport> rank_candidates(std::vector<CandidateReport> reports);

// Candidate blocks separated by lines consisting of `---`.
std::vector<std::string> split_candidates(const std::string& text);

std::vector<CandidateReport> evaluate_candidates(const std::string& source, const std::string& file,
                                                 const std::vector<std::string>& bodies, const VerifyOptions& opts);

std::string rank_report_text(const std::vector<CandidateReport>& ranked);
nlohmann::json rank_report_json(const std::vector<CandidateReport>& ranked);

}  // namespace lx
