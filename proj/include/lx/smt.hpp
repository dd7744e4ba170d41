#pragma once

#include <optional>
#include <string>
#include <vector>

#include "lx/value.hpp"

namespace lx {

struct SolverResult {
    enum class Status { Sat, Unsat, Unknown, Timeout, Error };
    Status status = Status::Error;
    std::string output;       // everything the solver printed
    std::string diagnostics;  // why the run failed, for Error
};

const char* solver_status_name(SolverResult::Status s);

// Solver from $LX_SOLVER, falling back to `z3` on PATH.
std::string default_solver_path();
// True when the solver can be started.
bool solver_available(const std::string& solver);

// Runs one solver process with the script on standard input. The process is
// killed after `timeout_seconds`; z3 additionally gets its own soft limit.
SolverResult invoke_solver(const std::string& solver, const std::string& script, double timeout_seconds);

struct SExpr {
    bool is_list = false;
    bool is_string = false;  // atom was a "..." literal; `atom` holds the decoded text
    std::string atom;
    std::vector<SExpr> items;

    std::string str() const;
};

// Parses a sequence of s-expressions; throws std::runtime_error on
// unbalanced input.
std::vector<SExpr> parse_sexprs(const std::string& text);

// SMT-LIB numeral spelling, `(- n)` for negatives.
std::string smt_int(const BigInt& v);
// Reads `5`, `(- 5)` or `(/ a b)` with integral result.
std::optional<BigInt> sexpr_int(const SExpr& e);

}  // namespace lx
