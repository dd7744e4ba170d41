#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "lx/check.hpp"
#include "lx/ir.hpp"

#ifndef LX_FIXTURE_DIR
#define LX_FIXTURE_DIR "tests/fixtures"
#endif

namespace acceptance {

struct Result {
    bool pass = false;
    std::string detail;
};

std::string fixture_path(const std::string& rel);
std::string read_text(const std::string& path);
// Relative paths of every `.lx` file in the given fixture directories, sorted.
std::vector<std::string> fixture_files(const std::vector<std::string>& dirs);
// Value of a `// key: value` header line, or empty.
std::string header(const std::string& source, const std::string& key);

struct Compiled {
    lx::CheckedProgram checked;
    lx::IrProgram ir;
};
Compiled compile_fixture(const std::string& rel);

double seconds_since(std::chrono::steady_clock::time_point t);

Result trading_case_study();
Result maxpair_ranking();
Result abs_lowering();
Result itree_membership();
Result functor_oracle();
Result witness_soundness();
Result bounded_completeness();
Result determinism();

}  // namespace acceptance
