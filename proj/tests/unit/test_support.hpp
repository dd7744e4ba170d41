#pragma once

#include <fstream>
#include <sstream>
#include <string>

#ifndef LX_FIXTURE_DIR
#define LX_FIXTURE_DIR "tests/fixtures"
#endif

inline std::string fixture_path(const std::string& rel) { return std::string(LX_FIXTURE_DIR) + "/" + rel; }

inline std::string read_fixture(const std::string& rel) {
    std::ifstream in(fixture_path(rel));
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}
