#include <algorithm>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "acceptance.hpp"
#include "lx/lower.hpp"

namespace acceptance {

std::string fixture_path(const std::string& rel) { return std::string(LX_FIXTURE_DIR) + "/" + rel; }

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> fixture_files(const std::vector<std::string>& dirs) {
    std::vector<std::string> out;
    for (const auto& d : dirs) {
        for (const auto& e : std::filesystem::directory_iterator(fixture_path(d))) {
            if (e.path().extension() == ".lx") out.push_back(d + "/" + e.path().filename().string());
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string header(const std::string& source, const std::string& key) {
    std::istringstream in(source);
    std::string line, prefix = "// " + key + ":";
    while (std::getline(in, line)) {
        if (line.rfind(prefix, 0) == 0) {
            auto v = line.substr(prefix.size());
            auto b = v.find_first_not_of(' ');
            return b == std::string::npos ? "" : v.substr(b);
        }
    }
    return "";
}

Compiled compile_fixture(const std::string& rel) {
    lx::Diagnostics d;
    Compiled c;
    c.checked = lx::check_source(read_text(fixture_path(rel)), rel, d);
    c.ir = lx::lower_program(c.checked);
    return c;
}

double seconds_since(std::chrono::steady_clock::time_point t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
}

}  // namespace acceptance

int main() {
    using namespace acceptance;
    const std::vector<std::pair<const char*, std::function<Result()>>> criteria = {
        {"trading case study", trading_case_study},
        {"maxPair re-ranking", maxpair_ranking},
        {"lowering fidelity", abs_lowering},
        {"binary tree membership", itree_membership},
        {"functor oracle equivalence", functor_oracle},
        {"witness soundness", witness_soundness},
        {"bounded completeness", bounded_completeness},
        {"determinism", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Result r;
        auto start = std::chrono::steady_clock::now();
        try {
            r = criteria[i].second();
        } catch (const std::exception& e) {
            r = {false, std::string("exception: ") + e.what()};
        }
        if (!r.pass) ++failed;
        std::printf("criterion %zu %s: %s (%.1fs) %s\n", i + 1, criteria[i].first, r.pass ? "PASS" : "FAIL",
                    seconds_since(start), r.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%zu/%zu criteria passed\n", criteria.size() - static_cast<std::size_t>(failed), criteria.size());
    return failed == 0 ? 0 : 1;
}
