#include <sys/wait.h>

#include <cstdio>
#include <random>
#include <sstream>

#include "acceptance.hpp"
#include "lx/external.hpp"
#include "lx/gen.hpp"
#include "lx/lower.hpp"

#ifndef LX_BINARY
#define LX_BINARY "lx"
#endif

using namespace lx;

namespace acceptance {

namespace {

std::string quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

// Standard output and error of one `lx` process, followed by its exit status.
std::string invoke(const std::vector<std::string>& args) {
    std::string cmd = quote(LX_BINARY);
    for (const auto& a : args) cmd += " " + quote(a);
    cmd += " 2>&1";
    FILE* f = popen(cmd.c_str(), "r");
    if (!f) throw std::runtime_error("cannot start " + cmd);
    std::string out;
    char buf[4096];
    std::size_t n;
    while ((n = fread(buf, 1, sizeof buf, f)) > 0) out.append(buf, n);
    int status = pclose(f);
    return out + "\n[exit " + std::to_string(WIFEXITED(status) ? WEXITSTATUS(status) : -1) + "]";
}

struct Command {
    std::string label;
    std::vector<std::string> args;
};

std::vector<Command> commands_for(const std::string& rel) {
    auto path = fixture_path(rel);
    auto source = read_text(path);
    std::vector<Command> out;
    out.push_back({"ir " + rel, {"ir", path}});
    std::vector<std::string> verify = {"verify", path};
    std::istringstream ingest(header(source, "ingest"));
    std::string name;
    while (ingest >> name) {
        verify.push_back("--ingest");
        verify.push_back(name);
    }
    out.push_back({"verify " + rel, verify});
    verify.push_back("--jobs");
    verify.push_back("4");
    out.push_back({"verify --jobs 4 " + rel, verify});

    Diagnostics d;
    IrProgram p;
    try {
        p = lower_program(check_source(source, rel, d));
    } catch (const CompileError&) {
        out.push_back({"run " + rel, {"run", path, "--entry", "main"}});
        return out;
    }
    std::mt19937_64 rng(std::hash<std::string>{}(rel) & 0xffff);
    for (const auto& entry : p.entries) {
        const auto& f = p.functions.at(entry);
        nlohmann::json args = nlohmann::json::array();
        for (const auto& [n, t] : f.params) args.push_back(value_to_json(random_value(t, rng, p.universe), t, p.universe));
        out.push_back({"run " + rel + " " + entry, {"run", path, "--entry", entry, "--args", args.dump()}});
    }
    return out;
}

// First line where two outputs differ, for the failure report.
std::string first_difference(const std::string& a, const std::string& b) {
    std::istringstream x(a), y(b);
    std::string l, r;
    while (true) {
        bool more_l = static_cast<bool>(std::getline(x, l));
        bool more_r = static_cast<bool>(std::getline(y, r));
        if (!more_l && !more_r) return "";
        if (!more_l) l = "<end>";
        if (!more_r) r = "<end>";
        if (l != r) return "`" + l + "` became `" + r + "`";
    }
}

}  // namespace

Result determinism() {
    std::vector<Command> commands;
    auto files = fixture_files({"exhaustible", "listings", "oracle", "programs", "seeded"});
    for (const auto& rel : files) {
        auto cs = commands_for(rel);
        commands.insert(commands.end(), cs.begin(), cs.end());
    }
    std::vector<std::string> baseline;
    for (const auto& c : commands) baseline.push_back(invoke(c.args));
    std::size_t checked = 0;
    for (int round = 1; round < 5; ++round) {
        for (std::size_t i = 0; i < commands.size(); ++i) {
            auto again = invoke(commands[i].args);
            if (again != baseline[i]) {
                return {false, "output changed in round " + std::to_string(round + 1) + ": " + commands[i].label + ": " +
                                   first_difference(baseline[i], again)};
            }
            ++checked;
        }
    }
    // Parallel verification reports the same bytes as the sequential run.
    for (std::size_t i = 0; i + 1 < commands.size(); ++i) {
        if (commands[i].args[0] == "verify" && commands[i + 1].label.rfind("verify --jobs 4", 0) == 0 &&
            baseline[i] != baseline[i + 1]) {
            return {false, "--jobs 4 differs from --jobs 1: " + commands[i].label + ": " +
                               first_difference(baseline[i], baseline[i + 1])};
        }
    }
    return {true, std::to_string(files.size()) + " programs, " + std::to_string(commands.size()) +
                      " commands identical over 5 invocations, --jobs 4 equal to --jobs 1"};
}

}  // namespace acceptance
