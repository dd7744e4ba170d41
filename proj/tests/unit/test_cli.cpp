#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "lx/cli.hpp"
#include "lx/ir.hpp"
#include "lx/types.hpp"
#include "test_support.hpp"

using namespace lx;

namespace {

struct Run {
    int code;
    std::string out, err;
};

Run lx_run(std::vector<std::string> args) {
    std::ostringstream out, err;
    int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string temp_file(const std::string& name, const std::string& text) {
    auto dir = std::filesystem::temp_directory_path() / "lx_cli_tests";
    std::filesystem::create_directories(dir);
    auto path = (dir / name).string();
    std::ofstream(path) << text;
    return path;
}

}  // namespace

TEST_CASE("check exit codes") {
    CHECK(lx_run({"check", fixture_path("programs/itree.lx")}).code == kExitOk);
    CHECK(lx_run({"check", temp_file("empty.lx", "")}).code == kExitOk);
    auto bad = lx_run({"check", temp_file("lam.lx", "let f = fn(x) => x;\n")});
    CHECK(bad.code == kExitCompile);
    CHECK(bad.err.find("error") != std::string::npos);
    auto j = lx_run({"check", "--json", temp_file("lam.lx", "let f = fn(x) => x;\n")});
    CHECK(nlohmann::json::parse(j.out)["ok"] == false);
    CHECK(lx_run({"check", "/nonexistent/file.lx"}).code == kExitEnvironment);
}

TEST_CASE("run prints outcomes") {
    auto r = lx_run({"run", fixture_path("programs/abs.lx"), "--entry", "abs", "--args", "[-5]"});
    CHECK(r.code == kExitOk);
    CHECK(r.out == "5i\n");
    auto dz = lx_run({"run", temp_file("dz.lx", "function f(x: Int): Int { return 1i / x; }\n"), "--entry", "f", "--args",
                      "[0]"});
    CHECK(dz.code == kExitRuntime);
    CHECK(dz.out.find("div-zero") != std::string::npos);
    auto c = lx_run({"run", fixture_path("programs/counter.lx"), "--entry", "main", "--json"});
    CHECK(c.code == kExitOk);
    auto j = nlohmann::json::parse(c.out);
    CHECK(j["outcome"] == "value");
    CHECK(j["text"] == "{ctr=Counter{2n}, id1=0n, id2=1n}");
    CHECK(lx_run({"run", fixture_path("programs/abs.lx"), "--entry", "nope"}).code == kExitCompile);
    CHECK(lx_run({"run", fixture_path("programs/abs.lx"), "--entry", "abs", "--args", "[\"x\"]"}).code == kExitCompile);
}

TEST_CASE("ir output parses back") {
    auto r = lx_run({"ir", fixture_path("programs/abs.lx")});
    REQUIRE(r.code == kExitOk);
    auto p = parse_ir(r.out, TypeUniverse{});
    CHECK(serialize_ir(p) == r.out);
    auto empty = lx_run({"ir", temp_file("empty.lx", "")});
    CHECK(empty.code == kExitOk);
    CHECK(parse_ir(empty.out, TypeUniverse{}).functions.empty());
    auto path = temp_file("abs.lxir", "");
    CHECK(lx_run({"ir", fixture_path("programs/abs.lx"), "--emit-ir", path}).out.empty());
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == r.out);
}

TEST_CASE("verify exit codes and reports") {
    auto r = lx_run({"verify", fixture_path("programs/trading.lx")});
    CHECK(r.code == kExitWitness);
    CHECK(r.out.find("postcondition-fail") != std::string::npos);
    auto fixed = lx_run({"verify", fixture_path("programs/trading_fixed.lx"), "--json"});
    CHECK(fixed.code == kExitOk);
    auto j = nlohmann::json::parse(fixed.out);
    CHECK(j["summary"]["witness"] == 0);
    auto none = lx_run({"verify", temp_file("empty.lx", ""), "--json"});
    CHECK(none.code == kExitOk);
    CHECK(nlohmann::json::parse(none.out)["sites"].empty());
    CHECK(lx_run({"verify", fixture_path("programs/abs.lx"), "--solver", "/nonexistent/z3"}).code == kExitEnvironment);
    CHECK(lx_run({"verify", fixture_path("programs/abs.lx"), "--ingest", "nope"}).code == kExitCompile);
    auto dir = (std::filesystem::temp_directory_path() / "lx_cli_dump").string();
    std::filesystem::remove_all(dir);
    lx_run({"verify", fixture_path("programs/abs.lx"), "--dump-smt", dir});
    CHECK(std::filesystem::exists(std::filesystem::path(dir) / "site_1.smt2"));
}

TEST_CASE("rank subcommand") {
    auto cands = temp_file("cands.txt",
                           "return [x.max(), y.max()];\n---\nreturn List::zip<Int, Int>(x, y).maxArg<Int>(fn(v) => v.0 + v.1);\n");
    auto r = lx_run({"rank", "--spec", fixture_path("programs/maxpair.lx"), "--candidates", cands, "--json"});
    REQUIRE(r.code == kExitOk);
    auto j = nlohmann::json::parse(r.out);
    CHECK(j[0]["candidate"] == 2);
    CHECK(j[1]["candidate"] == 1);
}

TEST_CASE("usage errors") {
    CHECK(lx_run({}).code == kExitCompile);
    CHECK(lx_run({"--help"}).code == kExitOk);
    CHECK(lx_run({"run", fixture_path("programs/abs.lx"), "--entry", "abs", "--level", "bogus"}).code == kExitCompile);
    CHECK(lx_run({"verify", fixture_path("programs/abs.lx"), "--jobs", "0"}).code == kExitCompile);
}
