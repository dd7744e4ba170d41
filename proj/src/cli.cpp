#include "lx/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lx/check.hpp"
#include "lx/external.hpp"
#include "lx/harness.hpp"
#include "lx/lower.hpp"
#include "lx/parser.hpp"
#include "lx/verify.hpp"

namespace lx {

namespace {

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string read_input(const std::string& path) {
    if (path == "-") {
        std::stringstream ss;
        ss << std::cin.rdbuf();
        return ss.str();
    }
    return read_file(path);
}

// Parses every file and checks them as one program.
CheckedProgram load(const std::vector<std::string>& files, Diagnostics& diags) {
    SurfaceProgram merged;
    for (const auto& f : files) {
        auto part = parse_source(read_file(f), f);
        if (merged.file.empty()) merged.file = part.file;
        for (auto& d : part.decls) merged.decls.push_back(std::move(d));
    }
    return check_program(merged, diags);
}

struct Options {
    std::vector<std::string> files;
    std::string level;
    bool json = false;
    std::string emit_ir;
    // run
    std::string entry;
    std::string args = "[]";
    // verify / rank
    int list_bound = 3;
    int string_bound = 16;
    int unroll = 4;
    std::string solver;
    double timeout = 10;
    int jobs = 1;
    std::string dump_smt;
    std::vector<std::string> ingest;
    std::string spec;
    std::string candidates;
};

CheckConfig config_of(const Options& o) {
    if (o.level.empty()) return CheckConfig{};
    return CheckConfig::from_level(*parse_check_level(o.level));
}

VerifyOptions verify_options(const Options& o) {
    VerifyOptions v;
    v.cfg = config_of(o);
    v.bounds.list = o.list_bound;
    v.bounds.string = o.string_bound;
    v.bounds.unroll = o.unroll;
    if (!o.solver.empty()) v.solver = o.solver;
    v.timeout_seconds = o.timeout;
    v.jobs = o.jobs;
    v.dump_dir = o.dump_smt;
    v.ingest.insert(o.ingest.begin(), o.ingest.end());
    return v;
}

nlohmann::json diagnostics_json(const Diagnostics& d) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& x : d.items()) {
        out.push_back({{"severity", severity_name(x.severity)},
                       {"file", x.pos.file},
                       {"line", x.pos.line},
                       {"column", x.pos.column},
                       {"message", x.message}});
    }
    return out;
}

void emit_ir_file(const Options& o, const IrProgram& p) {
    if (o.emit_ir.empty()) return;
    std::ofstream out(o.emit_ir, std::ios::binary);
    if (!out) throw InputError("cannot write " + o.emit_ir);
    out << serialize_ir(p);
}

std::string pos_text(const SourcePos& p) { return p.file + ":" + std::to_string(p.line) + ":" + std::to_string(p.column); }

int cmd_check(const Options& o, std::ostream& out, std::ostream& err) {
    Diagnostics d;
    try {
        load(o.files, d);
    } catch (const CompileError& e) {
        d = e.diagnostics();
    }
    if (o.json) {
        out << nlohmann::json{{"ok", !d.has_errors()}, {"diagnostics", diagnostics_json(d)}}.dump(2) << "\n";
    } else {
        d.print(err);
    }
    return d.has_errors() ? kExitCompile : kExitOk;
}

int cmd_run(const Options& o, std::ostream& out, std::ostream& err) {
    Diagnostics d;
    auto cp = load(o.files, d);
    d.print(err);
    auto p = lower_program(cp);
    emit_ir_file(o, p);
    auto it = p.functions.find(o.entry);
    if (it == p.functions.end()) {
        err << "error: no entry " << o.entry << "\n";
        return kExitCompile;
    }
    std::vector<Type> params;
    for (const auto& pr : it->second.params) params.push_back(pr.second);
    std::vector<Value> args;
    try {
        args = args_from_json(o.args, params, p.universe);
    } catch (const std::exception& e) {
        err << "error: bad arguments: " << e.what() << "\n";
        return kExitCompile;
    }
    auto outcome = evaluate(p, o.entry, args, config_of(o));
    if (o.json) {
        nlohmann::json j;
        if (outcome.ok()) {
            j["outcome"] = "value";
            j["value"] = value_to_json(*outcome.value, it->second.result, p.universe);
            j["text"] = to_string(*outcome.value);
        } else {
            const auto& e = *outcome.error;
            j["outcome"] = "error";
            j["code"] = error_code_name(e.code);
            j["site"] = e.site;
            j["position"] = pos_text(e.pos);
            j["message"] = e.message;
        }
        out << j.dump(2) << "\n";
    } else if (outcome.ok()) {
        out << to_string(*outcome.value) << "\n";
    } else {
        out << outcome_str(outcome) << "\n";
    }
    return outcome.ok() ? kExitOk : kExitRuntime;
}

int cmd_ir(const Options& o, std::ostream& out, std::ostream& err) {
    Diagnostics d;
    auto cp = load(o.files, d);
    d.print(err);
    auto p = lower_program(cp);
    if (!o.emit_ir.empty()) {
        emit_ir_file(o, p);
    } else if (o.json) {
        out << nlohmann::json{{"ir", serialize_ir(p)}}.dump(2) << "\n";
    } else {
        out << serialize_ir(p);
    }
    return kExitOk;
}

int cmd_verify(const Options& o, std::ostream& out, std::ostream& err) {
    Diagnostics d;
    auto cp = load(o.files, d);
    d.print(err);
    auto p = lower_program(cp);
    emit_ir_file(o, p);
    for (const auto& e : o.ingest) {
        if (!p.functions.count(e)) {
            err << "error: no entry " << e << " for --ingest\n";
            return kExitCompile;
        }
    }
    auto vo = verify_options(o);
    if (!solver_available(vo.solver)) {
        err << "error: solver " << vo.solver << " is not available\n";
        return kExitEnvironment;
    }
    auto report = verify_program(p, vo);
    if (o.json) {
        out << report_json(p, report).dump(2) << "\n";
    } else {
        out << report_text(p, report);
    }
    return report.count(VerdictKind::Witness) > 0 ? kExitWitness : kExitOk;
}

int cmd_rank(const Options& o, std::ostream& out, std::ostream&) {
    auto source = read_file(o.spec);
    auto bodies = split_candidates(read_input(o.candidates));
    auto vo = verify_options(o);
    if (!solver_available(vo.solver)) throw SolverMissing("solver " + vo.solver + " is not available");
    auto ranked = evaluate_candidates(source, o.spec, bodies, vo);
    if (o.json) {
        out << rank_report_json(ranked).dump(2) << "\n";
    } else {
        out << rank_report_text(ranked);
    }
    return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"lx: checker, evaluator and small-model verifier"};
    app.require_subcommand(1);
    Options o;

    auto level_check = CLI::IsMember({"spec", "debug", "test", "release"});
    auto add_common = [&](CLI::App* c) {
        c->add_option("--level", o.level, "Enable this check level and every coarser one")->check(level_check);
        c->add_flag("--json", o.json, "Machine-readable output");
    };
    auto add_bounds = [&](CLI::App* c) {
        c->add_option("--list-bound", o.list_bound, "Maximum list and sequence length")->check(CLI::NonNegativeNumber);
        c->add_option("--string-bound", o.string_bound, "Maximum string length")->check(CLI::NonNegativeNumber);
        c->add_option("--unroll", o.unroll, "Recursion unrolling depth")->check(CLI::NonNegativeNumber);
        c->add_option("--solver", o.solver, "SMT solver executable (default $LX_SOLVER or z3)");
        c->add_option("--timeout", o.timeout, "Seconds per solver query")->check(CLI::PositiveNumber);
        c->add_option("--jobs", o.jobs, "Parallel solver processes")->check(CLI::PositiveNumber);
        c->add_option("--dump-smt", o.dump_smt, "Directory receiving site_<id>.smt2");
    };

    auto* check = app.add_subcommand("check", "Parse and typecheck");
    check->add_option("files", o.files)->required();
    add_common(check);

    auto* run = app.add_subcommand("run", "Evaluate an entry point");
    run->add_option("files", o.files)->required();
    run->add_option("--entry", o.entry, "Function to call")->required();
    run->add_option("--args", o.args, "Arguments as a JSON array");
    run->add_option("--emit-ir", o.emit_ir, "Also write the lowered IR here");
    add_common(run);

    auto* ir = app.add_subcommand("ir", "Print the lowered IR");
    ir->add_option("files", o.files)->required();
    ir->add_option("--emit-ir", o.emit_ir, "Write the IR to this file instead of standard output");
    add_common(ir);

    auto* verify = app.add_subcommand("verify", "Search for inputs reaching each error site");
    verify->add_option("files", o.files)->required();
    verify->add_option("--ingest", o.ingest, "Entry whose arguments are untrusted input (checks validates)");
    verify->add_option("--emit-ir", o.emit_ir, "Also write the lowered IR here");
    add_common(verify);
    add_bounds(verify);

    auto* rank = app.add_subcommand("rank", "Screen and rank candidate bodies for a deferred function");
    rank->add_option("--spec", o.spec, "Program with one `defer;` body")->required();
    rank->add_option("--candidates", o.candidates, "Candidate bodies separated by `---` lines, or - for stdin")->required();
    add_common(rank);
    add_bounds(rank);

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n";
        return kExitCompile;
    }

    try {
        if (check->parsed()) return cmd_check(o, out, err);
        if (run->parsed()) return cmd_run(o, out, err);
        if (ir->parsed()) return cmd_ir(o, out, err);
        if (verify->parsed()) return cmd_verify(o, out, err);
        return cmd_rank(o, out, err);
    } catch (const CompileError& e) {
        e.diagnostics().print(err);
        return kExitCompile;
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kExitEnvironment;
    } catch (const SolverMissing& e) {
        err << "error: " << e.what() << "\n";
        return kExitEnvironment;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kExitCompile;
    }
}

}  // namespace lx
