#include "lx/smt.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cctype>
#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <stdexcept>

extern char** environ;

namespace lx {

const char* solver_status_name(SolverResult::Status s) {
    switch (s) {
        case SolverResult::Status::Sat: return "sat";
        case SolverResult::Status::Unsat: return "unsat";
        case SolverResult::Status::Unknown: return "unknown";
        case SolverResult::Status::Timeout: return "timeout";
        case SolverResult::Status::Error: return "error";
    }
    return "?";
}

std::string default_solver_path() {
    const char* env = std::getenv("LX_SOLVER");
    if (env && *env) return env;
    return "z3";
}

namespace {

struct Child {
    pid_t pid = -1;
    int in = -1;
    int out = -1;
};

std::optional<Child> spawn(const std::vector<std::string>& argv, std::string& error) {
    int to_child[2], from_child[2];
    if (pipe2(to_child, O_CLOEXEC) != 0) {
        error = std::strerror(errno);
        return std::nullopt;
    }
    if (pipe2(from_child, O_CLOEXEC) != 0) {
        error = std::strerror(errno);
        close(to_child[0]);
        close(to_child[1]);
        return std::nullopt;
    }
    posix_spawn_file_actions_t fa;
    posix_spawn_file_actions_init(&fa);
    posix_spawn_file_actions_adddup2(&fa, to_child[0], 0);
    posix_spawn_file_actions_adddup2(&fa, from_child[1], 1);
    posix_spawn_file_actions_adddup2(&fa, from_child[1], 2);
    std::vector<char*> args;
    for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
    args.push_back(nullptr);
    pid_t pid;
    int rc = posix_spawnp(&pid, args[0], &fa, nullptr, args.data(), environ);
    posix_spawn_file_actions_destroy(&fa);
    close(to_child[0]);
    close(from_child[1]);
    if (rc != 0) {
        error = std::string("cannot start ") + argv[0] + ": " + std::strerror(rc);
        close(to_child[1]);
        close(from_child[0]);
        return std::nullopt;
    }
    fcntl(to_child[1], F_SETFL, O_NONBLOCK);
    fcntl(from_child[0], F_SETFL, O_NONBLOCK);
    return Child{pid, to_child[1], from_child[0]};
}

bool is_z3(const std::string& solver) {
    auto slash = solver.find_last_of('/');
    std::string base = slash == std::string::npos ? solver : solver.substr(slash + 1);
    return base.rfind("z3", 0) == 0;
}

}  // namespace

bool solver_available(const std::string& solver) {
    auto r = invoke_solver(solver, "(check-sat)\n", 10);
    return r.status == SolverResult::Status::Sat;
}

SolverResult invoke_solver(const std::string& solver, const std::string& script, double timeout_seconds) {
    SolverResult res;
    std::vector<std::string> argv{solver, "-in"};
    if (is_z3(solver)) {
        argv = {solver, "-smt2", "-in"};
        argv.push_back("-T:" + std::to_string(static_cast<long>(timeout_seconds) + 1));
    }
    std::string err;
    auto child = spawn(argv, err);
    if (!child) {
        res.diagnostics = err;
        return res;
    }
    signal(SIGPIPE, SIG_IGN);
    using clock = std::chrono::steady_clock;
    auto deadline = clock::now() + std::chrono::milliseconds(static_cast<long>(timeout_seconds * 1000));
    std::size_t written = 0;
    bool timed_out = false;
    while (true) {
        std::vector<pollfd> fds;
        fds.push_back({child->out, POLLIN, 0});
        if (child->in >= 0) fds.push_back({child->in, POLLOUT, 0});
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - clock::now()).count();
        if (left <= 0) {
            timed_out = true;
            break;
        }
        int n = poll(fds.data(), fds.size(), static_cast<int>(left));
        if (n < 0 && errno == EINTR) continue;
        if (n < 0) break;
        if (fds.size() > 1 && (fds[1].revents & (POLLOUT | POLLERR | POLLHUP))) {
            ssize_t w = write(child->in, script.data() + written, script.size() - written);
            if (w > 0) written += static_cast<std::size_t>(w);
            if (w < 0 && errno != EAGAIN) written = script.size();
            if (written == script.size()) {
                close(child->in);
                child->in = -1;
            }
        }
        if (fds[0].revents & (POLLIN | POLLHUP | POLLERR)) {
            char buf[4096];
            ssize_t r = read(child->out, buf, sizeof buf);
            if (r > 0) {
                res.output.append(buf, static_cast<std::size_t>(r));
            } else if (r == 0 || errno != EAGAIN) {
                break;
            }
        }
    }
    if (child->in >= 0) close(child->in);
    close(child->out);
    if (timed_out) kill(child->pid, SIGKILL);
    int status = 0;
    waitpid(child->pid, &status, 0);
    if (timed_out) {
        res.status = SolverResult::Status::Timeout;
        return res;
    }
    if (WIFEXITED(status) && WEXITSTATUS(status) == 127 && res.output.empty()) {
        res.diagnostics = "solver " + solver + " not found";
        return res;
    }
    std::string first;
    for (std::size_t i = 0; i < res.output.size() && res.output[i] != '\n'; ++i) first += res.output[i];
    while (!first.empty() && (first.back() == '\r' || first.back() == ' ')) first.pop_back();
    if (first == "sat") {
        res.status = SolverResult::Status::Sat;
    } else if (first == "unsat") {
        res.status = SolverResult::Status::Unsat;
    } else if (first == "unknown") {
        res.status = SolverResult::Status::Unknown;
    } else if (first == "timeout") {
        res.status = SolverResult::Status::Timeout;
    } else {
        res.diagnostics = "unexpected solver output: " + first;
    }
    return res;
}

std::string SExpr::str() const {
    if (!is_list) return is_string ? "\"" + atom + "\"" : atom;
    std::string s = "(";
    for (std::size_t i = 0; i < items.size(); ++i) s += (i ? " " : "") + items[i].str();
    return s + ")";
}

namespace {

std::string decode_string_literal(const std::string& body) {
    std::vector<std::uint32_t> cps;
    auto raw = utf8_decode(body);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\\' && i + 1 < raw.size() && raw[i + 1] == 'u') {
            std::size_t j = i + 2;
            std::string hex;
            if (j < raw.size() && raw[j] == '{') {
                for (++j; j < raw.size() && raw[j] != '}'; ++j) hex += static_cast<char>(raw[j]);
                if (j < raw.size() && !hex.empty()) {
                    cps.push_back(static_cast<std::uint32_t>(std::stoul(hex, nullptr, 16)));
                    i = j;
                    continue;
                }
            } else if (j + 4 <= raw.size()) {
                for (std::size_t k = j; k < j + 4; ++k) hex += static_cast<char>(raw[k]);
                if (hex.find_first_not_of("0123456789abcdefABCDEF") == std::string::npos) {
                    cps.push_back(static_cast<std::uint32_t>(std::stoul(hex, nullptr, 16)));
                    i = j + 3;
                    continue;
                }
            }
        }
        cps.push_back(raw[i]);
    }
    return utf8_encode(cps);
}

}  // namespace

std::vector<SExpr> parse_sexprs(const std::string& text) {
    std::vector<SExpr> stack(1);
    stack[0].is_list = true;
    std::size_t i = 0;
    while (i < text.size()) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c))) {
            ++i;
        } else if (c == ';') {
            while (i < text.size() && text[i] != '\n') ++i;
        } else if (c == '(') {
            stack.emplace_back();
            stack.back().is_list = true;
            ++i;
        } else if (c == ')') {
            if (stack.size() < 2) throw std::runtime_error("unbalanced ')' in solver output");
            SExpr done = std::move(stack.back());
            stack.pop_back();
            stack.back().items.push_back(std::move(done));
            ++i;
        } else if (c == '"') {
            std::string body;
            ++i;
            while (true) {
                if (i >= text.size()) throw std::runtime_error("unterminated string in solver output");
                if (text[i] == '"') {
                    if (i + 1 < text.size() && text[i + 1] == '"') {
                        body += '"';
                        i += 2;
                        continue;
                    }
                    ++i;
                    break;
                }
                body += text[i++];
            }
            SExpr s;
            s.is_string = true;
            s.atom = decode_string_literal(body);
            stack.back().items.push_back(std::move(s));
        } else if (c == '|') {
            std::size_t j = text.find('|', i + 1);
            if (j == std::string::npos) throw std::runtime_error("unterminated symbol in solver output");
            SExpr s;
            s.atom = text.substr(i + 1, j - i - 1);
            stack.back().items.push_back(std::move(s));
            i = j + 1;
        } else {
            std::size_t j = i;
            while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j])) && text[j] != '(' &&
                   text[j] != ')' && text[j] != '"')
                ++j;
            SExpr s;
            s.atom = text.substr(i, j - i);
            stack.back().items.push_back(std::move(s));
            i = j;
        }
    }
    if (stack.size() != 1) throw std::runtime_error("unbalanced '(' in solver output");
    return std::move(stack[0].items);
}

std::string smt_int(const BigInt& v) {
    if (v < 0) return "(- " + BigInt(-v).str() + ")";
    return v.str();
}

std::optional<BigInt> sexpr_int(const SExpr& e) {
    if (!e.is_list) {
        if (e.is_string || e.atom.empty() || e.atom.find_first_not_of("0123456789") != std::string::npos) return std::nullopt;
        return BigInt(e.atom);
    }
    if (e.items.size() == 2 && e.items[0].atom == "-") {
        auto v = sexpr_int(e.items[1]);
        if (v) return BigInt(-*v);
    }
    if (e.items.size() == 3 && e.items[0].atom == "/") {
        auto a = sexpr_int(e.items[1]);
        auto b = sexpr_int(e.items[2]);
        if (a && b && *b != 0 && *a % *b == 0) return BigInt(*a / *b);
    }
    return std::nullopt;
}

}  // namespace lx
