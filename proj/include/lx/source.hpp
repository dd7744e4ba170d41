#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace lx {

struct SourcePos {
    std::string file;
    int line = 1;
    int column = 1;

    bool operator==(const SourcePos&) const = default;
};

enum class Severity { Error, Warning, Note };

const char* severity_name(Severity s);

struct Diagnostic {
    Severity severity = Severity::Error;
    SourcePos pos;
    std::string message;
};

std::string format_diagnostic(const Diagnostic& d);

// Ordered collection of diagnostics emitted by one compilation stage.
class Diagnostics {
public:
    void error(const SourcePos& pos, std::string message);
    void warning(const SourcePos& pos, std::string message);
    void note(const SourcePos& pos, std::string message);
    void append(const Diagnostics& other);

    bool has_errors() const;
    std::size_t error_count() const;
    bool empty() const { return items_.empty(); }
    const std::vector<Diagnostic>& items() const { return items_; }

    // One line per diagnostic: `file:line:col: severity: message`.
    std::string str() const;
    void print(std::ostream& out) const;

private:
    std::vector<Diagnostic> items_;
};

// Thrown when a stage cannot continue; carries everything reported so far.
class CompileError : public std::exception {
public:
    explicit CompileError(Diagnostics diags);
    const Diagnostics& diagnostics() const { return diags_; }
    const char* what() const noexcept override { return text_.c_str(); }

private:
    Diagnostics diags_;
    std::string text_;
};

}  // namespace lx
