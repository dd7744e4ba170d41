#include "lx/source.hpp"

#include <sstream>

namespace lx {

const char* severity_name(Severity s) {
    switch (s) {
        case Severity::Error:
            return "error";
        case Severity::Warning:
            return "warning";
        case Severity::Note:
            return "note";
    }
    return "error";
}

std::string format_diagnostic(const Diagnostic& d) {
    std::ostringstream out;
    out << (d.pos.file.empty() ? "<input>" : d.pos.file) << ':' << d.pos.line << ':' << d.pos.column << ": "
        << severity_name(d.severity) << ": " << d.message;
    return out.str();
}

void Diagnostics::error(const SourcePos& pos, std::string message) {
    items_.push_back({Severity::Error, pos, std::move(message)});
}

void Diagnostics::warning(const SourcePos& pos, std::string message) {
    items_.push_back({Severity::Warning, pos, std::move(message)});
}

void Diagnostics::note(const SourcePos& pos, std::string message) {
    items_.push_back({Severity::Note, pos, std::move(message)});
}

void Diagnostics::append(const Diagnostics& other) {
    items_.insert(items_.end(), other.items_.begin(), other.items_.end());
}

bool Diagnostics::has_errors() const { return error_count() > 0; }

std::size_t Diagnostics::error_count() const {
    std::size_t n = 0;
    for (const auto& d : items_) {
        if (d.severity == Severity::Error) ++n;
    }
    return n;
}

std::string Diagnostics::str() const {
    std::string out;
    for (const auto& d : items_) {
        out += format_diagnostic(d);
        out += '\n';
    }
    return out;
}

void Diagnostics::print(std::ostream& out) const { out << str(); }

CompileError::CompileError(Diagnostics diags) : diags_(std::move(diags)), text_(diags_.str()) {}

}  // namespace lx
