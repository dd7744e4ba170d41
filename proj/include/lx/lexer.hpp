#pragma once

#include <string>
#include <vector>

#include "lx/source.hpp"

namespace lx {

enum class TokKind {
    Ident,
    Dollar,       // `$`, `$name`; text holds the name without `$`
    Number,       // text = digits, suffix = `i n I N f d` or empty
    Rational,     // `1/2R`; text = `1/2`
    TypedNumber,  // `10_Celsius`; text = `10`, suffix = `Celsius`
    String,       // text = unescaped contents
    TypedString,  // `"..."Name`
    Regex,        // text between the slashes
    Punct,
    End,
};

struct Token {
    TokKind kind = TokKind::End;
    std::string text;
    std::string suffix;
    SourcePos pos;
};

// Throws CompileError with positioned diagnostics on lexical errors.
std::vector<Token> tokenize(const std::string& source, const std::string& file = "");

std::string escape_string(const std::string& utf8);

}  // namespace lx
