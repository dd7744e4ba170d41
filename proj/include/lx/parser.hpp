#pragma once

#include <string>
#include <vector>

#include "lx/ast.hpp"
#include "lx/lexer.hpp"

namespace lx {

// Parses a token stream. Declaration-level errors are collected and parsing
// resumes at the next declaration; throws CompileError if any were found.
SurfaceProgram parse_program(const std::vector<Token>& tokens, const std::string& file = "");

// tokenize + parse_program.
SurfaceProgram parse_source(const std::string& source, const std::string& file = "");

// Parses a statement block body (the text between braces) for splicing.
Block parse_block_text(const std::string& source, const std::string& file = "");

}  // namespace lx
