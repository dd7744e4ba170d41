#pragma once

#include <cstddef>

#include "lx/check.hpp"
#include "lx/ir.hpp"

namespace lx {

struct LowerOptions {
    // Code after a join point is copied into each predecessor when it has
    // at most this many IR nodes, and moved into a continuation otherwise.
    std::size_t duplicate_limit = 8;
};

// Lowers a checked program to IR. The surface program is not modified.
// Deferred functions are skipped.
IrProgram lower_program(const CheckedProgram& p, const LowerOptions& opts = {});

}  // namespace lx
