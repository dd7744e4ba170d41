#pragma once

#include <string>
#include <vector>

#include "lx/check.hpp"
#include "lx/eval.hpp"

namespace lx {

// Reference interpreter over the checked surface program. It follows the
// same evaluation order and checks as the IR evaluator; error sites name
// the surface function only, so differential comparisons use outcome_key.
Outcome interpret(const CheckedProgram& program, const std::string& entry, const std::vector<Value>& args,
                  const CheckConfig& cfg = {});

}  // namespace lx
