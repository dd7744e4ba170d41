#pragma once

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "lx/value.hpp"

namespace lx {

enum class ErrorCode {
    AssertFail,
    PreconditionFail,
    PostconditionFail,
    InvariantFail,
    ValidateFail,
    Overflow,
    NatUnderflow,
    DivZero,
    CastFail,
    IndexOutOfBounds,
    EmptyCollection,
    RegexMismatch,
    RecursionBudgetExceeded,
};

const char* error_code_name(ErrorCode c);
std::optional<ErrorCode> parse_error_code(const std::string& s);
std::vector<ErrorCode> all_error_codes();

// A runtime fault raised by a primitive operation; the evaluator attaches
// the site where it happened.
struct Fault : std::runtime_error {
    ErrorCode code;
    Fault(ErrorCode c, const std::string& msg) : std::runtime_error(msg), code(c) {}
};

// Checked arithmetic on two values of the same primitive numeric kind.
// op is one of + - * / %.
Value arith(const std::string& op, const Value& a, const Value& b);
Value negate(const Value& a);
// -1, 0, 1 for same-kind numeric or string operands.
int compare_ordered(const Value& a, const Value& b);
Value zero_of(const Type& numeric);
Value concat_strings(const std::vector<Value>& parts);

// Builds a numeric value of `t` from literal text (no suffix); throws Fault
// (overflow) when the text is out of range for the type.
Value numeric_from_text(const Type& t, const std::string& text);

// Functor catalog shared by the IR evaluator and the surface interpreter.
struct FunctorSig {
    std::string name;
    bool on_map = false;
    int containers = 1;   // leading container arguments
    int extra = 0;        // trailing plain arguments
    int lambda_arity = 0;  // 0 = not specialized
};

const std::vector<FunctorSig>& list_functors();
const std::vector<FunctorSig>& map_functors();
const FunctorSig* find_functor(bool on_map, const std::string& name);

using SpecFn = std::function<Value(const std::vector<Value>&)>;

// Evaluates a functor. `args` holds containers followed by extra arguments;
// `fn` is the specialization (may be empty). `result` is the static result
// type, used to type constructed collections.
Value eval_functor(const std::string& name, bool on_map, const std::vector<Value>& args, const SpecFn& fn,
                   const Type& result);

}  // namespace lx
