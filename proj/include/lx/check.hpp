#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lx/ast.hpp"
#include "lx/source.hpp"
#include "lx/types.hpp"

namespace lx {

enum class FnKind {
    Function,    // top-level function
    Method,      // `this` is the first parameter
    Static,      // `function` member of a nominal type
    Const,       // nullary function computing a constant
    Invariant,   // entity/concept invariant over the field names
    Validate,    // entity/concept validate over the field names
    TypedeclInv, // typedecl invariant over `$value`
    Main,        // synthesized from top-level statements
};

const char* fn_kind_name(FnKind k);

struct CheckedCondition {
    CheckLevel level = CheckLevel::Release;
    ExprPtr expr;
    SourcePos pos;
};

struct CheckedFunction {
    std::string name;   // IR name: `f`, `T::m`, `T$inv$0`
    std::string owner;  // declaring nominal/typedecl, or empty
    FnKind kind = FnKind::Function;
    std::vector<std::pair<std::string, Type>> params;  // methods: `this` first
    Type result;
    bool is_recursive = false;
    bool is_ref = false;
    bool deferred = false;
    std::vector<CheckedCondition> requires_;
    std::vector<CheckedCondition> ensures;
    std::vector<Example> examples;
    Block body;    // statement bodies
    ExprPtr expr;  // expression bodies (consts, invariants, validates)
    SourcePos pos;
};

// One implementation choice of a concept method dispatcher.
struct DispatchCase {
    std::string entity;
    std::string target;
};

struct Dispatcher {
    std::string name;    // `R::m$dispatch`
    std::string method;  // `R::m` as written
    std::vector<std::pair<std::string, Type>> params;
    Type result;
    std::vector<DispatchCase> cases;
    bool is_recursive = false;
    SourcePos pos;
};

// A typechecked program: every expression carries its type and resolution.
struct CheckedProgram {
    std::string file;
    TypeUniverse universe;
    std::map<std::string, CheckedFunction> functions;
    std::map<std::string, Dispatcher> dispatchers;
    std::vector<std::string> order;  // functions in declaration order
};

// Builds the nominal universe; reports problems into diags.
TypeUniverse build_universe(const SurfaceProgram& program, Diagnostics& diags);

// Full static pipeline: universe, typing, lambda and recursion checks.
// Warnings are appended to diags; throws CompileError if any errors.
CheckedProgram check_program(const SurfaceProgram& program, Diagnostics& diags);

// parse + check in one step.
CheckedProgram check_source(const std::string& source, const std::string& file, Diagnostics& diags);

// Types a constant expression (an `examples` entry) against `expected`.
void check_constant_expr(const CheckedProgram& prog, Expr& e, const Type& expected, Diagnostics& diags);

// Resolves canonical type spellings (as produced by Type::str()).
std::optional<Type> parse_type_string(const std::string& s, const TypeUniverse& u);

}  // namespace lx
