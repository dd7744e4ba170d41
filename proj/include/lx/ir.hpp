#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "lx/ops.hpp"
#include "lx/source.hpp"
#include "lx/types.hpp"
#include "lx/value.hpp"

namespace lx {

enum class IrKind {
    Const,    // primitive literal
    Var,
    Let,      // name; kids: bound, body
    Ite,      // kids: cond, then, else
    Call,     // name = function
    Functor,  // name = functor, spec = specialization fn; kids: captures then containers/extras
    Tuple,
    Record,   // names parallel to kids, sorted
    Entity,   // type names the entity (or Ok/Err); check = run invariants
    List,
    Map,      // kids alternate key, value
    Access,   // index >= 0: tuple element, else field `name`
    Is,       // test type
    As,       // test type; check = false marks a statically safe cast
    Inject,   // name = typedecl or validator
    Extract,
    Eq,
    Neq,
    Prim,     // name = + - * / % neg < <= > >= ! concat
    And,
    Or,
    Implies,
    Assert,   // level, code; kids: cond, body
    Error,    // code
};

const char* ir_kind_name(IrKind k);

struct IrNode;
using IrPtr = std::shared_ptr<IrNode>;

struct IrNode {
    IrKind kind = IrKind::Const;
    Type type;
    SourcePos pos;
    Value value;
    std::string name;
    std::string spec;
    int ncaptures = 0;
    bool on_map = false;
    int index = -1;
    std::vector<std::string> names;
    bool check = true;
    Type test;
    CheckLevel level = CheckLevel::Release;
    ErrorCode code = ErrorCode::AssertFail;
    std::vector<IrPtr> kids;

    // Site path, e.g. `b.0.2`; set by finalize_paths.
    std::string path;
};

IrPtr ir_node(IrKind k, Type t, SourcePos pos, std::vector<IrPtr> kids = {});
IrPtr ir_const(Value v, Type t, SourcePos pos);
IrPtr ir_var(const std::string& name, Type t, SourcePos pos);
IrPtr ir_let(const std::string& name, IrPtr bound, IrPtr body);
IrPtr ir_ite(IrPtr c, IrPtr a, IrPtr b, Type t);
IrPtr ir_call(const std::string& fn, std::vector<IrPtr> args, Type t, SourcePos pos);
IrPtr ir_prim(const std::string& op, std::vector<IrPtr> args, Type t, SourcePos pos);
IrPtr ir_bool(bool b, SourcePos pos);
IrPtr ir_not(IrPtr e);
IrPtr ir_and(IrPtr a, IrPtr b);
IrPtr ir_is(IrPtr e, Type test);
IrPtr ir_as(IrPtr e, Type test, bool checked);
IrPtr ir_access_field(IrPtr e, const std::string& field, Type t);
IrPtr ir_access_index(IrPtr e, int index, Type t);
IrPtr ir_clone(const IrPtr& e);

struct IrCondition {
    CheckLevel level = CheckLevel::Release;
    IrPtr expr;
    SourcePos pos;
};

struct IrFunction {
    std::string name;
    std::vector<std::pair<std::string, Type>> params;
    Type result;
    std::vector<IrCondition> requires_;
    std::vector<IrCondition> ensures;  // may reference `$return`
    IrPtr body;
    bool is_recursive = false;
    SourcePos pos;
};

struct IrProgram {
    std::string file;
    TypeUniverse universe;
    std::map<std::string, IrFunction> functions;
    std::vector<std::string> entries;  // user-visible functions, sorted
};

// Assigns site paths: `b` body, `r<i>` requires, `e<i>` ensures, then
// pre-order child indices.
void finalize_paths(IrFunction& f);
void finalize_paths(IrProgram& p);

// Error sites are named `function:path`, with suffixes `/pre<i>` on calls
// and `/inv<k>` on checked constructors.
std::string site_name(const std::string& fn, const std::string& path);

std::string serialize_ir(const IrProgram& p);
// Parses serialized IR; the type universe is rebuilt from `universe_source`
// (the surface program the IR was lowered from) by the caller. Throws
// CompileError with line numbers on malformed text.
IrProgram parse_ir(const std::string& text, const TypeUniverse& universe);

bool ir_equal(const IrNode& a, const IrNode& b, bool with_pos = true);
bool ir_equal(const IrProgram& a, const IrProgram& b);

// Equality modulo a consistent renaming of let binders and parameters.
bool ir_alpha_equal(const IrNode& a, const IrNode& b);

struct IrViolation {
    std::string function;
    std::string path;
    std::string rule;
};

std::vector<IrViolation> validate_ir(const IrProgram& p);

// Number of nodes in a tree.
std::size_t ir_size(const IrNode& e);

// Compact single-line rendering (no types or positions), for readable tests.
std::string ir_pretty(const IrNode& e);

}  // namespace lx
