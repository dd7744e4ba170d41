#pragma once

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lx/source.hpp"
#include "lx/types.hpp"

namespace lx {

struct TypeExpr;
struct Expr;
struct Stmt;
using TypeExprPtr = std::shared_ptr<TypeExpr>;
using ExprPtr = std::shared_ptr<Expr>;
using StmtPtr = std::shared_ptr<Stmt>;
using Block = std::vector<StmtPtr>;

struct TypeExpr {
    enum class Kind { Name, Generic, Tuple, Record, Union };
    Kind kind = Kind::Name;
    std::string name;  // Name, Generic (List/Map/StringOf/Ok/Err/Result)
    std::vector<TypeExprPtr> args;
    std::vector<std::string> fields;  // Record, parallel to args
    SourcePos pos;
};

struct FlowOp {
    FlowTest::Kind kind = FlowTest::Kind::None;
    bool negated = false;
    TypeExprPtr type;  // Type
    ExprPtr literal;   // Literal
};

enum class LitKind { None, True, False, Int, Float, Decimal, Rational, String, TypedString, TypedNumber };

enum class ExprKind {
    Literal,
    Var,         // identifiers, `this`, `$`, `$f`, `$return`
    Elided,      // `...`
    Tuple,
    Record,
    Construct,   // `T{...}`, `List<T>{...}`, `Map<K,V>{k => v}`
    BulkUpdate,  // `e.{f = v}`
    Index,       // `e.0`
    Field,       // `e.f`
    Unary,
    Binary,
    Call,        // `f(...)`
    StaticCall,  // `T::f(...)`
    MethodCall,  // `e.m(...)`
    Lambda,      // `fn(x) => e`, `pred(x) => e`
    FlowTest,    // `e?op`
    FlowCast,    // `e@op`
    FlowEarly,   // `e??op`, `e@@op`
    IfExpr,      // `if c then a else b`
    LetIn,       // produced by lowering only
};

// How the checker resolved a call-like or access expression.
enum class Resolution {
    None,
    Function,      // user function, method, static function or const (target = IR name)
    Dispatch,      // method call through a concept (target = dispatcher name)
    Functor,       // List/Map functor (target = functor name)
    StringConcat,  // `String::concat`
    Inject,        // `T::from(e)`
    Extract,       // `e.value()`
};

struct Expr {
    ExprKind kind = ExprKind::Literal;
    SourcePos pos;

    // Literal: text is the spelling without suffix (strings unescaped);
    // suffix holds `i n I N f d R` or the type name of typed literals.
    LitKind lit = LitKind::None;
    std::string text;
    std::string suffix;

    // Var/Field/Call/MethodCall/StaticCall name, Unary/Binary operator,
    // FlowEarly operator (`??` or `@@`), LetIn binder.
    std::string name;
    std::string scope;  // StaticCall namespace, e.g. `List` in `List::zip`
    int index = 0;      // Index
    std::vector<ExprPtr> args;
    // Record/Construct/BulkUpdate field names (empty = positional),
    // Lambda parameter names.
    std::vector<std::string> names;
    std::vector<TypeExprPtr> type_args;  // generics; Lambda parameter types (may be null)
    TypeExprPtr type;                    // Construct target; LetIn binder type
    FlowOp flow;
    bool recursive_tag = false;
    bool ref_tag = false;
    bool is_pred = false;
    bool map_entries = false;  // Construct with `k => v` entries (args alternate)
    bool no_parens = false;    // StaticCall naming a const: `T::c`

    // Filled in by the checker.
    Type ty;
    Type aux_ty;  // FlowTest/FlowCast/FlowEarly: subject type; Field: receiver type
    Resolution res = Resolution::None;
    std::string target;
    std::vector<Type> param_tys;  // Lambda parameters
    FlowTest test;                // resolved flow op / match arm test
};

enum class StmtKind { Let, Var, Assign, If, Match, Return, Assert, Narrow, ExprStmt, Block, Defer, Elided };

struct IfBranch {
    ExprPtr cond;                // plain condition or flow subject
    std::optional<FlowOp> flow;  // `if op (e)` form binds `$`
    Block body;
    FlowTest test;  // filled in by the checker for the flow form
    Type pass_ty;
    Type fail_ty;
};

struct MatchArm {
    enum class Kind { Type, Literal, Wildcard };
    Kind kind = Kind::Type;
    TypeExprPtr type;
    ExprPtr literal;
    Block body;  // a single statement arm holds one element
    bool braced = false;
    SourcePos pos;
    Type ty;  // filled in by the checker: the type `$` is bound to
};

struct Stmt {
    StmtKind kind = StmtKind::ExprStmt;
    SourcePos pos;
    std::string name;  // Let/Var/Assign/Narrow target
    TypeExprPtr type;  // declared type of Let/Var
    ExprPtr expr;      // initializer, value, condition, returned value, match subject
    std::optional<CheckLevel> level;  // Assert
    FlowOp flow;                      // Narrow
    bool early = false;               // Narrow written with `@@`
    std::vector<IfBranch> branches;   // If: if + elif chain
    std::optional<Block> else_body;
    std::vector<MatchArm> arms;
    Block body;  // Block

    // Filled in by the checker: the narrowed type for Narrow, the declared
    // type for Let/Var.
    Type ty;
    Type aux_ty;    // Narrow: the subject's type before narrowing
    FlowTest test;  // Narrow
    bool exhaustive = false;  // Match
    // If/Match: variables definitely assigned after the join, with their
    // merged types.
    std::map<std::string, Type> after;
};

struct Condition {
    std::optional<CheckLevel> level;
    ExprPtr expr;
    SourcePos pos;
};

struct Example {
    std::vector<ExprPtr> args;
    ExprPtr result;
    SourcePos pos;
};

struct Param {
    std::string name;
    TypeExprPtr type;
    SourcePos pos;
};

enum class BodyKind { None, Block, Defer, Elided };

struct FunctionDecl {
    std::string name;
    bool is_abstract = false;
    bool is_override = false;
    bool is_recursive = false;
    bool is_ref = false;
    std::vector<Param> params;
    TypeExprPtr result;  // null = inferred (methods only)
    std::vector<Condition> requires_;
    std::vector<Condition> ensures;
    std::vector<Example> examples;
    BodyKind body_kind = BodyKind::None;
    Block body;
    SourcePos pos;
};

enum class MemberKind { Field, Const, Method, Function, Invariant, Validate };

struct Member {
    MemberKind kind = MemberKind::Field;
    std::string name;
    TypeExprPtr type;  // Field, Const
    bool is_private = false;
    bool field_keyword = true;  // Field written with `field`
    std::optional<CheckLevel> level;  // Invariant/Validate
    ExprPtr expr;  // Const value, Invariant/Validate condition
    std::shared_ptr<FunctionDecl> fn;  // Method/Function
    SourcePos pos;
};

struct DatatypeCase {
    std::string name;
    std::vector<Member> members;
    SourcePos pos;
};

enum class DeclKind { Validator, Typedecl, Concept, Entity, Datatype, Function, Const, Statement };

struct Decl {
    DeclKind kind = DeclKind::Function;
    std::string name;
    SourcePos pos;
    std::string regex;                  // Validator
    TypeExprPtr type;                   // Typedecl base, Const type
    std::vector<std::string> provides;  // Concept/Entity/Datatype
    std::vector<Member> members;        // Concept/Entity; Typedecl invariants; Datatype trailing block
    std::vector<Member> using_members;  // Datatype `using {...}`
    bool has_using = false;
    bool has_trailing = false;
    std::vector<DatatypeCase> cases;    // Datatype
    std::shared_ptr<FunctionDecl> fn;   // Function
    ExprPtr expr;                       // Const value
    StmtPtr stmt;                       // top-level Statement
};

struct SurfaceProgram {
    std::string file;
    std::vector<Decl> decls;
};

std::string render_type(const TypeExpr& t);
std::string render_flow(const FlowOp& f);
std::string render_expr(const Expr& e);
std::string render(const SurfaceProgram& p);

// Position-free structural dump, used to compare trees.
std::string dump(const SurfaceProgram& p);
bool structurally_equal(const SurfaceProgram& a, const SurfaceProgram& b);

ExprPtr make_expr(ExprKind k, SourcePos pos);
StmtPtr make_stmt(StmtKind k, SourcePos pos);
TypeExprPtr make_type_name(std::string name, SourcePos pos);

}  // namespace lx
