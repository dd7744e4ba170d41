#pragma once

#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "lx/source.hpp"

namespace lx {

enum class TypeKind {
    Never,  // uninhabited; only produced by narrowing
    None,
    Bool,
    Nat,
    Int,
    BigNat,
    BigInt,
    Float,
    Decimal,
    Rational,
    String,
    ASCIIString,
    StringOf,
    Typedecl,
    Tuple,
    Record,
    Union,
    Nominal,
    List,
    Map,
    Ok,
    Err,
};

struct TypeNode;

// Immutable, canonicalized type signature. Two types are equal iff their
// canonical spellings are equal; unions are flattened, deduplicated and
// sorted, record fields are sorted by name.
class Type {
public:
    Type();  // None

    static Type never();
    static Type none();
    static Type boolean();
    static Type nat();
    static Type int_();
    static Type big_nat();
    static Type big_int();
    static Type float_();
    static Type decimal();
    static Type rational();
    static Type string();
    static Type ascii_string();
    static Type string_of(std::string validator);
    static Type typedecl(std::string name);
    static Type nominal(std::string name);
    static Type tuple(std::vector<Type> elems);
    static Type record(std::vector<std::pair<std::string, Type>> fields);
    static Type union_of(std::vector<Type> members);
    static Type list(Type elem);
    static Type map(Type key, Type value);
    static Type ok(Type value);
    static Type err(Type value);
    static Type result(Type ok_type, Type err_type);
    static Type primitive(TypeKind kind);

    TypeKind kind() const;
    const std::string& name() const;            // StringOf/Typedecl/Nominal
    const std::vector<Type>& args() const;      // Tuple elems, Union members, List/Map/Ok/Err params
    const std::vector<std::string>& field_names() const;  // Record, parallel to args()
    const std::string& str() const;

    bool is(TypeKind k) const { return kind() == k; }
    bool is_never() const { return kind() == TypeKind::Never; }
    bool is_union() const { return kind() == TypeKind::Union; }
    bool is_numeric() const;
    bool is_integral() const;
    bool is_signed() const;

    // Union members, or {*this} for a non-union type.
    std::vector<Type> members() const;
    std::optional<Type> record_field(const std::string& name) const;

    bool operator==(const Type& o) const;
    bool operator!=(const Type& o) const { return !(*this == o); }
    bool operator<(const Type& o) const;

private:
    explicit Type(std::shared_ptr<const TypeNode> n) : node_(std::move(n)) {}
    std::shared_ptr<const TypeNode> node_;
    friend Type make_type(TypeNode);
};

const char* type_kind_name(TypeKind k);

enum class CheckLevel { Spec, Debug, Test, Release, Safety };

const char* check_level_name(CheckLevel l);
std::optional<CheckLevel> parse_check_level(const std::string& s);

struct FieldInfo {
    std::string name;
    Type type;
    bool is_private = false;
    std::string declaring_type;
    SourcePos pos;
};

// A generated check function together with the level that gates it.
struct CheckRef {
    CheckLevel level = CheckLevel::Release;
    std::string function;  // IR function name, e.g. `Node$inv$0`
    SourcePos pos;
};

struct MethodInfo {
    std::string name;
    std::string declaring_type;
    bool is_abstract = false;
    bool is_override = false;
    bool is_recursive = false;
    bool is_ref = false;
    bool is_static = false;  // `function` member
    std::vector<std::pair<std::string, Type>> params;
    std::optional<Type> result;  // empty until inferred
    SourcePos pos;
};

struct NominalInfo {
    std::string name;
    bool is_concept = false;
    std::vector<std::string> provides;  // direct, declaration order
    std::vector<FieldInfo> own_fields;
    std::vector<FieldInfo> fields;      // constructor order: inherited first
    std::map<std::string, MethodInfo> methods;  // declared in this type
    std::vector<CheckRef> invariants;   // own, declaration order
    std::vector<CheckRef> validates;    // own, declaration order
    std::vector<std::string> consts;    // member const names
    SourcePos pos;

    const FieldInfo* field(const std::string& n) const;
};

struct TypedeclInfo {
    std::string name;
    Type base;
    std::vector<CheckRef> invariants;  // each takes the base value as `$value`
    SourcePos pos;
};

struct ValidatorInfo {
    std::string name;
    std::string regex;  // source text between the slashes
    SourcePos pos;
};

// The nominal world of one program. Immutable once checking completes.
class TypeUniverse {
public:
    std::map<std::string, NominalInfo> nominals;
    std::map<std::string, TypedeclInfo> typedecls;
    std::map<std::string, ValidatorInfo> validators;

    const NominalInfo* nominal(const std::string& n) const;
    const TypedeclInfo* typedecl(const std::string& n) const;
    const ValidatorInfo* validator(const std::string& n) const;
    bool is_concept(const std::string& n) const;
    bool is_entity(const std::string& n) const;

    // Reflexive-transitive closure of `provides`.
    bool provides(const std::string& entity_or_concept, const std::string& concept_name) const;
    std::vector<std::string> supertypes(const std::string& n) const;  // closure without self, sorted
    // Concrete entities whose provides closure contains the concept, sorted by name.
    std::vector<std::string> entities_providing(const std::string& concept_name) const;

    // All invariants that run when constructing `entity`: provided concepts
    // first (depth-first in provides order), then the entity's own.
    std::vector<CheckRef> construction_invariants(const std::string& entity) const;
    std::vector<CheckRef> construction_validates(const std::string& entity) const;

    // Finds a method visible on `type_name` (own, then inherited).
    const MethodInfo* find_method(const std::string& type_name, const std::string& method) const;

    // Typedecl base with typedecl chains resolved one level.
    Type typedecl_base(const std::string& n) const;

    // Expands unions and concepts into concrete member types (entities,
    // primitives, structural types), sorted and deduplicated.
    std::vector<Type> concrete_members(const Type& t) const;
};

bool subtype(const Type& a, const Type& b, const TypeUniverse& u);
// Union of two types with concept re-folding left alone.
Type join_types(const Type& a, const Type& b);
bool is_key_type(const Type& t, const TypeUniverse& u);
// Numeric primitive type underlying a (possibly typedecl) type, if any.
std::optional<Type> numeric_base(const Type& t, const TypeUniverse& u);

// Flow tests as written after `?`, `@`, `??`, `@@`, `if`.
struct FlowTest {
    enum class Kind { None, Some, Ok, Err, Result, Type, Literal };
    Kind kind = Kind::None;
    bool negated = false;
    Type type;  // Type: the tested type; Literal: the literal's type
};

std::string flow_test_str(const FlowTest& f);

struct FlowSplit {
    Type pass;  // Never when no value can pass
    Type fail;  // Never when every value passes
};

// Splits the subject type into the part satisfying the test and the rest.
// Literal tests leave the subject's full type on the fail side.
FlowSplit flow_narrow(const Type& subject, const FlowTest& test, const TypeUniverse& u);

}  // namespace lx
