#pragma once

#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "lx/ir.hpp"
#include "lx/ops.hpp"
#include "lx/value.hpp"

namespace lx {

struct CheckConfig {
    std::set<CheckLevel> levels{CheckLevel::Test, CheckLevel::Release};
    int recursion_budget = 10000;

    // Safety checks are not configurable.
    bool enabled(CheckLevel l) const { return l == CheckLevel::Safety || levels.count(l) > 0; }

    // Enables `l` and every coarser level.
    static CheckConfig from_level(CheckLevel l);
    static CheckConfig all() { return from_level(CheckLevel::Spec); }
};

struct ErrorInfo {
    ErrorCode code = ErrorCode::AssertFail;
    std::string site;  // `function:path`
    std::string message;
    SourcePos pos;
};

struct Outcome {
    std::optional<Value> value;
    std::optional<ErrorInfo> error;

    bool ok() const { return value.has_value(); }
    static Outcome of(Value v) { return Outcome{std::move(v), std::nullopt}; }
    static Outcome fail(ErrorInfo e) { return Outcome{std::nullopt, std::move(e)}; }
};

// `value 5i` or `error overflow at abs:b.1 (file:3:9): message`.
std::string outcome_str(const Outcome& o);
// Position- and site-free form used by differential tests.
std::string outcome_key(const Outcome& o);

// Thrown inside evaluators, converted to an Outcome at the boundary.
struct EvalError {
    ErrorInfo info;
};

class Evaluator {
public:
    Evaluator(const IrProgram& program, CheckConfig cfg);

    Outcome call(const std::string& entry, const std::vector<Value>& args);
    Outcome construct_checked(const std::string& type_name, const std::vector<Value>& fields);
    // Runs every check reachable from a value, children first: typedecl
    // invariants, validator regexes, entity invariants, and validates when
    // `with_validates` is set.
    Outcome check_value(const Value& v, bool with_validates);

    // Deepest call nesting reached so far.
    int max_depth() const { return max_depth_; }

private:
    struct Frame {
        const IrFunction* fn;
        std::vector<std::pair<std::string, Value>> env;
    };

    const IrProgram& p_;
    CheckConfig cfg_;
    int depth_ = 0;
    int max_depth_ = 0;

    Value invoke(const std::string& fn, std::vector<Value> args, const std::string& call_site, const SourcePos& pos);
    Value eval(const IrNode& e, Frame& f);
    Value construct(const Type& t, std::vector<Value> fields, const std::string& site, const SourcePos& pos);
    Value inject(const std::string& name, const Value& v, const std::string& site, const SourcePos& pos);
    void run_entity_checks(const Value& ent, const std::vector<CheckRef>& checks, ErrorCode code, const std::string& site,
                           const SourcePos& pos, const char* tag);
    [[noreturn]] void raise(ErrorCode c, const std::string& site, const SourcePos& pos, const std::string& msg);
    std::string site_of(const Frame& f, const IrNode& e) const;
};

Outcome evaluate(const IrProgram& program, const std::string& entry, const std::vector<Value>& args,
                 const CheckConfig& cfg = {});
Outcome construct_checked(const IrProgram& program, const std::string& type_name, const std::vector<Value>& fields,
                          const CheckConfig& cfg = {});
// Parses the external JSON document as `type_name`, then runs invariants
// and validates. Shape errors are reported as validate-fail.
Outcome validate_external(const IrProgram& program, const std::string& type_name, const std::string& document,
                          const CheckConfig& cfg = {});
// Continuations, lambdas, check functions and dispatchers have no surface
// counterpart; they do not count against the recursion budget.
bool is_generated_function(const std::string& name);
bool eval_string_validator(const TypeUniverse& u, const std::string& validator, const std::string& s);

// Field lookup on records, entities and Ok/Err values.
const Value& field_of(const Value& v, const std::string& field, const TypeUniverse& u);

// Runs `fn` on a thread with a large stack and waits for it; deep but
// bounded recursion in the evaluators stays within this stack.
void run_with_large_stack(const std::function<void()>& fn);

}  // namespace lx
