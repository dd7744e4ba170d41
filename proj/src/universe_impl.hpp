#pragma once

#include <optional>

#include "lx/ast.hpp"
#include "lx/types.hpp"

namespace lx {

std::optional<Type> resolve_type_expr(const TypeExpr& t, const TypeUniverse& u, Diagnostics& diags);

}  // namespace lx
