#pragma once
// Query evaluation against an immutable PropertyGraph. Matching is
// homomorphic on nodes with per-MATCH-clause relationship uniqueness;
// comparisons involving null or mismatched types are false.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "kgqa/gql/ast.hpp"
#include "kgqa/graph.hpp"

namespace kgqa::gql {

struct EvalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ResultTable {
    std::vector<std::string> columns;
    std::vector<std::vector<Value>> rows;
};

using Params = std::map<std::string, Value>;

// Executes a parsed query. row_cap is a post-hoc cap applied after
// ORDER BY / SKIP / LIMIT (the tool-level limit argument). Throws EvalError
// on unbound variables, type(..) of a node variable, a variable used as both
// node and relationship, a missing parameter, or an ORDER BY key that cannot
// be resolved against an aggregated projection.
ResultTable execute(const QueryAst& ast, const PropertyGraph& graph,
                    const Params& params = {},
                    std::optional<size_t> row_cap = std::nullopt);

}  // namespace kgqa::gql
