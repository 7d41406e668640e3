#pragma once
// AST for the supported Cypher subset. Shapes mirror the grammar: one or
// more MATCH clauses (each a list of comma-separated paths), an optional
// WHERE tree, RETURN items, ORDER BY keys, SKIP and LIMIT.

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "kgqa/value.hpp"

namespace kgqa::gql {

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

struct Expr {
    enum class Kind {
        Literal,   // literal: scalar constant
        Param,     // name: $name placeholder
        Var,       // name: bound pattern variable
        Prop,      // var.name: property access
        TypeOf,    // type(var): relationship type
        Count,     // count(lhs) / count(DISTINCT lhs) / count(*)
        Compare,   // lhs op rhs with op in {=, <>, <, <=, >, >=}
        And, Or,   // lhs, rhs
        Not,       // lhs
    };

    Kind kind;
    Value literal = Null{};
    std::string name;      // Param/Var name, Prop property name
    std::string var;       // Prop and TypeOf base variable
    std::string op;        // Compare operator spelling
    bool distinct = false; // Count
    bool star = false;     // Count(*)
    ExprPtr lhs, rhs;
};

ExprPtr make_literal(Value v);
ExprPtr make_param(std::string name);
ExprPtr make_var(std::string name);
ExprPtr make_prop(std::string var, std::string prop);

// Does the expression contain a count() anywhere?
bool contains_aggregate(const Expr& e);

enum class RelDir { Out, In, Undirected };

struct NodePattern {
    std::string var;    // empty when anonymous
    std::string label;  // empty when unlabeled
    std::vector<std::pair<std::string, ExprPtr>> props;  // inline equalities
};

struct RelPattern {
    std::string var;
    std::string type;
    RelDir dir = RelDir::Undirected;
};

// nodes.size() == rels.size() + 1
struct PathPattern {
    std::vector<NodePattern> nodes;
    std::vector<RelPattern> rels;
};

struct MatchClause {
    std::vector<PathPattern> paths;
};

struct ReturnItem {
    ExprPtr expr;
    std::optional<std::string> alias;
};

struct OrderItem {
    ExprPtr expr;
    bool desc = false;
};

struct QueryAst {
    std::vector<MatchClause> matches;
    ExprPtr where;  // null when absent; multiple WHEREs are AND-folded
    std::vector<ReturnItem> returns;
    std::vector<OrderItem> order_by;
    std::optional<int64_t> skip;
    std::optional<int64_t> limit;
};

// Canonical single-line rendering; parse(print_query(ast)) reproduces ast.
std::string print_query(const QueryAst& ast);
std::string print_expr(const Expr& e);

}  // namespace kgqa::gql
