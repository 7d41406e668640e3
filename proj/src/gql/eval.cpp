#include "kgqa/gql/eval.hpp"

#include <algorithm>
#include <functional>
#include <set>

namespace kgqa::gql {

namespace {

struct ValueLess {
    bool operator()(const Value& a, const Value& b) const {
        return compare_total(a, b) < 0;
    }
};

struct TupleLess {
    bool operator()(const std::vector<Value>& a, const std::vector<Value>& b) const {
        for (size_t i = 0; i < std::min(a.size(), b.size()); ++i) {
            int c = compare_total(a[i], b[i]);
            if (c != 0) return c < 0;
        }
        return a.size() < b.size();
    }
};

// One complete assignment of pattern variables.
struct Binding {
    std::map<std::string, uint32_t> nodes;  // var -> node index
    std::map<std::string, uint32_t> rels;   // var -> edge index
};

// Variable kinds collected from the patterns; used to validate references.
struct Scope {
    std::set<std::string> node_vars;
    std::set<std::string> rel_vars;
};

class Evaluator {
public:
    Evaluator(const QueryAst& ast, const PropertyGraph& graph, const Params& params)
        : ast_(ast), graph_(graph), params_(params) {}

    ResultTable run(std::optional<size_t> row_cap) {
        collect_scope();
        validate();
        enumerate();
        ResultTable table = project();
        order_and_slice(table);
        if (row_cap && table.rows.size() > *row_cap) table.rows.resize(*row_cap);
        return table;
    }

private:
    void collect_scope() {
        for (const auto& m : ast_.matches) {
            for (const auto& p : m.paths) {
                for (const auto& n : p.nodes) {
                    if (!n.var.empty()) scope_.node_vars.insert(n.var);
                }
                for (const auto& r : p.rels) {
                    if (!r.var.empty()) scope_.rel_vars.insert(r.var);
                }
            }
        }
        for (const auto& v : scope_.node_vars) {
            if (scope_.rel_vars.count(v)) {
                throw EvalError("variable '" + v + "' used as both node and relationship");
            }
        }
    }

    void check_expr(const Expr& e, bool allow_aggregate) {
        switch (e.kind) {
            case Expr::Kind::Literal:
                break;
            case Expr::Kind::Param:
                if (!params_.count(e.name)) throw EvalError("unknown parameter $" + e.name);
                break;
            case Expr::Kind::Var:
                if (!scope_.node_vars.count(e.name) && !scope_.rel_vars.count(e.name)) {
                    throw EvalError("unbound variable '" + e.name + "'");
                }
                break;
            case Expr::Kind::Prop:
                if (!scope_.node_vars.count(e.var) && !scope_.rel_vars.count(e.var)) {
                    throw EvalError("unbound variable '" + e.var + "'");
                }
                break;
            case Expr::Kind::TypeOf:
                if (!scope_.rel_vars.count(e.var)) {
                    throw EvalError("type() requires a relationship variable, got '" +
                                    e.var + "'");
                }
                break;
            case Expr::Kind::Count:
                if (!allow_aggregate) {
                    throw EvalError("count() is only allowed as a top-level RETURN item");
                }
                if (e.lhs) check_expr(*e.lhs, false);
                break;
            case Expr::Kind::Compare:
            case Expr::Kind::And:
            case Expr::Kind::Or:
                check_expr(*e.lhs, false);
                check_expr(*e.rhs, false);
                break;
            case Expr::Kind::Not:
                check_expr(*e.lhs, false);
                break;
        }
    }

    void validate() {
        for (const auto& m : ast_.matches) {
            for (const auto& p : m.paths) {
                for (const auto& n : p.nodes) {
                    for (const auto& [key, v] : n.props) {
                        (void)key;
                        check_expr(*v, false);
                    }
                }
            }
        }
        if (ast_.where) check_expr(*ast_.where, false);
        for (const auto& item : ast_.returns) check_expr(*item.expr, true);
        // ORDER BY keys referencing aliases are resolved later; validate the
        // rest as plain expressions.
        for (const auto& key : ast_.order_by) {
            if (key.expr->kind == Expr::Kind::Var && alias_index(key.expr->name)) continue;
            check_expr(*key.expr, true);
        }
    }

    std::optional<size_t> alias_index(const std::string& name) const {
        for (size_t i = 0; i < ast_.returns.size(); ++i) {
            if (ast_.returns[i].alias == name) return i;
        }
        return std::nullopt;
    }

    Value resolve_inline(const Expr& e) {
        if (e.kind == Expr::Kind::Literal) return e.literal;
        return params_.at(e.name);  // Param, validated above
    }

    bool node_matches(const NodePattern& pat, uint32_t node_index) {
        const NodeRecord& n = graph_.node(node_index);
        if (!pat.label.empty() && !graph_.label_matches(pat.label, n)) return false;
        for (const auto& [key, vexpr] : pat.props) {
            Value want = resolve_inline(*vexpr);
            Value have = node_prop(n, key);
            if (is_null(have) || !values_equal(have, want)) return false;
        }
        return true;
    }

    static Value node_prop(const NodeRecord& n, const std::string& key) {
        if (key == "id") return Value{n.id};
        if (key == "name") return Value{n.name};
        auto it = n.properties.find(key);
        return it == n.properties.end() ? Value{Null{}} : it->second;
    }

    static Value edge_prop(const EdgeRecord& e, const std::string& key) {
        auto it = e.properties.find(key);
        return it == e.properties.end() ? Value{Null{}} : it->second;
    }

    static bool same_family(const Value& a, const Value& b) {
        if (is_number(a) && is_number(b)) return true;
        return a.index() == b.index();
    }

    static bool values_equal(const Value& a, const Value& b) {
        if (is_null(a) || is_null(b)) return false;
        if (!same_family(a, b)) return false;
        return compare_total(a, b) == 0;
    }

    // Enumerate matches clause by clause, carrying shared variables forward.
    void enumerate() {
        Binding empty;
        std::vector<Binding> frontier = {empty};
        for (const auto& clause : ast_.matches) {
            std::vector<Binding> next;
            for (const auto& base : frontier) {
                std::set<uint32_t> used_edges;
                match_paths(clause.paths, 0, base, used_edges, next);
            }
            frontier = std::move(next);
        }
        if (ast_.where) {
            std::vector<Binding> kept;
            for (auto& b : frontier) {
                if (truthy(eval_expr(*ast_.where, b))) kept.push_back(std::move(b));
            }
            frontier = std::move(kept);
        }
        bindings_ = std::move(frontier);
    }

    void match_paths(const std::vector<PathPattern>& paths, size_t path_index,
                     const Binding& binding, std::set<uint32_t>& used_edges,
                     std::vector<Binding>& out) {
        if (path_index == paths.size()) {
            out.push_back(binding);
            return;
        }
        const PathPattern& p = paths[path_index];
        auto on_anchor = [&](uint32_t start, const Binding& b) {
            match_steps(paths, path_index, p, 0, start, b, used_edges, out);
        };
        const NodePattern& first = p.nodes[0];
        if (!first.var.empty() && binding.nodes.count(first.var)) {
            uint32_t bound = binding.nodes.at(first.var);
            if (node_matches(first, bound)) on_anchor(bound, binding);
            return;
        }
        for (uint32_t i = 0; i < graph_.nodes().size(); ++i) {
            if (!node_matches(first, i)) continue;
            Binding b = binding;
            if (!first.var.empty()) b.nodes[first.var] = i;
            on_anchor(i, b);
        }
    }

    void match_steps(const std::vector<PathPattern>& paths, size_t path_index,
                     const PathPattern& p, size_t rel_index, uint32_t at_node,
                     const Binding& binding, std::set<uint32_t>& used_edges,
                     std::vector<Binding>& out) {
        if (rel_index == p.rels.size()) {
            match_paths(paths, path_index + 1, binding, used_edges, out);
            return;
        }
        const RelPattern& rel = p.rels[rel_index];
        const NodePattern& next_node = p.nodes[rel_index + 1];
        const std::string* type_filter = rel.type.empty() ? nullptr : &rel.type;

        auto try_edge = [&](uint32_t edge_index, uint32_t neighbor) {
            if (used_edges.count(edge_index)) return;
            if (!rel.var.empty()) {
                auto it = binding.rels.find(rel.var);
                if (it != binding.rels.end() && it->second != edge_index) return;
            }
            if (!next_node.var.empty()) {
                auto it = binding.nodes.find(next_node.var);
                if (it != binding.nodes.end() && it->second != neighbor) return;
            }
            if (!node_matches(next_node, neighbor)) return;
            Binding b = binding;
            if (!rel.var.empty()) b.rels[rel.var] = edge_index;
            if (!next_node.var.empty()) b.nodes[next_node.var] = neighbor;
            used_edges.insert(edge_index);
            match_steps(paths, path_index, p, rel_index + 1, neighbor, b, used_edges, out);
            used_edges.erase(edge_index);
        };

        if (rel.dir == RelDir::Out || rel.dir == RelDir::Undirected) {
            for (const auto& a : graph_.adjacency(at_node, Direction::Out, type_filter)) {
                try_edge(a.edge, a.neighbor);
            }
        }
        if (rel.dir == RelDir::In || rel.dir == RelDir::Undirected) {
            for (const auto& a : graph_.adjacency(at_node, Direction::In, type_filter)) {
                // a self-loop shows up on both sides; undirected yields it once
                if (rel.dir == RelDir::Undirected && a.neighbor == at_node) continue;
                try_edge(a.edge, a.neighbor);
            }
        }
    }

    Value eval_expr(const Expr& e, const Binding& b) {
        switch (e.kind) {
            case Expr::Kind::Literal: return e.literal;
            case Expr::Kind::Param: return params_.at(e.name);
            case Expr::Kind::Var: {
                auto n = b.nodes.find(e.name);
                if (n != b.nodes.end()) return Value{graph_.node(n->second).id};
                auto r = b.rels.find(e.name);
                if (r != b.rels.end()) return Value{"rel:" + std::to_string(r->second)};
                return Value{Null{}};
            }
            case Expr::Kind::Prop: {
                auto n = b.nodes.find(e.var);
                if (n != b.nodes.end()) return node_prop(graph_.node(n->second), e.name);
                auto r = b.rels.find(e.var);
                if (r != b.rels.end()) return edge_prop(graph_.edge(r->second), e.name);
                return Value{Null{}};
            }
            case Expr::Kind::TypeOf: {
                auto r = b.rels.find(e.var);
                if (r != b.rels.end()) return Value{graph_.edge(r->second).edge_type};
                return Value{Null{}};
            }
            case Expr::Kind::Compare: {
                Value lhs = eval_expr(*e.lhs, b);
                Value rhs = eval_expr(*e.rhs, b);
                if (is_null(lhs) || is_null(rhs)) return Value{false};
                if (!same_family(lhs, rhs)) return Value{false};
                int c = compare_total(lhs, rhs);
                if (e.op == "=") return Value{c == 0};
                if (e.op == "<>") return Value{c != 0};
                if (e.op == "<") return Value{c < 0};
                if (e.op == "<=") return Value{c <= 0};
                if (e.op == ">") return Value{c > 0};
                return Value{c >= 0};
            }
            case Expr::Kind::And:
                return Value{truthy(eval_expr(*e.lhs, b)) && truthy(eval_expr(*e.rhs, b))};
            case Expr::Kind::Or:
                return Value{truthy(eval_expr(*e.lhs, b)) || truthy(eval_expr(*e.rhs, b))};
            case Expr::Kind::Not:
                return Value{!truthy(eval_expr(*e.lhs, b))};
            case Expr::Kind::Count:
                throw EvalError("count() is only allowed as a top-level RETURN item");
        }
        return Value{Null{}};
    }

    static bool truthy(const Value& v) {
        const bool* b = std::get_if<bool>(&v);
        return b && *b;
    }

    std::string column_name(const ReturnItem& item) const {
        return item.alias ? *item.alias : print_expr(*item.expr);
    }

    ResultTable project() {
        ResultTable table;
        for (const auto& item : ast_.returns) table.columns.push_back(column_name(item));

        bool any_aggregate = false;
        for (const auto& item : ast_.returns) {
            if (contains_aggregate(*item.expr)) any_aggregate = true;
        }
        aggregated_ = any_aggregate;

        if (!any_aggregate) {
            for (const auto& b : bindings_) {
                std::vector<Value> row;
                row.reserve(ast_.returns.size());
                for (const auto& item : ast_.returns) row.push_back(eval_expr(*item.expr, b));
                table.rows.push_back(std::move(row));
                row_bindings_.push_back(&b);
            }
            return table;
        }

        // Implicit grouping by the non-aggregated items.
        std::vector<size_t> key_items, agg_items;
        for (size_t i = 0; i < ast_.returns.size(); ++i) {
            if (contains_aggregate(*ast_.returns[i].expr)) {
                if (ast_.returns[i].expr->kind != Expr::Kind::Count) {
                    throw EvalError("aggregates must be a bare count()");
                }
                agg_items.push_back(i);
            } else {
                key_items.push_back(i);
            }
        }

        struct Group {
            std::vector<Value> key;
            std::vector<int64_t> counts;
            std::vector<std::set<Value, ValueLess>> distincts;
        };
        std::map<std::vector<Value>, Group, TupleLess> groups;

        for (const auto& b : bindings_) {
            std::vector<Value> key;
            key.reserve(key_items.size());
            for (size_t i : key_items) key.push_back(eval_expr(*ast_.returns[i].expr, b));
            auto [it, fresh] = groups.try_emplace(key);
            Group& g = it->second;
            if (fresh) {
                g.key = key;
                g.counts.assign(agg_items.size(), 0);
                g.distincts.resize(agg_items.size());
            }
            for (size_t a = 0; a < agg_items.size(); ++a) {
                const Expr& agg = *ast_.returns[agg_items[a]].expr;
                if (agg.star) {
                    g.counts[a]++;
                } else {
                    Value v = eval_expr(*agg.lhs, b);
                    if (is_null(v)) continue;
                    if (agg.distinct) {
                        g.distincts[a].insert(std::move(v));
                    } else {
                        g.counts[a]++;
                    }
                }
            }
        }

        // With no grouping keys, zero matches still yield one all-zero row.
        if (key_items.empty() && groups.empty()) {
            Group g;
            g.counts.assign(agg_items.size(), 0);
            g.distincts.resize(agg_items.size());
            groups.emplace(std::vector<Value>{}, std::move(g));
        }

        for (auto& [key, g] : groups) {
            std::vector<Value> row(ast_.returns.size(), Value{Null{}});
            for (size_t k = 0; k < key_items.size(); ++k) row[key_items[k]] = g.key[k];
            for (size_t a = 0; a < agg_items.size(); ++a) {
                const Expr& agg = *ast_.returns[agg_items[a]].expr;
                int64_t n = agg.distinct ? static_cast<int64_t>(g.distincts[a].size())
                                         : g.counts[a];
                row[agg_items[a]] = Value{n};
            }
            table.rows.push_back(std::move(row));
        }
        return table;
    }

    void order_and_slice(ResultTable& table) {
        // Resolve each key to a column where possible: alias first, then a
        // canonical-print match against the return expressions.
        struct Key {
            std::optional<size_t> column;
            const Expr* expr;
            bool desc;
        };
        std::vector<Key> keys;
        for (const auto& item : ast_.order_by) {
            Key k{std::nullopt, item.expr.get(), item.desc};
            if (item.expr->kind == Expr::Kind::Var) {
                k.column = alias_index(item.expr->name);
            }
            if (!k.column) {
                std::string printed = print_expr(*item.expr);
                for (size_t i = 0; i < ast_.returns.size(); ++i) {
                    if (print_expr(*ast_.returns[i].expr) == printed) {
                        k.column = i;
                        break;
                    }
                }
            }
            if (!k.column && aggregated_) {
                throw EvalError("ORDER BY key is not part of the aggregated RETURN");
            }
            if (!k.column && contains_aggregate(*item.expr)) {
                throw EvalError("ORDER BY aggregate must appear in RETURN");
            }
            keys.push_back(k);
        }

        std::vector<size_t> index(table.rows.size());
        for (size_t i = 0; i < index.size(); ++i) index[i] = i;

        // Pre-evaluate binding-dependent keys (non-aggregated queries only).
        std::vector<std::vector<Value>> extra(keys.size());
        for (size_t k = 0; k < keys.size(); ++k) {
            if (keys[k].column) continue;
            extra[k].reserve(table.rows.size());
            for (size_t i = 0; i < table.rows.size(); ++i) {
                extra[k].push_back(eval_expr(*keys[k].expr, *row_bindings_[i]));
            }
        }

        TupleLess tuple_less;
        std::sort(index.begin(), index.end(), [&](size_t a, size_t b) {
            for (size_t k = 0; k < keys.size(); ++k) {
                const Value& va = keys[k].column ? table.rows[a][*keys[k].column] : extra[k][a];
                const Value& vb = keys[k].column ? table.rows[b][*keys[k].column] : extra[k][b];
                int c = compare_total(va, vb);
                if (c != 0) return keys[k].desc ? c > 0 : c < 0;
            }
            if (tuple_less(table.rows[a], table.rows[b])) return true;
            if (tuple_less(table.rows[b], table.rows[a])) return false;
            return a < b;
        });

        std::vector<std::vector<Value>> sorted;
        sorted.reserve(table.rows.size());
        for (size_t i : index) sorted.push_back(std::move(table.rows[i]));
        table.rows = std::move(sorted);

        size_t skip = ast_.skip ? static_cast<size_t>(*ast_.skip) : 0;
        if (skip >= table.rows.size()) {
            table.rows.clear();
        } else if (skip > 0) {
            table.rows.erase(table.rows.begin(), table.rows.begin() + skip);
        }
        if (ast_.limit && table.rows.size() > static_cast<size_t>(*ast_.limit)) {
            table.rows.resize(static_cast<size_t>(*ast_.limit));
        }
    }

    const QueryAst& ast_;
    const PropertyGraph& graph_;
    const Params& params_;
    Scope scope_;
    std::vector<Binding> bindings_;
    std::vector<const Binding*> row_bindings_;  // parallel to rows pre-sort
    bool aggregated_ = false;
};

}  // namespace

ResultTable execute(const QueryAst& ast, const PropertyGraph& graph,
                    const Params& params, std::optional<size_t> row_cap) {
    Evaluator ev(ast, graph, params);
    return ev.run(row_cap);
}

}  // namespace kgqa::gql
