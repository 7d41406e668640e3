#pragma once
// Brute-force reference evaluator for the query subset. Written against the
// documented semantics, independently of the production engine: relationship
// positions are filled by scanning the full edge list (no adjacency indexes)
// and filtering, grouping and ordering are reimplemented from scratch.
// Used only by tests, as an equivalence oracle.

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "kgqa/gql/eval.hpp"
#include "kgqa/graph.hpp"

namespace kgqa::oracle {

struct Overflow : std::runtime_error {
    Overflow() : std::runtime_error("oracle binding budget exceeded") {}
};

namespace detail {

using gql::Expr;

struct Env {
    std::map<std::string, uint32_t> node_vars;
    std::map<std::string, uint32_t> rel_vars;
};

inline int rank(const Value& v) {
    if (std::holds_alternative<bool>(v)) return 0;
    if (is_number(v)) return 1;
    if (std::holds_alternative<std::string>(v)) return 2;
    return 3;  // null sorts last
}

inline int cmp(const Value& a, const Value& b) {
    int ra = rank(a), rb = rank(b);
    if (ra != rb) return ra < rb ? -1 : 1;
    switch (ra) {
        case 0: {
            bool x = std::get<bool>(a), y = std::get<bool>(b);
            return x == y ? 0 : (x < y ? -1 : 1);
        }
        case 1: {
            if (std::holds_alternative<int64_t>(a) && std::holds_alternative<int64_t>(b)) {
                int64_t x = std::get<int64_t>(a), y = std::get<int64_t>(b);
                return x == y ? 0 : (x < y ? -1 : 1);
            }
            double x = as_double(a), y = as_double(b);
            return x == y ? 0 : (x < y ? -1 : 1);
        }
        case 2: {
            const auto& x = std::get<std::string>(a);
            const auto& y = std::get<std::string>(b);
            return x == y ? 0 : (x < y ? -1 : 1);
        }
        default:
            return 0;
    }
}

inline int cmp_row(const std::vector<Value>& a, const std::vector<Value>& b) {
    for (size_t i = 0; i < a.size() && i < b.size(); ++i) {
        int c = cmp(a[i], b[i]);
        if (c != 0) return c;
    }
    if (a.size() != b.size()) return a.size() < b.size() ? -1 : 1;
    return 0;
}

struct Ctx {
    const PropertyGraph& g;
    const gql::Params& params;
    size_t steps = 0;

    void tick() {
        if (++steps > (1u << 23)) throw Overflow();
    }
};

inline Value get_node_prop(const NodeRecord& n, const std::string& key) {
    if (key == "id") return Value{n.id};
    if (key == "name") return Value{n.name};
    auto it = n.properties.find(key);
    return it == n.properties.end() ? Value{Null{}} : it->second;
}

inline Value eval(Ctx& ctx, const Expr& e, const Env& env) {
    switch (e.kind) {
        case Expr::Kind::Literal:
            return e.literal;
        case Expr::Kind::Param:
            return ctx.params.at(e.name);
        case Expr::Kind::Var: {
            auto n = env.node_vars.find(e.name);
            if (n != env.node_vars.end()) return Value{ctx.g.node(n->second).id};
            auto r = env.rel_vars.find(e.name);
            if (r != env.rel_vars.end()) return Value{"rel:" + std::to_string(r->second)};
            return Value{Null{}};
        }
        case Expr::Kind::Prop: {
            auto n = env.node_vars.find(e.var);
            if (n != env.node_vars.end()) return get_node_prop(ctx.g.node(n->second), e.name);
            auto r = env.rel_vars.find(e.var);
            if (r != env.rel_vars.end()) {
                const auto& props = ctx.g.edge(r->second).properties;
                auto it = props.find(e.name);
                return it == props.end() ? Value{Null{}} : it->second;
            }
            return Value{Null{}};
        }
        case Expr::Kind::TypeOf: {
            auto r = env.rel_vars.find(e.var);
            if (r != env.rel_vars.end()) return Value{ctx.g.edge(r->second).edge_type};
            return Value{Null{}};
        }
        case Expr::Kind::Compare: {
            Value a = eval(ctx, *e.lhs, env);
            Value b = eval(ctx, *e.rhs, env);
            if (is_null(a) || is_null(b)) return Value{false};
            bool comparable = (is_number(a) && is_number(b)) || a.index() == b.index();
            if (!comparable) return Value{false};
            int c = cmp(a, b);
            bool r = e.op == "=" ? c == 0
                   : e.op == "<>" ? c != 0
                   : e.op == "<" ? c < 0
                   : e.op == "<=" ? c <= 0
                   : e.op == ">" ? c > 0
                   : c >= 0;
            return Value{r};
        }
        case Expr::Kind::And: {
            Value a = eval(ctx, *e.lhs, env);
            Value b = eval(ctx, *e.rhs, env);
            return Value{a == Value{true} && b == Value{true}};
        }
        case Expr::Kind::Or: {
            Value a = eval(ctx, *e.lhs, env);
            Value b = eval(ctx, *e.rhs, env);
            return Value{a == Value{true} || b == Value{true}};
        }
        case Expr::Kind::Not:
            return Value{!(eval(ctx, *e.lhs, env) == Value{true})};
        case Expr::Kind::Count:
            throw std::logic_error("count outside RETURN");
    }
    return Value{Null{}};
}

inline bool node_ok(Ctx& ctx, const gql::NodePattern& pat, uint32_t node, const Env& env) {
    const NodeRecord& rec = ctx.g.node(node);
    if (!pat.label.empty() && !ctx.g.label_matches(pat.label, rec)) return false;
    for (const auto& [key, vexpr] : pat.props) {
        Value want = vexpr->kind == Expr::Kind::Literal ? vexpr->literal
                                                        : ctx.params.at(vexpr->name);
        Value have = get_node_prop(rec, key);
        if (is_null(have) || is_null(want)) return false;
        bool comparable = (is_number(have) && is_number(want)) || have.index() == want.index();
        if (!comparable || cmp(have, want) != 0) return false;
    }
    if (!pat.var.empty()) {
        auto it = env.node_vars.find(pat.var);
        if (it != env.node_vars.end() && it->second != node) return false;
    }
    return true;
}

// Walks one MATCH clause position by position: (path index, rel index).
// `used` holds the edges taken so far in this clause, enforcing clause-wide
// relationship uniqueness across comma-separated paths.
inline void expand(Ctx& ctx, const std::vector<gql::PathPattern>& paths,
                   size_t path_i, size_t rel_i, std::optional<uint32_t> at,
                   const Env& env, std::set<uint32_t>& used, std::vector<Env>& out) {
    ctx.tick();
    if (path_i == paths.size()) {
        out.push_back(env);
        return;
    }
    const auto& path = paths[path_i];
    if (rel_i == 0 && !at.has_value()) {
        const auto& pat = path.nodes[0];
        if (!pat.var.empty() && env.node_vars.count(pat.var)) {
            uint32_t v = env.node_vars.at(pat.var);
            if (node_ok(ctx, pat, v, env)) expand(ctx, paths, path_i, 0, v, env, used, out);
            return;
        }
        for (uint32_t v = 0; v < ctx.g.nodes().size(); ++v) {
            if (!node_ok(ctx, pat, v, env)) continue;
            Env e2 = env;
            if (!pat.var.empty()) e2.node_vars[pat.var] = v;
            expand(ctx, paths, path_i, 0, v, e2, used, out);
        }
        return;
    }
    if (rel_i == path.rels.size()) {
        expand(ctx, paths, path_i + 1, 0, std::nullopt, env, used, out);
        return;
    }
    const auto& rel = path.rels[rel_i];
    const auto& next_pat = path.nodes[rel_i + 1];
    for (uint32_t ei = 0; ei < ctx.g.edges().size(); ++ei) {
        ctx.tick();
        const EdgeRecord& er = ctx.g.edge(ei);
        if (!rel.type.empty() && er.edge_type != rel.type) continue;
        if (used.count(ei)) continue;
        if (!rel.var.empty()) {
            auto it = env.rel_vars.find(rel.var);
            if (it != env.rel_vars.end() && it->second != ei) continue;
        }
        uint32_t src = *ctx.g.find_node(er.src);
        uint32_t dst = *ctx.g.find_node(er.dst);
        std::vector<std::pair<uint32_t, uint32_t>> orients;
        if (rel.dir == gql::RelDir::Out) {
            orients.push_back({src, dst});
        } else if (rel.dir == gql::RelDir::In) {
            orients.push_back({dst, src});
        } else {
            orients.push_back({src, dst});
            if (src != dst) orients.push_back({dst, src});  // self-loop listed once
        }
        for (auto [from, to] : orients) {
            if (from != *at) continue;
            if (!node_ok(ctx, next_pat, to, env)) continue;
            Env e2 = env;
            if (!rel.var.empty()) e2.rel_vars[rel.var] = ei;
            if (!next_pat.var.empty()) e2.node_vars[next_pat.var] = to;
            used.insert(ei);
            expand(ctx, paths, path_i, rel_i + 1, to, e2, used, out);
            used.erase(ei);
        }
    }
}

}  // namespace detail

inline gql::ResultTable execute(const gql::QueryAst& ast, const PropertyGraph& graph,
                                const gql::Params& params = {},
                                std::optional<size_t> row_cap = std::nullopt) {
    using namespace detail;
    Ctx ctx{graph, params};

    std::vector<Env> envs = {Env{}};
    for (const auto& clause : ast.matches) {
        std::vector<Env> next;
        for (const auto& env : envs) {
            std::set<uint32_t> used;
            expand(ctx, clause.paths, 0, 0, std::nullopt, env, used, next);
            if (next.size() > (1u << 20)) throw Overflow();
        }
        envs = std::move(next);
    }

    if (ast.where) {
        std::vector<Env> kept;
        for (const auto& env : envs) {
            if (eval(ctx, *ast.where, env) == Value{true}) kept.push_back(env);
        }
        envs = std::move(kept);
    }

    gql::ResultTable table;
    for (const auto& item : ast.returns) {
        table.columns.push_back(item.alias ? *item.alias : gql::print_expr(*item.expr));
    }

    bool aggregated = false;
    for (const auto& item : ast.returns) {
        if (gql::contains_aggregate(*item.expr)) aggregated = true;
    }

    // Per row: the ORDER BY key values alongside the projected row.
    std::vector<std::pair<std::vector<Value>, std::vector<Value>>> keyed;  // (keys, row)

    auto order_key_values = [&](const Env& env, const std::vector<Value>& row) {
        std::vector<Value> keys;
        for (const auto& k : ast.order_by) {
            std::optional<size_t> col;
            if (k.expr->kind == Expr::Kind::Var) {
                for (size_t i = 0; i < ast.returns.size(); ++i) {
                    if (ast.returns[i].alias == k.expr->name) {
                        col = i;
                        break;
                    }
                }
            }
            if (!col) {
                std::string printed = gql::print_expr(*k.expr);
                for (size_t i = 0; i < ast.returns.size(); ++i) {
                    if (gql::print_expr(*ast.returns[i].expr) == printed) {
                        col = i;
                        break;
                    }
                }
            }
            if (col) {
                keys.push_back(row[*col]);
            } else if (aggregated) {
                throw gql::EvalError("ORDER BY key is not part of the aggregated RETURN");
            } else {
                keys.push_back(eval(ctx, *k.expr, env));
            }
        }
        return keys;
    };

    if (!aggregated) {
        for (const auto& env : envs) {
            std::vector<Value> row;
            for (const auto& item : ast.returns) row.push_back(eval(ctx, *item.expr, env));
            keyed.emplace_back(order_key_values(env, row), std::move(row));
        }
    } else {
        std::vector<size_t> key_items, agg_items;
        for (size_t i = 0; i < ast.returns.size(); ++i) {
            if (gql::contains_aggregate(*ast.returns[i].expr)) {
                agg_items.push_back(i);
            } else {
                key_items.push_back(i);
            }
        }
        struct Bucket {
            std::vector<Value> key;
            std::vector<int64_t> plain;
            std::vector<std::vector<Value>> seen;  // distinct, linear scan
        };
        std::vector<Bucket> buckets;
        for (const auto& env : envs) {
            std::vector<Value> key;
            for (size_t i : key_items) key.push_back(eval(ctx, *ast.returns[i].expr, env));
            Bucket* bucket = nullptr;
            for (auto& b : buckets) {
                if (cmp_row(b.key, key) == 0) {
                    bucket = &b;
                    break;
                }
            }
            if (!bucket) {
                buckets.push_back({key, std::vector<int64_t>(agg_items.size(), 0),
                                   std::vector<std::vector<Value>>(agg_items.size())});
                bucket = &buckets.back();
            }
            for (size_t a = 0; a < agg_items.size(); ++a) {
                const Expr& agg = *ast.returns[agg_items[a]].expr;
                if (agg.star) {
                    bucket->plain[a]++;
                    continue;
                }
                Value v = eval(ctx, *agg.lhs, env);
                if (is_null(v)) continue;
                if (!agg.distinct) {
                    bucket->plain[a]++;
                    continue;
                }
                // values in one numeric family count once (3 equals 3.0)
                bool have = false;
                for (const auto& s : bucket->seen[a]) {
                    if (cmp(s, v) == 0) have = true;
                }
                if (!have) bucket->seen[a].push_back(v);
            }
        }
        if (key_items.empty() && buckets.empty()) {
            buckets.push_back({{}, std::vector<int64_t>(agg_items.size(), 0),
                               std::vector<std::vector<Value>>(agg_items.size())});
        }
        for (const auto& b : buckets) {
            std::vector<Value> row(ast.returns.size(), Value{Null{}});
            for (size_t k = 0; k < key_items.size(); ++k) row[key_items[k]] = b.key[k];
            for (size_t a = 0; a < agg_items.size(); ++a) {
                const Expr& agg = *ast.returns[agg_items[a]].expr;
                int64_t n = agg.distinct ? static_cast<int64_t>(b.seen[a].size()) : b.plain[a];
                row[agg_items[a]] = Value{n};
            }
            keyed.emplace_back(order_key_values(Env{}, row), std::move(row));
        }
    }

    std::vector<bool> desc;
    for (const auto& k : ast.order_by) desc.push_back(k.desc);
    std::stable_sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
        for (size_t k = 0; k < desc.size(); ++k) {
            int c = cmp(a.first[k], b.first[k]);
            if (c != 0) return desc[k] ? c > 0 : c < 0;
        }
        return cmp_row(a.second, b.second) < 0;
    });

    for (auto& [keys, row] : keyed) table.rows.push_back(std::move(row));

    size_t skip = ast.skip ? static_cast<size_t>(*ast.skip) : 0;
    if (skip >= table.rows.size()) {
        table.rows.clear();
    } else {
        table.rows.erase(table.rows.begin(), table.rows.begin() + skip);
    }
    if (ast.limit && table.rows.size() > static_cast<size_t>(*ast.limit)) {
        table.rows.resize(static_cast<size_t>(*ast.limit));
    }
    if (row_cap && table.rows.size() > *row_cap) table.rows.resize(*row_cap);
    return table;
}

}  // namespace kgqa::oracle
