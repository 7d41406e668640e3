#include "kgqa/graph.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

namespace kgqa {

namespace {

using nlohmann::json;

PropertyMap parse_properties(const json& j, const char* what, size_t lineno) {
    PropertyMap props;
    if (!j.is_object()) {
        throw GraphError(std::string(what) + " line " + std::to_string(lineno) +
                         ": properties must be an object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        try {
            props[it.key()] = value_from_json(it.value());
        } catch (const std::exception& e) {
            throw GraphError(std::string(what) + " line " + std::to_string(lineno) +
                             ": property '" + it.key() + "': " + e.what());
        }
    }
    return props;
}

json parse_record_line(const std::string& line, const char* what, size_t lineno,
                       const std::set<std::string>& allowed_keys) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw GraphError(std::string(what) + " line " + std::to_string(lineno) +
                         ": malformed JSON: " + e.what());
    }
    if (!j.is_object()) {
        throw GraphError(std::string(what) + " line " + std::to_string(lineno) +
                         ": expected a JSON object");
    }
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed_keys.count(it.key())) {
            throw GraphError(std::string(what) + " line " + std::to_string(lineno) +
                             ": unknown key '" + it.key() + "'");
        }
    }
    return j;
}

std::string require_string(const json& j, const char* key, const char* what, size_t lineno) {
    if (!j.contains(key) || !j[key].is_string()) {
        throw GraphError(std::string(what) + " line " + std::to_string(lineno) +
                         ": missing or non-string key '" + key + "'");
    }
    return j[key].get<std::string>();
}

}  // namespace

void PropertyGraph::build_indexes() {
    id_index_.clear();
    id_index_.reserve(nodes_.size());
    for (uint32_t i = 0; i < nodes_.size(); ++i) {
        const auto& n = nodes_[i];
        if (n.id.empty()) throw GraphError("node with empty id");
        if (n.node_type.empty()) throw GraphError("node '" + n.id + "' has empty node_type");
        if (n.properties.count("id") || n.properties.count("name")) {
            throw GraphError("node '" + n.id +
                             "': properties must not shadow the built-in id/name");
        }
        if (!id_index_.emplace(n.id, i).second) {
            throw GraphError("duplicate node id '" + n.id + "'");
        }
    }

    type_index_.clear();
    for (uint32_t i = 0; i < nodes_.size(); ++i) {
        type_index_[nodes_[i].node_type].push_back(i);
    }
    node_types_.clear();
    for (auto& [type, ids] : type_index_) {
        std::sort(ids.begin(), ids.end(), [&](uint32_t a, uint32_t b) {
            return nodes_[a].id < nodes_[b].id;
        });
        node_types_.push_back(type);
    }

    out_.assign(nodes_.size(), {});
    in_.assign(nodes_.size(), {});
    std::set<std::string> edge_type_set;
    for (uint32_t e = 0; e < edges_.size(); ++e) {
        const auto& edge = edges_[e];
        if (edge.edge_type.empty()) throw GraphError("edge with empty edge_type");
        auto src = find_node(edge.src);
        auto dst = find_node(edge.dst);
        if (!src) throw GraphError("dangling endpoint: edge references unknown node id '" + edge.src + "'");
        if (!dst) throw GraphError("dangling endpoint: edge references unknown node id '" + edge.dst + "'");
        out_[*src].push_back({e, *dst});
        in_[*dst].push_back({e, *src});
        edge_type_set.insert(edge.edge_type);
    }
    edge_types_.assign(edge_type_set.begin(), edge_type_set.end());

    auto order = [&](const Adjacent& a, const Adjacent& b) {
        const auto& ta = edges_[a.edge].edge_type;
        const auto& tb = edges_[b.edge].edge_type;
        if (ta != tb) return ta < tb;
        const auto& na = nodes_[a.neighbor].id;
        const auto& nb = nodes_[b.neighbor].id;
        if (na != nb) return na < nb;
        return a.edge < b.edge;
    };
    for (auto& adj : out_) std::sort(adj.begin(), adj.end(), order);
    for (auto& adj : in_) std::sort(adj.begin(), adj.end(), order);
}

std::optional<uint32_t> PropertyGraph::find_node(const std::string& id) const {
    auto it = id_index_.find(id);
    if (it == id_index_.end()) return std::nullopt;
    return it->second;
}

const std::vector<uint32_t>& PropertyGraph::nodes_of_type(const std::string& node_type) const {
    static const std::vector<uint32_t> kEmpty;
    auto it = type_index_.find(node_type);
    return it == type_index_.end() ? kEmpty : it->second;
}

bool PropertyGraph::has_edge_type(const std::string& edge_type) const {
    return std::binary_search(edge_types_.begin(), edge_types_.end(), edge_type);
}

std::vector<PropertyGraph::Adjacent> PropertyGraph::adjacency(
    uint32_t node_index, Direction dir, const std::string* edge_type) const {
    std::vector<Adjacent> result;
    auto append = [&](const std::vector<Adjacent>& side) {
        for (const auto& a : side) {
            if (edge_type && edges_[a.edge].edge_type != *edge_type) continue;
            result.push_back(a);
        }
    };
    if (dir == Direction::Out || dir == Direction::Both) append(out_[node_index]);
    if (dir == Direction::In || dir == Direction::Both) append(in_[node_index]);
    if (dir == Direction::Both) {
        std::sort(result.begin(), result.end(), [&](const Adjacent& a, const Adjacent& b) {
            const auto& ta = edges_[a.edge].edge_type;
            const auto& tb = edges_[b.edge].edge_type;
            if (ta != tb) return ta < tb;
            const auto& na = nodes_[a.neighbor].id;
            const auto& nb = nodes_[b.neighbor].id;
            if (na != nb) return na < nb;
            return a.edge < b.edge;
        });
    }
    return result;
}

GraphStats PropertyGraph::stats() const {
    GraphStats s;
    s.node_count = nodes_.size();
    s.edge_count = edges_.size();
    for (const auto& n : nodes_) s.nodes_per_type[n.node_type]++;
    for (const auto& e : edges_) s.edges_per_type[e.edge_type]++;
    return s;
}

std::map<std::string, std::vector<std::string>> PropertyGraph::node_type_properties() const {
    std::map<std::string, std::set<std::string>> keys;
    for (const auto& type : node_types_) keys[type] = {"id", "name"};
    for (const auto& n : nodes_) {
        for (const auto& [k, v] : n.properties) keys[n.node_type].insert(k);
    }
    std::map<std::string, std::vector<std::string>> result;
    for (auto& [type, set] : keys) result[type] = {set.begin(), set.end()};
    return result;
}

PropertyGraph PropertyGraph::load(const std::string& nodes_path, const std::string& edges_path) {
    std::ifstream nf(nodes_path);
    if (!nf) throw GraphError("cannot open nodes file: " + nodes_path);
    std::ifstream ef(edges_path);
    if (!ef) throw GraphError("cannot open edges file: " + edges_path);

    static const std::set<std::string> kNodeKeys = {"id", "node_type", "name", "properties"};
    static const std::set<std::string> kEdgeKeys = {"src", "dst", "edge_type", "properties"};

    std::vector<NodeRecord> nodes;
    std::string line;
    size_t lineno = 0;
    while (std::getline(nf, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = parse_record_line(line, "nodes", lineno, kNodeKeys);
        NodeRecord n;
        n.id = require_string(j, "id", "nodes", lineno);
        n.node_type = require_string(j, "node_type", "nodes", lineno);
        n.name = require_string(j, "name", "nodes", lineno);
        if (j.contains("properties")) n.properties = parse_properties(j["properties"], "nodes", lineno);
        nodes.push_back(std::move(n));
    }

    std::vector<EdgeRecord> edges;
    lineno = 0;
    while (std::getline(ef, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j = parse_record_line(line, "edges", lineno, kEdgeKeys);
        EdgeRecord e;
        e.src = require_string(j, "src", "edges", lineno);
        e.dst = require_string(j, "dst", "edges", lineno);
        e.edge_type = require_string(j, "edge_type", "edges", lineno);
        if (j.contains("properties")) e.properties = parse_properties(j["properties"], "edges", lineno);
        edges.push_back(std::move(e));
    }

    return build_graph(std::move(nodes), std::move(edges));
}

PropertyGraph build_graph(std::vector<NodeRecord> nodes, std::vector<EdgeRecord> edges) {
    PropertyGraph g;
    g.nodes_ = std::move(nodes);
    g.edges_ = std::move(edges);
    g.build_indexes();
    return g;
}

std::vector<std::pair<const EdgeRecord*, const NodeRecord*>> neighbors(
    const PropertyGraph& graph, const std::string& node_id, Direction dir,
    const std::optional<std::string>& edge_type) {
    auto idx = graph.find_node(node_id);
    if (!idx) throw GraphError("unknown node id '" + node_id + "'");
    std::vector<std::pair<const EdgeRecord*, const NodeRecord*>> result;
    for (const auto& a : graph.adjacency(*idx, dir, edge_type ? &*edge_type : nullptr)) {
        result.emplace_back(&graph.edge(a.edge), &graph.node(a.neighbor));
    }
    return result;
}

std::string sample_seed(const PropertyGraph& graph, Rng& rng) {
    if (graph.empty()) throw GraphError("cannot sample a seed from an empty graph");
    const auto& types = graph.node_types();
    const auto& type = types[rng.index(types.size())];
    const auto& instances = graph.nodes_of_type(type);
    return graph.node(instances[rng.index(instances.size())]).id;
}

}  // namespace kgqa
