#pragma once
// In-memory heterogeneous property graph: line-delimited JSON ingestion,
// id/type/adjacency indexes, and the two-stage seed sampler.
// Immutable after load; safe for concurrent readers.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "kgqa/rng.hpp"
#include "kgqa/value.hpp"

namespace kgqa {

struct GraphError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

using PropertyMap = std::map<std::string, Value>;

struct NodeRecord {
    std::string id;
    std::string node_type;
    std::string name;
    PropertyMap properties;
};

struct EdgeRecord {
    std::string src;
    std::string dst;
    std::string edge_type;
    PropertyMap properties;
};

struct GraphStats {
    size_t node_count = 0;
    size_t edge_count = 0;
    std::map<std::string, size_t> nodes_per_type;
    std::map<std::string, size_t> edges_per_type;
};

enum class Direction { Out, In, Both };

class PropertyGraph {
public:
    // Adjacency entry: edge index plus the neighbor's node index.
    struct Adjacent {
        uint32_t edge;
        uint32_t neighbor;
    };

    const std::vector<NodeRecord>& nodes() const { return nodes_; }
    const std::vector<EdgeRecord>& edges() const { return edges_; }

    bool empty() const { return nodes_.empty(); }

    std::optional<uint32_t> find_node(const std::string& id) const;
    const NodeRecord& node(uint32_t index) const { return nodes_[index]; }
    const EdgeRecord& edge(uint32_t index) const { return edges_[index]; }

    // Node indexes of a type, sorted by id. Unknown type yields an empty list.
    const std::vector<uint32_t>& nodes_of_type(const std::string& node_type) const;
    const std::vector<std::string>& node_types() const { return node_types_; }
    const std::vector<std::string>& edge_types() const { return edge_types_; }
    bool has_edge_type(const std::string& edge_type) const;

    // Optional graph-wide scope label (Neo4j-style domain label); a node
    // pattern label matches either the node_type or this label.
    const std::string& domain_label() const { return domain_label_; }
    void set_domain_label(std::string label) { domain_label_ = std::move(label); }
    bool label_matches(const std::string& label, const NodeRecord& n) const {
        return label == n.node_type || (!domain_label_.empty() && label == domain_label_);
    }

    // Adjacency filtered by direction and optionally edge_type, ordered by
    // (edge_type, neighbor id) ascending. Direction Both lists out then in
    // entries merged under the same ordering.
    std::vector<Adjacent> adjacency(uint32_t node_index, Direction dir,
                                    const std::string* edge_type = nullptr) const;

    GraphStats stats() const;

    // Property keys seen per node type (includes the implicit id/name),
    // sorted; feeds the system-prompt graph description.
    std::map<std::string, std::vector<std::string>> node_type_properties() const;

    static PropertyGraph load(const std::string& nodes_path, const std::string& edges_path);

private:
    friend PropertyGraph build_graph(std::vector<NodeRecord> nodes, std::vector<EdgeRecord> edges);

    void build_indexes();

    std::vector<NodeRecord> nodes_;
    std::vector<EdgeRecord> edges_;
    std::string domain_label_;
    std::unordered_map<std::string, uint32_t> id_index_;
    std::map<std::string, std::vector<uint32_t>> type_index_;
    std::vector<std::string> node_types_;
    std::vector<std::string> edge_types_;
    std::vector<std::vector<Adjacent>> out_;  // per node, sorted
    std::vector<std::vector<Adjacent>> in_;
};

// Build from in-memory records (tests, generators). Validates the same
// invariants as load().
PropertyGraph build_graph(std::vector<NodeRecord> nodes, std::vector<EdgeRecord> edges);

// neighbors(): (edge, neighbor) pairs matching the filter, ordered by
// (edge_type, neighbor id). Throws GraphError on unknown node_id.
std::vector<std::pair<const EdgeRecord*, const NodeRecord*>> neighbors(
    const PropertyGraph& graph, const std::string& node_id, Direction dir,
    const std::optional<std::string>& edge_type = std::nullopt);

// Two-stage seed sampling: uniform over node types, then uniform over the
// instances of the chosen type.
std::string sample_seed(const PropertyGraph& graph, Rng& rng);

}  // namespace kgqa
