#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest/doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "kgqa/graph.hpp"

using namespace kgqa;

namespace {

PropertyGraph fixture() {
    return PropertyGraph::load(KGQA_FIXTURE_DIR "/mini_hetionet.nodes.jsonl",
                               KGQA_FIXTURE_DIR "/mini_hetionet.edges.jsonl");
}

NodeRecord mknode(std::string id, std::string type) {
    return NodeRecord{std::move(id), std::move(type), "", {}};
}

}  // namespace

TEST_CASE("fixture loads with expected shape") {
    auto g = fixture();
    auto s = g.stats();
    CHECK(s.node_count == 7);
    CHECK(s.edge_count == 7);
    CHECK(s.nodes_per_type.at("Gene") == 3);
    CHECK(s.nodes_per_type.at("Disease") == 1);
    CHECK(s.nodes_per_type.at("Symptom") == 1);
    CHECK(s.nodes_per_type.at("Cellular_Component") == 2);
    CHECK(s.edges_per_type.at("DISEASE_DOWNREGULATES_GENE") == 3);
    CHECK(s.edges_per_type.at("GENE_PARTICIPATES_CELLULAR_COMPONENT") == 3);
    CHECK(s.edges_per_type.at("DISEASE_PRESENTS_SYMPTOM") == 1);
}

TEST_CASE("typed property values survive ingestion") {
    auto g = fixture();
    auto idx = g.find_node("351");
    REQUIRE(idx.has_value());
    const auto& n = g.node(*idx);
    CHECK(n.name == "APP");
    CHECK(std::get<std::string>(n.properties.at("chromosome")) == "21");
    CHECK(std::get<int64_t>(n.properties.at("entrez")) == 351);

    bool found = false;
    for (const auto& e : g.edges()) {
        if (e.edge_type == "DISEASE_DOWNREGULATES_GENE" && e.dst == "351") {
            CHECK(std::holds_alternative<double>(e.properties.at("log_fc")));
            CHECK(std::get<bool>(e.properties.at("unbiased")) == true);
            found = true;
        }
    }
    CHECK(found);
}

TEST_CASE("neighbors respects direction and edge type filters") {
    auto g = fixture();

    auto out = neighbors(g, "D018888", Direction::Out, "DISEASE_PRESENTS_SYMPTOM");
    REQUIRE(out.size() == 1);
    CHECK(out[0].second->id == "DOID:10652");

    // gene 351: one incoming downregulation, one outgoing participation
    auto both = neighbors(g, "351", Direction::Both);
    REQUIRE(both.size() == 2);
    std::set<std::string> ids;
    for (auto& [e, n] : both) ids.insert(n->id);
    CHECK(ids == std::set<std::string>{"DOID:10652", "GO:0043005"});

    CHECK(neighbors(g, "351", Direction::Out).size() == 1);
    CHECK(neighbors(g, "351", Direction::In).size() == 1);
    CHECK(neighbors(g, "351", Direction::In, "GENE_PARTICIPATES_CELLULAR_COMPONENT").empty());

    CHECK_THROWS_AS(neighbors(g, "nope", Direction::Both), GraphError);
}

TEST_CASE("adjacency ordering is (edge_type, neighbor id)") {
    auto g = fixture();
    auto idx = g.find_node("DOID:10652");
    REQUIRE(idx.has_value());
    auto adj = g.adjacency(*idx, Direction::Both);
    REQUIRE(adj.size() == 4);
    // DISEASE_DOWNREGULATES_GENE out-edges to 351 < 4137 < 5663 (string order),
    // then DISEASE_PRESENTS_SYMPTOM incoming from D018888.
    CHECK(g.node(adj[0].neighbor).id == "351");
    CHECK(g.node(adj[1].neighbor).id == "4137");
    CHECK(g.node(adj[2].neighbor).id == "5663");
    CHECK(g.node(adj[3].neighbor).id == "D018888");
}

TEST_CASE("node_type_properties includes implicit keys and is sorted") {
    auto g = fixture();
    auto props = g.node_type_properties();
    CHECK(props.at("Gene") == std::vector<std::string>{"chromosome", "entrez", "id", "name"});
    CHECK(props.at("Symptom") == std::vector<std::string>{"id", "name", "source"});
}

TEST_CASE("label_matches accepts node type or domain label") {
    auto g = fixture();
    g.set_domain_label("biomedical");
    const auto& n = g.node(*g.find_node("DOID:10652"));
    CHECK(g.label_matches("Disease", n));
    CHECK(g.label_matches("biomedical", n));
    CHECK(!g.label_matches("Gene", n));
    CHECK(!g.label_matches("", n));
}

TEST_CASE("duplicate node id is rejected") {
    std::vector<NodeRecord> nodes = {mknode("a", "T"), mknode("a", "T")};
    CHECK_THROWS_WITH_AS(build_graph(std::move(nodes), {}),
                         "duplicate node id 'a'", GraphError);
}

TEST_CASE("dangling edge endpoint is rejected") {
    std::vector<NodeRecord> nodes = {mknode("a", "T")};
    std::vector<EdgeRecord> edges = {{"a", "ghost", "E", {}}};
    CHECK_THROWS_AS(build_graph(std::move(nodes), std::move(edges)), GraphError);
}

TEST_CASE("empty graph behaviour") {
    auto g = build_graph({}, {});
    CHECK(g.empty());
    CHECK(g.stats().node_count == 0);
    CHECK(g.node_types().empty());
    Rng rng(1);
    CHECK_THROWS_AS(sample_seed(g, rng), GraphError);
}

TEST_CASE("malformed jsonl lines carry line numbers") {
    namespace fs = std::filesystem;
    auto dir = fs::temp_directory_path() / "kgqa_graph_test";
    fs::create_directories(dir);
    auto np = (dir / "n.jsonl").string();
    auto ep = (dir / "e.jsonl").string();
    {
        std::ofstream n(np);
        n << R"({"id":"a","node_type":"T","name":"a"})" << "\n";
        n << "{oops\n";
        std::ofstream e(ep);
    }
    try {
        PropertyGraph::load(np, ep);
        FAIL("expected GraphError");
    } catch (const GraphError& err) {
        CHECK(std::string(err.what()).find("line 2") != std::string::npos);
    }
    {
        std::ofstream n(np);
        n << R"({"id":"a","node_type":"T","name":"a","extra":1})" << "\n";
        std::ofstream e(ep);
    }
    try {
        PropertyGraph::load(np, ep);
        FAIL("expected GraphError");
    } catch (const GraphError& err) {
        CHECK(std::string(err.what()).find("unknown key 'extra'") != std::string::npos);
    }
}

TEST_CASE("two-stage sampler hits per-node probability 1/(types * size)") {
    // Two types, sizes 1 and 2: P(a1)=1/2, P(b1)=P(b2)=1/4.
    auto g = build_graph({mknode("a1", "A"), mknode("b1", "B"), mknode("b2", "B")}, {});
    Rng rng(20240601);
    const int draws = 10000;
    std::map<std::string, int> counts;
    for (int i = 0; i < draws; ++i) counts[sample_seed(g, rng)]++;
    CHECK(std::abs(counts["a1"] / double(draws) - 0.5) < 0.03);
    CHECK(std::abs(counts["b1"] / double(draws) - 0.25) < 0.03);
    CHECK(std::abs(counts["b2"] / double(draws) - 0.25) < 0.03);
}

TEST_CASE("two-stage sampler passes chi-square fit on a three-type graph") {
    // Types of sizes 1, 2, 3: expected per-node probs 1/3, 1/6, 1/6, 1/9 x3.
    auto g = build_graph({mknode("a1", "A"), mknode("b1", "B"), mknode("b2", "B"),
                          mknode("c1", "C"), mknode("c2", "C"), mknode("c3", "C")},
                         {});
    Rng rng(77);
    const int draws = 12000;
    std::map<std::string, int> counts;
    for (int i = 0; i < draws; ++i) counts[sample_seed(g, rng)]++;
    std::map<std::string, double> expect = {
        {"a1", draws / 3.0}, {"b1", draws / 6.0}, {"b2", draws / 6.0},
        {"c1", draws / 9.0}, {"c2", draws / 9.0}, {"c3", draws / 9.0}};
    double chi2 = 0;
    for (auto& [id, e] : expect) {
        double d = counts[id] - e;
        chi2 += d * d / e;
    }
    // df = 5, alpha = 0.01
    CHECK(chi2 < 15.086);
}

TEST_CASE("sampler sequences are deterministic under a fixed seed") {
    auto g = fixture();
    Rng r1(42), r2(42);
    for (int i = 0; i < 100; ++i) CHECK(sample_seed(g, r1) == sample_seed(g, r2));
}

TEST_CASE("adjacency agrees with a full edge scan on random graphs") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        size_t n = 1 + rng.index(50);
        std::vector<NodeRecord> nodes;
        for (size_t i = 0; i < n; ++i)
            nodes.push_back(mknode("n" + std::to_string(i), "T" + std::to_string(i % 3)));
        std::vector<EdgeRecord> edges;
        size_t m = rng.index(120);
        for (size_t i = 0; i < m; ++i) {
            edges.push_back({"n" + std::to_string(rng.index(n)),
                             "n" + std::to_string(rng.index(n)),
                             "E" + std::to_string(rng.index(2)),
                             {}});
        }
        auto g = build_graph(nodes, edges);
        for (uint32_t v = 0; v < n; ++v) {
            const auto& id = g.node(v).id;
            size_t expected_out = 0, expected_in = 0;
            for (const auto& e : edges) {
                if (e.src == id) expected_out++;
                if (e.dst == id) expected_in++;
            }
            CHECK(g.adjacency(v, Direction::Out).size() == expected_out);
            CHECK(g.adjacency(v, Direction::In).size() == expected_in);
            CHECK(g.adjacency(v, Direction::Both).size() == expected_out + expected_in);
        }
    }
}
