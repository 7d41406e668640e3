#include "kgqa/retriever.hpp"

#include <algorithm>
#include <cmath>

namespace kgqa {

double report_score(double score) {
    return std::round(score * 100.0) / 100.0;
}

namespace {

void normalize(std::vector<double>& v) {
    double norm = 0;
    for (double x : v) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) {
        std::fill(v.begin(), v.end(), 0.0);
        if (!v.empty()) v[0] = 1.0;
        return;
    }
    for (double& x : v) x /= norm;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

uint64_t fnv1a(const char* data, size_t n) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (size_t i = 0; i < n; ++i) {
        h ^= static_cast<unsigned char>(data[i]);
        h *= 0x100000001b3ull;
    }
    return h;
}

}  // namespace

std::vector<double> test_embed(const std::string& text) {
    std::string t = text;
    std::transform(t.begin(), t.end(), t.begin(), [](unsigned char c) {
        return static_cast<char>(std::tolower(c));
    });
    std::vector<double> v(64, 0.0);
    if (t.size() >= 3) {
        for (size_t i = 0; i + 3 <= t.size(); ++i) {
            uint64_t h = fnv1a(t.data() + i, 3);
            double sign = (h >> 32) & 1 ? 1.0 : -1.0;
            v[h % 64] += sign;
        }
    }
    normalize(v);
    return v;
}

Embedder test_embedder() {
    return [](const std::vector<std::string>& texts) {
        std::vector<std::vector<double>> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(test_embed(t));
        return out;
    };
}

EmbeddingIndex build_index(const PropertyGraph& graph, const Embedder& embedder) {
    EmbeddingIndex index;
    if (graph.empty()) return index;

    std::vector<std::string> names;
    names.reserve(graph.nodes().size());
    for (const auto& n : graph.nodes()) names.push_back(n.name);

    std::vector<std::vector<double>> vecs;
    try {
        vecs = embedder(names);
    } catch (const std::exception& e) {
        throw RetrieverError(std::string("embedder failed while indexing: ") + e.what());
    }
    if (vecs.size() != names.size()) {
        throw RetrieverError("embedder returned " + std::to_string(vecs.size()) +
                             " vectors for " + std::to_string(names.size()) + " nodes");
    }

    for (size_t i = 0; i < vecs.size(); ++i) {
        const auto& node = graph.nodes()[i];
        if (vecs[i].empty()) {
            throw RetrieverError("embedder returned an empty vector for node '" +
                                 node.id + "'");
        }
        if (index.dimension == 0) index.dimension = vecs[i].size();
        if (vecs[i].size() != index.dimension) {
            throw RetrieverError("inconsistent embedding dimension for node '" + node.id +
                                 "': got " + std::to_string(vecs[i].size()) + ", expected " +
                                 std::to_string(index.dimension));
        }
        normalize(vecs[i]);
        index.entries.push_back({node.id, node.node_type, node.name, std::move(vecs[i])});
    }
    return index;
}

std::vector<std::vector<RetrievalHit>> retrieve(const EmbeddingIndex& index,
                                                const std::vector<std::string>& queries,
                                                size_t topk, const Embedder& embedder) {
    if (topk == 0) throw RetrieverError("topk must be at least 1");
    std::vector<std::vector<RetrievalHit>> results(queries.size());
    if (index.entries.empty() || queries.empty()) return results;

    std::vector<std::vector<double>> qvecs;
    try {
        qvecs = embedder(queries);
    } catch (const std::exception& e) {
        throw RetrieverError(std::string("embedder failed on queries: ") + e.what());
    }
    if (qvecs.size() != queries.size()) {
        throw RetrieverError("embedder returned " + std::to_string(qvecs.size()) +
                             " vectors for " + std::to_string(queries.size()) + " queries");
    }

    for (size_t q = 0; q < queries.size(); ++q) {
        if (qvecs[q].size() != index.dimension) {
            throw RetrieverError("query embedding dimension " +
                                 std::to_string(qvecs[q].size()) + " does not match index " +
                                 std::to_string(index.dimension));
        }
        normalize(qvecs[q]);
        std::vector<RetrievalHit> hits;
        hits.reserve(index.entries.size());
        for (const auto& entry : index.entries) {
            hits.push_back({entry.node_id, entry.node_type, dot(qvecs[q], entry.vec),
                            entry.name});
        }
        size_t k = std::min(topk, hits.size());
        auto better = [](const RetrievalHit& a, const RetrievalHit& b) {
            if (a.score != b.score) return a.score > b.score;
            return a.node_id < b.node_id;
        };
        std::partial_sort(hits.begin(), hits.begin() + k, hits.end(), better);
        hits.resize(k);
        results[q] = std::move(hits);
    }
    return results;
}

}  // namespace kgqa
