#pragma once
// Exact top-k node retrieval by cosine similarity over embedded node names.
// The embedder is pluggable; test_embedder() is a deterministic local
// stand-in so nothing here needs a network.

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "kgqa/graph.hpp"

namespace kgqa {

struct RetrieverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Batch of texts in, one vector per text out. All vectors must share one
// dimension.
using Embedder =
    std::function<std::vector<std::vector<double>>(const std::vector<std::string>&)>;

struct EmbeddingIndex {
    struct Entry {
        std::string node_id;
        std::string node_type;
        std::string name;
        std::vector<double> vec;  // unit length
    };
    size_t dimension = 0;
    std::vector<Entry> entries;
};

struct RetrievalHit {
    std::string node_id;
    std::string node_type;
    double score = 0;  // unrounded cosine; round with report_score for output
    std::string name;
};

// Two-decimal rounding used when scores are reported.
double report_score(double score);

EmbeddingIndex build_index(const PropertyGraph& graph, const Embedder& embedder);

// Exact top-k per query: scores sorted descending, ties by node_id
// ascending, at most topk hits (fewer when the index is smaller).
std::vector<std::vector<RetrievalHit>> retrieve(const EmbeddingIndex& index,
                                                const std::vector<std::string>& queries,
                                                size_t topk, const Embedder& embedder);

// Deterministic 64-dimension n-gram hash embedding: lowercase the text,
// hash every byte trigram with FNV-1a, accumulate ±1 per bucket, normalize.
// Inputs with no trigram fall back to the first basis vector.
std::vector<double> test_embed(const std::string& text);
Embedder test_embedder();

}  // namespace kgqa
