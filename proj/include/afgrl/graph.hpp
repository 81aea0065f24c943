#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "afgrl/csr.hpp"
#include "afgrl/dense.hpp"
#include "afgrl/rng.hpp"

namespace afgrl {

// Undirected attributed graph: binary symmetric adjacency with no stored
// self-loops, one feature row per node, optional class labels.
struct Graph {
    std::size_t n = 0;
    CsrMatrix adjacency;   // n x n, values all 1.0
    DenseMatrix features;  // n x F
    std::optional<std::vector<int>> labels;

    std::size_t num_classes() const;
    void validate() const;
};

// Disjoint train/valid/test node index sets, each sorted ascending.
struct Splits {
    std::vector<std::size_t> train;
    std::vector<std::size_t> valid;
    std::vector<std::size_t> test;
};

// Planted-partition generator spec; block ids double as class labels.
struct SbmSpec {
    std::vector<std::size_t> block_sizes;
    double p_in = 0.0;
    double p_out = 0.0;
    std::size_t feature_dim = 0;
    double feature_shift = 0.0;
    std::uint64_t seed = 0;

    std::size_t total_nodes() const;
    void validate() const;
};

// Builds a symmetric, deduplicated, self-loop-free CSR adjacency from an
// edge list (either orientation may appear; duplicates collapse).
CsrMatrix adjacency_from_edges(std::size_t n,
                               const std::vector<std::pair<std::size_t, std::size_t>>& edges);

// Degree-normalized adjacency with self-loops: entry (i,j) of A+I divided by
// sqrt(dhat_i * dhat_j), where dhat is the row sum of A+I. Symmetric bit-exactly.
CsrMatrix normalize_adjacency(const Graph& g);

// File formats:
//   edges:    one "u v" pair of 0-based ints per line, '#' comments skipped
//   features: CSV of reals, one node per row; row order defines node ids
//   labels:   one int per line, aligned with feature rows
// Input self-loops are dropped (normalize_adjacency re-adds them).
Graph load_graph(const std::string& edge_path, const std::string& feature_path,
                 const std::string& label_path = "");
void save_graph(const Graph& g, const std::string& edge_path,
                const std::string& feature_path, const std::string& label_path = "");

Graph generate_sbm(const SbmSpec& spec, Rng& rng);

// Seeded permutation split: floor(n * ratio) nodes for train and valid,
// remainder to test. Throws if any part rounds to empty.
Splits make_splits(std::size_t n, double train_ratio, double valid_ratio,
                   std::uint64_t seed);

}  // namespace afgrl
