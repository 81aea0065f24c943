#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afgrl/csr.hpp"
#include "afgrl/dense.hpp"
#include "afgrl/rng.hpp"

namespace afgrl {

using IndexSets = std::vector<std::vector<std::size_t>>;  // per node, sorted ascending

// Per-node candidate and positive sets: knn holds the embedding-space
// k-nearest neighbors, adjacent mirrors the graph, cluster the union of
// same-cluster nodes over all clustering runs, positives the filtered result
// (knn ∩ adjacent) ∪ (knn ∩ cluster) ∪ {self}.
struct NeighborSets {
    IndexSets knn;
    IndexSets adjacent;
    IndexSets cluster;
    IndexSets positives;
};

// Cross-view k-nearest neighbors: similarity between node i of the online
// view and node j of the target view is the cosine of their rows. Self is
// excluded, ties break toward the smaller index, zero-norm rows have
// similarity 0 to everything.
IndexSets knn_cross(const DenseMatrix& h_online, const DenseMatrix& h_target, std::size_t k);

struct ClusterAssignment {
    std::vector<int> assignments;       // per node, in [0, K)
    DenseMatrix centroids;              // K x D
    double inertia = 0.0;               // sum of squared distances
    std::vector<double> inertia_trace;  // one value per Lloyd iteration
};

// Lloyd's algorithm with k-means++ seeding on L2-normalized rows. Empty
// clusters are reseeded to the point currently farthest from its centroid.
ClusterAssignment kmeans(const DenseMatrix& h, std::size_t num_clusters,
                         std::size_t max_iters, Rng& rng);

// C_i: union over runs of all nodes sharing i's cluster in that run.
IndexSets global_candidates(const std::vector<ClusterAssignment>& runs);

// P_i = (B_i ∩ N_i) ∪ (B_i ∩ C_i) ∪ {i}. The self term keeps every set
// non-empty so the training objective is always defined.
IndexSets real_positives(const IndexSets& knn, const IndexSets& adjacent,
                         const IndexSets& cluster);

IndexSets adjacency_sets(const CsrMatrix& adjacency);

// Full positive discovery for one refresh: k-NN over the two views plus
// M seeded clustering runs on the target view (run j uses base_seed + j).
NeighborSets discover_positives(const DenseMatrix& h_online, const DenseMatrix& h_target,
                                const CsrMatrix& adjacency, std::size_t k,
                                std::size_t num_clusters, std::size_t num_runs,
                                std::size_t kmeans_iters, std::uint64_t base_seed);

// Debug dump: one "node_id,positive_id" row per pair.
void write_positives_csv(const std::string& path, const IndexSets& positives);

}  // namespace afgrl
