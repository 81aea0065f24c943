#pragma once

#include <cstdint>
#include <vector>

#include "afgrl/csr.hpp"
#include "afgrl/dense.hpp"
#include "afgrl/graph.hpp"

namespace afgrl {

struct ProbeResult {
    double valid_accuracy = 0.0;
    double test_accuracy = 0.0;
    double chosen_reg = 0.0;
};

// Multinomial logistic regression on frozen embeddings. Columns are
// standardized with train-split statistics, the model is fit by full-batch
// gradient descent (backtracking line search) until the gradient norm falls
// below 1e-6 or the iteration cap, the L2 strength is chosen on validation
// accuracy and the test accuracy is reported at that choice. The intercept is
// not regularized. Throws DataError if a class is absent from the train split.
ProbeResult linear_probe(const DenseMatrix& h, const std::vector<int>& labels,
                         const Splits& splits,
                         const std::vector<double>& reg_grid = {1e-4, 1e-3, 1e-2, 1e-1, 1.0});

// Normalized mutual information with arithmetic-mean normalization:
// I(a;b) / ((H(a)+H(b))/2). Both partitions constant -> 1; exactly one
// constant -> 0.
double nmi(const std::vector<int>& a, const std::vector<int>& b);

// 1 - H(truth|pred)/H(truth); 1 when H(truth) = 0.
double homogeneity(const std::vector<int>& pred, const std::vector<int>& truth);

// Mean fraction of each node's n cosine-nearest neighbors (self excluded,
// ties toward smaller index) sharing the node's label.
double sim_at_n(const DenseMatrix& h, const std::vector<int>& labels, std::size_t n);

// Same-label ratios of the k-NN sets, the adjacency sets (k-independent) and
// the local positives (knn ∩ adjacency) at each requested k. Nodes whose set
// is empty are skipped; the skip counts are reported.
struct RatioCurve {
    std::vector<std::size_t> ks;
    std::vector<double> knn_ratio;
    std::vector<double> local_ratio;
    std::vector<std::size_t> local_skipped;
    double adj_ratio = 0.0;
    std::size_t adj_skipped = 0;
};

RatioCurve correct_ratio_curve(const DenseMatrix& h, const std::vector<int>& labels,
                               const CsrMatrix& adjacency,
                               const std::vector<std::size_t>& ks);

struct ClusterScore {
    double nmi = 0.0;
    double homogeneity = 0.0;
};

// Scores the best-inertia clustering over `runs` seeded restarts
// (run j uses seed + j).
ClusterScore kmeans_eval(const DenseMatrix& h, const std::vector<int>& labels,
                         std::size_t num_clusters, std::size_t runs, std::uint64_t seed,
                         std::size_t max_iters = 100);

}  // namespace afgrl
