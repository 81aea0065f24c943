#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "afgrl/graph.hpp"
#include "afgrl/model.hpp"
#include "afgrl/positives.hpp"

namespace afgrl {

struct TrainConfig {
    std::size_t embedding_dim = 1024;
    std::size_t layers = 1;
    std::size_t predictor_hidden = 2048;
    double learning_rate = 1e-3;
    double weight_decay = 1e-5;
    std::size_t epochs = 1500;
    double tau = 0.9;
    std::size_t k = 8;
    std::size_t clusters = 100;
    std::size_t kmeans_runs = 5;
    std::size_t kmeans_iters = 50;
    // Epochs between positive-set recomputations; a value above `epochs`
    // means the sets from initialization are kept for the whole run.
    std::size_t refresh_period = 1;
    bool normalize_positives = false;
    std::uint64_t seed = 1;

    void validate() const;
};

struct EpochMetrics {
    std::size_t epoch = 0;
    double loss = 0.0;
    double mean_positives = 0.0;    // mean |P_i| including self
    double knn_local_ratio = 0.0;   // mean |B_i ∩ N_i| / k at the last refresh
};

// Online embeddings, target embeddings and predictions for one step. The
// target side always comes from an eval-style pass with no tape.
struct EmbeddingPair {
    DenseMatrix h_online;
    DenseMatrix h_target;
    DenseMatrix z_online;
};

// Runs both networks. With a tape the online side uses train mode (recording
// activations and updating its statistics); without one every pass is
// eval-style and the call is pure.
EmbeddingPair forward_pair(DualNetwork& net, const CsrMatrix& a_norm, const DenseMatrix& x,
                           Tape* tape = nullptr);

struct LossResult {
    double loss = 0.0;
    DenseMatrix grad;  // d(loss)/d(z_online); target rows are constants
};

// Bootstrapped cosine objective: -(1/N) sum_i sum_{j in P_i} cos(z_i, h_j).
// The inner sum is unnormalized unless `normalize` divides it by |P_i|.
// Zero-norm online rows contribute 0 with zero gradient (a warning is
// printed to stderr).
LossResult afgrl_loss(const DenseMatrix& z_online, const DenseMatrix& h_target,
                      const IndexSets& positives, bool normalize = false);

// Adds the reversed-pair term: every discovered pair (i, j) also pulls
// z_j toward h_i.
LossResult symmetrized_loss(const DenseMatrix& z_online, const DenseMatrix& h_target,
                            const IndexSets& positives, bool normalize = false);

IndexSets transpose_pairs(const IndexSets& positives);

// One full-graph step: online forward (train mode, taped), target forward
// (eval mode), symmetrized loss, backward through the online network only,
// Adam update, then the EMA update of the target.
EpochMetrics train_epoch(DualNetwork& net, const Graph& g, const CsrMatrix& a_norm,
                         AdamState& adam, const NeighborSets& positives,
                         const TrainConfig& cfg, std::size_t epoch);

struct TrainResult {
    DenseMatrix embeddings;  // final eval-mode online embeddings
    std::vector<EpochMetrics> metrics;
    DualNetwork net;
};

// Full run: init, adjacency normalization, epoch loop with positive refresh
// every refresh_period epochs. `on_epoch`, when given, observes each metrics
// record as it is produced (the CLI streams its CSV through it).
TrainResult train(const TrainConfig& cfg, const Graph& g,
                  const std::function<void(const EpochMetrics&)>& on_epoch = {});

}  // namespace afgrl
