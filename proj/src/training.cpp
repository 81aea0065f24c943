#include "afgrl/training.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <iterator>
#include <stdexcept>
#include <string>

#include "afgrl/error.hpp"

namespace afgrl {

namespace {

constexpr double kNormEps = 1e-12;

// Accumulates the loss and z-gradient of -(1/N) sum over the given pairs of
// cos(z_i, h_j), optionally weighting each node's pairs by 1/|set|.
void accumulate_cosine_pairs(const DenseMatrix& z, const DenseMatrix& h,
                             const IndexSets& sets, bool normalize, double& loss,
                             DenseMatrix& grad, std::size_t& zero_rows) {
    const std::size_t n = z.rows, d = z.cols;
    const std::vector<double> z_norms = row_norms(z);
    const std::vector<double> h_norms = row_norms(h);
    const double inv_n = 1.0 / static_cast<double>(n);

    for (std::size_t i = 0; i < n; ++i) {
        if (sets[i].empty()) continue;
        if (z_norms[i] < kNormEps) {
            ++zero_rows;
            continue;
        }
        const double weight = normalize ? inv_n / static_cast<double>(sets[i].size()) : inv_n;
        const double* zi = z.row(i);
        double* gi = grad.row(i);
        for (std::size_t j : sets[i]) {
            if (h_norms[j] < kNormEps) continue;  // cosine treated as 0
            const double* hj = h.row(j);
            double dot = 0.0;
            for (std::size_t c = 0; c < d; ++c) dot += zi[c] * hj[c];
            const double denom = z_norms[i] * h_norms[j];
            const double cos_ij = dot / denom;
            loss -= weight * cos_ij;
            // d cos / d z_i = h_j / (|z||h|) - cos * z_i / |z|^2
            const double zz = z_norms[i] * z_norms[i];
            for (std::size_t c = 0; c < d; ++c) {
                gi[c] -= weight * (hj[c] / denom - cos_ij * zi[c] / zz);
            }
        }
    }
}

}  // namespace

void TrainConfig::validate() const {
    // epochs == 0 is allowed: the run emits the randomly initialized
    // encoder's eval-mode embeddings.
    if (embedding_dim == 0 || layers == 0 || predictor_hidden == 0 || k == 0 ||
        clusters == 0 || kmeans_runs == 0 || kmeans_iters == 0 || refresh_period == 0) {
        throw ConfigError("train config: all counts must be >= 1");
    }
    if (tau < 0.0 || tau > 1.0) throw ConfigError("train config: tau must be in [0, 1]");
    if (learning_rate <= 0.0) throw ConfigError("train config: learning_rate must be positive");
    if (weight_decay < 0.0) throw ConfigError("train config: weight_decay must be >= 0");
}

LossResult afgrl_loss(const DenseMatrix& z_online, const DenseMatrix& h_target,
                      const IndexSets& positives, bool normalize) {
    if (!z_online.same_shape(h_target)) {
        throw std::invalid_argument("afgrl_loss: embedding shapes differ");
    }
    if (positives.size() != z_online.rows) {
        throw std::invalid_argument("afgrl_loss: positive set count differs from node count");
    }
    LossResult r;
    r.grad = DenseMatrix(z_online.rows, z_online.cols);
    std::size_t zero_rows = 0;
    accumulate_cosine_pairs(z_online, h_target, positives, normalize, r.loss, r.grad, zero_rows);
    if (zero_rows > 0) {
        std::cerr << "afgrl_loss: " << zero_rows
                  << " zero-norm online rows contributed no loss\n";
    }
    return r;
}

IndexSets transpose_pairs(const IndexSets& positives) {
    IndexSets reversed(positives.size());
    for (std::size_t i = 0; i < positives.size(); ++i) {
        for (std::size_t j : positives[i]) reversed[j].push_back(i);
    }
    // construction visits sources in ascending order, so each set is sorted
    return reversed;
}

LossResult symmetrized_loss(const DenseMatrix& z_online, const DenseMatrix& h_target,
                            const IndexSets& positives, bool normalize) {
    if (!z_online.same_shape(h_target)) {
        throw std::invalid_argument("symmetrized_loss: embedding shapes differ");
    }
    if (positives.size() != z_online.rows) {
        throw std::invalid_argument("symmetrized_loss: positive set count differs from node count");
    }
    LossResult r;
    r.grad = DenseMatrix(z_online.rows, z_online.cols);
    std::size_t zero_rows = 0;
    accumulate_cosine_pairs(z_online, h_target, positives, normalize, r.loss, r.grad, zero_rows);
    const IndexSets reversed = transpose_pairs(positives);
    accumulate_cosine_pairs(z_online, h_target, reversed, normalize, r.loss, r.grad, zero_rows);
    if (zero_rows > 0) {
        std::cerr << "symmetrized_loss: " << zero_rows
                  << " zero-norm online rows contributed no loss\n";
    }
    return r;
}

EmbeddingPair forward_pair(DualNetwork& net, const CsrMatrix& a_norm, const DenseMatrix& x,
                           Tape* tape) {
    EmbeddingPair pair;
    const Mode online_mode = tape ? Mode::kTrain : Mode::kEval;
    pair.h_online = encoder_forward(net.online_encoder, a_norm, x, online_mode, tape);
    pair.z_online = predictor_forward(net.predictor, pair.h_online, online_mode, tape);
    pair.h_target = encoder_forward(net.target_encoder, a_norm, x, Mode::kEval, nullptr);
    return pair;
}

EpochMetrics train_epoch(DualNetwork& net, const Graph& g, const CsrMatrix& a_norm,
                         AdamState& adam, const NeighborSets& positives,
                         const TrainConfig& cfg, std::size_t epoch) {
    Tape tape;
    const EmbeddingPair pair = forward_pair(net, a_norm, g.features, &tape);

    const LossResult loss = symmetrized_loss(pair.z_online, pair.h_target, positives.positives,
                                             cfg.normalize_positives);
    if (!std::isfinite(loss.loss)) {
        throw NumericError("train_epoch: non-finite loss at epoch " + std::to_string(epoch));
    }

    const Gradients grads = backward(net, a_norm, tape, loss.grad);
    adam_step(adam, net, grads);
    ema_update(net);

    EpochMetrics m;
    m.epoch = epoch;
    m.loss = loss.loss;
    double total = 0.0;
    for (const auto& p : positives.positives) total += static_cast<double>(p.size());
    m.mean_positives = total / static_cast<double>(g.n);
    return m;
}

TrainResult train(const TrainConfig& cfg, const Graph& g,
                  const std::function<void(const EpochMetrics&)>& on_epoch) {
    cfg.validate();
    if (cfg.k >= g.n) {
        throw ConfigError("train config: k (" + std::to_string(cfg.k) +
                          ") must be below the node count (" + std::to_string(g.n) + ")");
    }
    if (cfg.clusters > g.n) {
        throw ConfigError("train config: clusters must not exceed the node count");
    }

    const CsrMatrix a_norm = normalize_adjacency(g);
    Rng init_rng(derive_seed(cfg.seed, "init"));
    const std::uint64_t kmeans_base = derive_seed(cfg.seed, "kmeans");

    TrainResult result;
    result.net = DualNetwork::init(g.features.cols, cfg.embedding_dim, cfg.layers,
                                   cfg.predictor_hidden, cfg.tau, init_rng);
    DualNetwork& net = result.net;
    AdamState adam = AdamState::init(net, cfg.learning_rate, cfg.weight_decay);

    NeighborSets positives;
    double knn_local_ratio = 0.0;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        if (epoch % cfg.refresh_period == 0) {
            const EmbeddingPair pair = forward_pair(net, a_norm, g.features, nullptr);
            positives = discover_positives(pair.h_online, pair.h_target, g.adjacency, cfg.k,
                                           cfg.clusters, cfg.kmeans_runs, cfg.kmeans_iters,
                                           kmeans_base);
            double local = 0.0;
            for (std::size_t i = 0; i < g.n; ++i) {
                std::vector<std::size_t> both;
                std::set_intersection(positives.knn[i].begin(), positives.knn[i].end(),
                                      positives.adjacent[i].begin(), positives.adjacent[i].end(),
                                      std::back_inserter(both));
                local += static_cast<double>(both.size()) / static_cast<double>(cfg.k);
            }
            knn_local_ratio = local / static_cast<double>(g.n);
        }
        EpochMetrics m = train_epoch(net, g, a_norm, adam, positives, cfg, epoch);
        m.knn_local_ratio = knn_local_ratio;
        if (on_epoch) on_epoch(m);
        result.metrics.push_back(m);
    }

    result.embeddings =
        encoder_forward(net.online_encoder, a_norm, g.features, Mode::kEval, nullptr);
    return result;
}

}  // namespace afgrl
