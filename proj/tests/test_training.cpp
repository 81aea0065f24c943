#include <doctest.h>

#include <cmath>
#include <vector>

#include "afgrl/error.hpp"
#include "afgrl/training.hpp"
#include "test_helpers.hpp"

using namespace afgrl;
using test_helpers::random_matrix;

namespace {

// Scalar-by-scalar re-evaluation of the objective used as the oracle.
double brute_force_loss(const DenseMatrix& z, const DenseMatrix& h, const IndexSets& sets,
                        bool normalize = false) {
    double total = 0.0;
    for (std::size_t i = 0; i < z.rows; ++i) {
        double inner = 0.0;
        for (std::size_t j : sets[i]) {
            double zz = 0.0, hh = 0.0, dot = 0.0;
            for (std::size_t c = 0; c < z.cols; ++c) {
                zz += z(i, c) * z(i, c);
                hh += h(j, c) * h(j, c);
                dot += z(i, c) * h(j, c);
            }
            if (zz < 1e-24 || hh < 1e-24) continue;
            inner += dot / (std::sqrt(zz) * std::sqrt(hh));
        }
        if (normalize && !sets[i].empty()) inner /= static_cast<double>(sets[i].size());
        total += inner;
    }
    return -total / static_cast<double>(z.rows);
}

IndexSets reversed_sets(const IndexSets& sets) {
    IndexSets rev(sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) {
        for (std::size_t j : sets[i]) rev[j].push_back(i);
    }
    return rev;
}

TrainConfig small_config() {
    TrainConfig cfg;
    cfg.embedding_dim = 8;
    cfg.predictor_hidden = 16;
    cfg.learning_rate = 1e-3;
    cfg.epochs = 5;
    cfg.tau = 0.9;
    cfg.k = 3;
    cfg.clusters = 4;
    cfg.kmeans_runs = 2;
    cfg.kmeans_iters = 20;
    cfg.seed = 42;
    return cfg;
}

Graph sbm_fixture() {
    SbmSpec spec;
    spec.block_sizes = {20, 20};
    spec.p_in = 0.3;
    spec.p_out = 0.05;
    spec.feature_dim = 8;
    spec.feature_shift = 1.0;
    spec.seed = 42;
    Rng rng(spec.seed);
    return generate_sbm(spec, rng);
}

}  // namespace

TEST_CASE("afgrl_loss on identical vectors") {
    DenseMatrix z(2, 2), h(2, 2);
    z.data = {0.3, 0.4, 0.3, 0.4};
    h.data = {0.3, 0.4, 0.3, 0.4};
    // positives exclude self here: node 0 pairs with 1, node 1 with 0
    const IndexSets sets{{1}, {0}};
    const LossResult r = afgrl_loss(z, h, sets);
    CHECK(r.loss == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("afgrl_loss is zero for orthogonal views") {
    DenseMatrix z(2, 2), h(2, 2);
    z.data = {1, 0, 1, 0};
    h.data = {0, 1, 0, 1};
    const LossResult r = afgrl_loss(z, h, {{0, 1}, {0}});
    CHECK(r.loss == 0.0);
}

TEST_CASE("afgrl_loss matches the brute-force oracle and finite differences") {
    Rng rng(5);
    const DenseMatrix z = random_matrix(6, 4, rng);
    const DenseMatrix h = random_matrix(6, 4, rng);
    const IndexSets sets = test_helpers::random_positive_sets(6, 3, rng);

    const LossResult r = afgrl_loss(z, h, sets);
    CHECK(r.loss == doctest::Approx(brute_force_loss(z, h, sets)).epsilon(1e-12));

    const double step = 1e-5;
    DenseMatrix probe = z;
    for (std::size_t i = 0; i < z.rows; ++i) {
        for (std::size_t c = 0; c < z.cols; ++c) {
            probe(i, c) = z(i, c) + step;
            const double up = brute_force_loss(probe, h, sets);
            probe(i, c) = z(i, c) - step;
            const double down = brute_force_loss(probe, h, sets);
            probe(i, c) = z(i, c);
            CHECK(r.grad(i, c) == doctest::Approx((up - down) / (2 * step)).epsilon(1e-6));
        }
    }
}

TEST_CASE("afgrl_loss with zero-norm rows contributes nothing") {
    DenseMatrix z(2, 2), h(2, 2, 1.0);
    z.data = {0, 0, 1, 0};
    const LossResult r = afgrl_loss(z, h, {{1}, {0}});
    CHECK(r.grad(0, 0) == 0.0);
    CHECK(r.grad(0, 1) == 0.0);
    CHECK(std::isfinite(r.loss));
}

TEST_CASE("afgrl_loss respects the cosine bounds") {
    Rng rng(7);
    for (int trial = 0; trial < 5; ++trial) {
        const DenseMatrix z = random_matrix(8, 3, rng);
        const DenseMatrix h = random_matrix(8, 3, rng);
        const IndexSets sets = test_helpers::random_positive_sets(8, 4, rng);
        double pair_count = 0.0;
        for (const auto& s : sets) pair_count += static_cast<double>(s.size());
        const double bound = pair_count / 8.0;
        const double loss = afgrl_loss(z, h, sets).loss;
        CHECK(loss >= -bound - 1e-12);
        CHECK(loss <= bound + 1e-12);
    }
}

TEST_CASE("normalize flag divides each inner sum by the set size") {
    Rng rng(9);
    const DenseMatrix z = random_matrix(6, 3, rng);
    const DenseMatrix h = random_matrix(6, 3, rng);
    const IndexSets sets = test_helpers::random_positive_sets(6, 4, rng);
    CHECK(afgrl_loss(z, h, sets, true).loss ==
          doctest::Approx(brute_force_loss(z, h, sets, true)).epsilon(1e-12));
    const double sym_expected = brute_force_loss(z, h, sets, true) +
                                brute_force_loss(z, h, reversed_sets(sets), true);
    CHECK(symmetrized_loss(z, h, sets, true).loss ==
          doctest::Approx(sym_expected).epsilon(1e-12));
}

TEST_CASE("symmetrized_loss doubles symmetric positive sets") {
    Rng rng(11);
    const DenseMatrix z = random_matrix(4, 3, rng);
    const DenseMatrix h = random_matrix(4, 3, rng);
    // j in P_i <=> i in P_j
    const IndexSets sets{{1, 2}, {0}, {0, 3}, {2}};
    const double single = afgrl_loss(z, h, sets).loss;
    const double sym = symmetrized_loss(z, h, sets).loss;
    CHECK(sym == doctest::Approx(2.0 * single).epsilon(1e-12));
}

TEST_CASE("symmetrized_loss on identical vectors counts every pair twice") {
    const std::size_t n = 3;
    DenseMatrix z(n, 2), h(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        z(i, 0) = 1.0;
        h(i, 0) = 1.0;
    }
    const IndexSets sets{{0, 1}, {1}, {0, 2}};
    double pair_count = 0.0;
    for (const auto& s : sets) pair_count += static_cast<double>(s.size());
    const double sym = symmetrized_loss(z, h, sets).loss;
    CHECK(sym == doctest::Approx(-2.0 * pair_count / static_cast<double>(n)).epsilon(1e-12));
}

TEST_CASE("symmetrized_loss equals forward plus reversed brute force") {
    Rng rng(13);
    const DenseMatrix z = random_matrix(7, 3, rng);
    const DenseMatrix h = random_matrix(7, 3, rng);
    const IndexSets sets = test_helpers::random_positive_sets(7, 3, rng);
    const double expected =
        brute_force_loss(z, h, sets) + brute_force_loss(z, h, reversed_sets(sets));
    CHECK(symmetrized_loss(z, h, sets).loss == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("train_epoch with zero learning rate only moves the target") {
    Rng rng(17);
    const Graph g = sbm_fixture();
    const CsrMatrix a_norm = normalize_adjacency(g);
    TrainConfig cfg = small_config();
    DualNetwork net = DualNetwork::init(g.features.cols, cfg.embedding_dim, 1,
                                        cfg.predictor_hidden, cfg.tau, rng);
    AdamState adam = AdamState::init(net, 0.0, 0.0);

    const DenseMatrix w_before = net.online_encoder.layers[0].weight;
    const DualNetwork before = net;
    const EmbeddingPair pair = forward_pair(net, a_norm, g.features);
    const NeighborSets positives =
        discover_positives(pair.h_online, pair.h_target, g.adjacency, cfg.k, cfg.clusters,
                           cfg.kmeans_runs, cfg.kmeans_iters, 99);

    train_epoch(net, g, a_norm, adam, positives, cfg, 0);
    CHECK(net.online_encoder.layers[0].weight.data == w_before.data);
    CHECK(net.predictor.w1.data == before.predictor.w1.data);

    // target blended toward the (unchanged) online weights
    for (std::size_t i = 0; i < w_before.data.size(); ++i) {
        const double expected = cfg.tau * before.target_encoder.layers[0].weight.data[i] +
                                (1.0 - cfg.tau) * w_before.data[i];
        CHECK(net.target_encoder.layers[0].weight.data[i] ==
              doctest::Approx(expected).epsilon(1e-15));
    }
}

TEST_CASE("train_epoch with tau one keeps the target frozen") {
    Rng rng(19);
    const Graph g = sbm_fixture();
    const CsrMatrix a_norm = normalize_adjacency(g);
    TrainConfig cfg = small_config();
    cfg.tau = 1.0;
    DualNetwork net = DualNetwork::init(g.features.cols, cfg.embedding_dim, 1,
                                        cfg.predictor_hidden, cfg.tau, rng);
    AdamState adam = AdamState::init(net, cfg.learning_rate, 0.0);
    const EmbeddingPair pair = forward_pair(net, a_norm, g.features);
    const NeighborSets positives =
        discover_positives(pair.h_online, pair.h_target, g.adjacency, cfg.k, cfg.clusters,
                           cfg.kmeans_runs, cfg.kmeans_iters, 99);
    const DualNetwork before = net;
    for (std::size_t epoch = 0; epoch < 2; ++epoch) {
        const EpochMetrics m = train_epoch(net, g, a_norm, adam, positives, cfg, epoch);
        CHECK(std::isfinite(m.loss));
    }
    for (std::size_t l = 0; l < net.target_encoder.layers.size(); ++l) {
        CHECK(net.target_encoder.layers[l].weight.data ==
              before.target_encoder.layers[l].weight.data);
    }
    // the online network did train
    CHECK(net.online_encoder.layers[0].weight.data !=
          before.online_encoder.layers[0].weight.data);
}

TEST_CASE("train is deterministic for a fixed seed") {
    const Graph g = sbm_fixture();
    TrainConfig cfg = small_config();
    const TrainResult a = train(cfg, g);
    const TrainResult b = train(cfg, g);
    CHECK(a.embeddings.data == b.embeddings.data);
    REQUIRE(a.metrics.size() == b.metrics.size());
    for (std::size_t e = 0; e < a.metrics.size(); ++e) {
        CHECK(a.metrics[e].loss == b.metrics[e].loss);
        CHECK(a.metrics[e].mean_positives == b.metrics[e].mean_positives);
    }
}

TEST_CASE("train with zero epochs emits the random initialization") {
    const Graph g = sbm_fixture();
    TrainConfig cfg = small_config();
    cfg.epochs = 0;
    const TrainResult result = train(cfg, g);
    CHECK(result.metrics.empty());

    // the embeddings are the eval-mode forward of the seeded initialization
    Rng init_rng(derive_seed(cfg.seed, "init"));
    DualNetwork net = DualNetwork::init(g.features.cols, cfg.embedding_dim, cfg.layers,
                                        cfg.predictor_hidden, cfg.tau, init_rng);
    const CsrMatrix a_norm = normalize_adjacency(g);
    const DenseMatrix expected =
        encoder_forward(net.online_encoder, a_norm, g.features, Mode::kEval);
    CHECK(result.embeddings.data == expected.data);
}

TEST_CASE("train tolerates an init-only positive schedule") {
    const Graph g = sbm_fixture();
    TrainConfig cfg = small_config();
    cfg.epochs = 4;
    cfg.refresh_period = 100;  // beyond the epoch count: refresh only at init
    const TrainResult result = train(cfg, g);
    CHECK(result.metrics.size() == 4);
    for (const EpochMetrics& m : result.metrics) CHECK(std::isfinite(m.loss));
}

TEST_CASE("train rejects oversized k") {
    const Graph g = sbm_fixture();
    TrainConfig cfg = small_config();
    cfg.k = g.n;
    CHECK_THROWS_AS(train(cfg, g), ConfigError);
}

// Golden trace from the reference run of this fixture and configuration.
// Regenerate by printing the first ten losses if the defaults change.
TEST_CASE("train loss trace decreases and replays the golden values") {
    const Graph g = sbm_fixture();
    TrainConfig cfg = small_config();
    cfg.epochs = 50;
    const TrainResult result = train(cfg, g);
    REQUIRE(result.metrics.size() == 50);
    for (std::size_t e = 1; e < 10; ++e) {
        CHECK(result.metrics[e].loss < result.metrics[e - 1].loss);
    }
    const std::vector<double> golden = {
        0.37676215122752976,
        0.20381762477513399,
        0.14579545270103794,
        -0.068536711949197679,
        -0.20432633756199017,
        -0.26223582725124073,
        -0.32545328857513228,
        -0.51582203751373445,
        -0.64735584549558767,
        -0.79149149331033908,
    };
    for (std::size_t e = 0; e < golden.size(); ++e) {
        CHECK(result.metrics[e].loss == doctest::Approx(golden[e]).epsilon(1e-9));
    }
}
