#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "afgrl/error.hpp"
#include "afgrl/eval.hpp"
#include "afgrl/graph.hpp"
#include "test_helpers.hpp"

using namespace afgrl;
using test_helpers::random_matrix;

namespace {

// Independent clustering-metric oracle built from explicit set intersections.
struct PartitionOracle {
    std::vector<std::vector<std::size_t>> groups_a, groups_b;
    std::size_t n;

    PartitionOracle(const std::vector<int>& a, const std::vector<int>& b) : n(a.size()) {
        auto build = [&](const std::vector<int>& labels) {
            std::map<int, std::vector<std::size_t>> by_label;
            for (std::size_t i = 0; i < labels.size(); ++i) by_label[labels[i]].push_back(i);
            std::vector<std::vector<std::size_t>> groups;
            for (auto& [label, members] : by_label) groups.push_back(members);
            return groups;
        };
        groups_a = build(a);
        groups_b = build(b);
    }

    static std::size_t overlap(const std::vector<std::size_t>& x,
                               const std::vector<std::size_t>& y) {
        std::vector<std::size_t> inter;
        std::set_intersection(x.begin(), x.end(), y.begin(), y.end(),
                              std::back_inserter(inter));
        return inter.size();
    }

    double entropy(const std::vector<std::vector<std::size_t>>& groups) const {
        double h = 0.0;
        for (const auto& g : groups) {
            const double p = static_cast<double>(g.size()) / static_cast<double>(n);
            h -= p * std::log(p);
        }
        return h;
    }

    double mi() const {
        double total = 0.0;
        for (const auto& ga : groups_a) {
            for (const auto& gb : groups_b) {
                const std::size_t o = overlap(ga, gb);
                if (o == 0) continue;
                const double pij = static_cast<double>(o) / static_cast<double>(n);
                const double pa = static_cast<double>(ga.size()) / static_cast<double>(n);
                const double pb = static_cast<double>(gb.size()) / static_cast<double>(n);
                total += pij * std::log(pij / (pa * pb));
            }
        }
        return total;
    }

    double nmi() const {
        const double ha = entropy(groups_a), hb = entropy(groups_b);
        if (ha == 0.0 && hb == 0.0) return 1.0;
        if (ha == 0.0 || hb == 0.0) return 0.0;
        return mi() / (0.5 * (ha + hb));
    }

    double homogeneity() const {
        const double hb = entropy(groups_b);
        if (hb == 0.0) return 1.0;
        double h_cond = 0.0;
        for (const auto& ga : groups_a) {
            for (const auto& gb : groups_b) {
                const std::size_t o = overlap(ga, gb);
                if (o == 0) continue;
                const double pij = static_cast<double>(o) / static_cast<double>(n);
                h_cond -= pij * std::log(static_cast<double>(o) /
                                         static_cast<double>(ga.size()));
            }
        }
        return 1.0 - h_cond / hb;
    }
};

DenseMatrix one_hot(const std::vector<int>& labels, std::size_t classes) {
    DenseMatrix m(labels.size(), classes);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        m(i, static_cast<std::size_t>(labels[i])) = 1.0;
    }
    return m;
}

std::vector<int> cyclic_labels(std::size_t n, int classes) {
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) labels[i] = static_cast<int>(i) % classes;
    return labels;
}

}  // namespace

TEST_CASE("linear_probe separates one-hot embeddings for every grid point") {
    const std::size_t n = 60;
    const std::vector<int> labels = cyclic_labels(n, 3);
    const DenseMatrix h = one_hot(labels, 3);
    const Splits splits = make_splits(n, 0.2, 0.2, 5);
    for (double reg : {1e-4, 1e-3, 1e-2, 1e-1, 1.0}) {
        const ProbeResult r = linear_probe(h, labels, splits, {reg});
        CHECK(r.test_accuracy == 1.0);
        CHECK(r.chosen_reg == reg);
    }
}

TEST_CASE("linear_probe on all-zero embeddings predicts the majority class") {
    const std::size_t n = 50;
    // class 1 on every third node, class 0 elsewhere: 0 is the majority
    std::vector<int> labels(n, 0);
    for (std::size_t i = 0; i < n; i += 3) labels[i] = 1;
    const DenseMatrix h(n, 4);  // all zeros

    // hand-built splits so both classes are in train by construction
    Splits splits;
    for (std::size_t i = 0; i < 10; ++i) splits.train.push_back(i);
    for (std::size_t i = 10; i < 20; ++i) splits.valid.push_back(i);
    for (std::size_t i = 20; i < n; ++i) splits.test.push_back(i);

    std::size_t zeros_in_train = 0;
    for (std::size_t i : splits.train) zeros_in_train += labels[i] == 0;
    REQUIRE(zeros_in_train * 2 > splits.train.size());  // majority is class 0
    std::size_t zeros_in_test = 0;
    for (std::size_t i : splits.test) zeros_in_test += labels[i] == 0;
    const double expected =
        static_cast<double>(zeros_in_test) / static_cast<double>(splits.test.size());

    const ProbeResult r = linear_probe(h, labels, splits);
    CHECK(r.test_accuracy == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("linear_probe separates gaussian blobs") {
    Rng rng(7);
    const std::size_t per_class = 100;
    DenseMatrix h(2 * per_class, 2);
    std::vector<int> labels(2 * per_class);
    for (std::size_t i = 0; i < per_class; ++i) {
        h(i, 0) = 3.0 + rng.normal();
        h(i, 1) = 3.0 + rng.normal();
        labels[i] = 0;
        h(per_class + i, 0) = -3.0 + rng.normal();
        h(per_class + i, 1) = -3.0 + rng.normal();
        labels[per_class + i] = 1;
    }
    const Splits splits = make_splits(2 * per_class, 0.3, 0.2, 11);
    const ProbeResult r = linear_probe(h, labels, splits);
    CHECK(r.test_accuracy >= 0.95);
}

TEST_CASE("linear_probe requires every class in the train split") {
    const std::size_t n = 30;
    std::vector<int> labels(n, 0);
    labels[n - 1] = 1;  // a single node of class 1
    const DenseMatrix h = one_hot(labels, 2);
    // craft splits that push the class-1 node into test
    Splits splits;
    for (std::size_t i = 0; i < 6; ++i) splits.train.push_back(i);
    for (std::size_t i = 6; i < 12; ++i) splits.valid.push_back(i);
    for (std::size_t i = 12; i < n; ++i) splits.test.push_back(i);
    CHECK_THROWS_AS(linear_probe(h, labels, splits), DataError);
}

TEST_CASE("linear_probe train accuracy beats the majority floor") {
    Rng rng(13);
    const std::size_t n = 80;
    const DenseMatrix h = random_matrix(n, 6, rng);
    const std::vector<int> labels = cyclic_labels(n, 2);
    const Splits splits = make_splits(n, 0.5, 0.2, 17);

    std::vector<std::size_t> counts(2, 0);
    for (std::size_t i : splits.train) ++counts[static_cast<std::size_t>(labels[i])];
    const double majority =
        static_cast<double>(std::max(counts[0], counts[1])) /
        static_cast<double>(splits.train.size());

    // evaluate the fitted model on its own training rows via a split whose
    // test set is the train set
    Splits sanity;
    sanity.train = splits.train;
    sanity.valid = splits.valid;
    sanity.test = splits.train;
    const ProbeResult r = linear_probe(h, labels, sanity);
    CHECK(r.test_accuracy >= majority - 1e-12);
}

TEST_CASE("nmi basics") {
    CHECK(nmi({0, 0, 1, 1}, {1, 1, 0, 0}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(nmi({0, 0, 0, 0}, {0, 1, 0, 1}) == 0.0);
    CHECK(nmi({0, 0, 1, 1}, {0, 1, 0, 1}) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(nmi({2, 2, 2}, {5, 5, 5}) == 1.0);  // both single-cluster
    CHECK_THROWS_AS(nmi({0, 1}, {0}), std::invalid_argument);
}

TEST_CASE("nmi is invariant under label permutations") {
    Rng rng(19);
    std::vector<int> a(40), b(40);
    for (std::size_t i = 0; i < 40; ++i) {
        a[i] = static_cast<int>(rng.uniform_index(4));
        b[i] = static_cast<int>(rng.uniform_index(3));
    }
    const double base = nmi(a, b);
    std::vector<int> permuted = a;
    for (int& v : permuted) v = (v + 7) % 4 + 100;  // relabel clusters
    CHECK(nmi(permuted, b) == doctest::Approx(base).epsilon(1e-12));
    CHECK(nmi(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("homogeneity basics and the hand-computed case") {
    // every predicted cluster pure (over-segmented truth)
    CHECK(homogeneity({0, 1, 2, 3}, {0, 0, 1, 1}) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(homogeneity({0, 0, 0, 0}, {0, 0, 1, 1}) == doctest::Approx(0.0).epsilon(1e-12));

    // pred {0,0,1,1}, truth {0,0,0,1}: H(truth|pred) = 0.5*ln2,
    // H(truth) = -(0.75 ln 0.75 + 0.25 ln 0.25)
    const double h_truth = -(0.75 * std::log(0.75) + 0.25 * std::log(0.25));
    const double expected = 1.0 - 0.5 * std::log(2.0) / h_truth;
    const double got = homogeneity({0, 0, 1, 1}, {0, 0, 0, 1});
    CHECK(got == doctest::Approx(expected).epsilon(1e-12));
    CHECK(got == doctest::Approx(0.3837).epsilon(1e-3));
}

TEST_CASE("nmi and homogeneity match the set-intersection oracle on random labelings") {
    Rng rng(23);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 2 + rng.uniform_index(30);
        std::vector<int> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = static_cast<int>(rng.uniform_index(4));
            b[i] = static_cast<int>(rng.uniform_index(4));
        }
        const PartitionOracle oracle(a, b);
        CHECK(nmi(a, b) == doctest::Approx(std::min(1.0, std::max(0.0, oracle.nmi())))
                                .epsilon(1e-12));
        CHECK(homogeneity(a, b) ==
              doctest::Approx(std::min(1.0, std::max(0.0, oracle.homogeneity())))
                  .epsilon(1e-12));
    }
}

TEST_CASE("sim_at_n on label-pure geometry") {
    const std::vector<int> same(12, 3);
    Rng rng(29);
    const DenseMatrix h = random_matrix(12, 4, rng);
    CHECK(sim_at_n(h, same, 5) == 1.0);

    // two orthogonal label-pure clusters of identical embeddings
    DenseMatrix two(10, 2);
    std::vector<int> labels(10);
    for (std::size_t i = 0; i < 5; ++i) {
        two(i, 0) = 1.0;
        labels[i] = 0;
        two(5 + i, 1) = 1.0;
        labels[5 + i] = 1;
    }
    CHECK(sim_at_n(two, labels, 4) == 1.0);
    CHECK_THROWS_AS(sim_at_n(two, labels, 10), std::invalid_argument);
}

TEST_CASE("sim_at_n near one half under a permutation null") {
    Rng rng(31);
    const std::size_t n = 1000;
    const DenseMatrix h = random_matrix(n, 8, rng);
    const std::vector<int> labels = cyclic_labels(n, 2);
    const double ratio = sim_at_n(h, labels, 10);
    CHECK(ratio > 0.45);
    CHECK(ratio < 0.55);
}

TEST_CASE("sim_at_n is invariant to positive row scaling") {
    Rng rng(37);
    const DenseMatrix h = random_matrix(30, 4, rng);
    DenseMatrix scaled = h;
    for (std::size_t i = 0; i < 30; ++i) {
        const double s = rng.uniform(0.5, 3.0);
        for (std::size_t c = 0; c < 4; ++c) scaled(i, c) *= s;
    }
    const std::vector<int> labels = cyclic_labels(30, 3);
    CHECK(sim_at_n(h, labels, 6) == sim_at_n(scaled, labels, 6));
}

TEST_CASE("correct_ratio_curve on label-pure clusters") {
    // two 8-node cliques with orthogonal identical embeddings
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < 8; ++i) {
        for (std::size_t j = i + 1; j < 8; ++j) {
            edges.emplace_back(i, j);
            edges.emplace_back(8 + i, 8 + j);
        }
    }
    const CsrMatrix adjacency = adjacency_from_edges(16, edges);
    DenseMatrix h(16, 2);
    std::vector<int> labels(16);
    for (std::size_t i = 0; i < 8; ++i) {
        h(i, 0) = 1.0;
        labels[i] = 0;
        h(8 + i, 1) = 1.0;
        labels[8 + i] = 1;
    }
    const RatioCurve curve = correct_ratio_curve(h, labels, adjacency, {2, 4});
    CHECK(curve.adj_ratio == 1.0);
    CHECK(curve.adj_skipped == 0);
    for (double r : curve.knn_ratio) CHECK(r == 1.0);
    for (double r : curve.local_ratio) CHECK(r == 1.0);
}

TEST_CASE("correct_ratio_curve adjacency line is constant across ks") {
    Rng rng(41);
    const Graph g = test_helpers::random_graph(40, 4, 0.15, rng);
    const DenseMatrix h = random_matrix(40, 4, rng);
    const std::vector<int> labels = cyclic_labels(40, 2);
    const RatioCurve c1 = correct_ratio_curve(h, labels, g.adjacency, {2});
    const RatioCurve c2 = correct_ratio_curve(h, labels, g.adjacency, {2, 8, 16});
    CHECK(c1.adj_ratio == c2.adj_ratio);
}

TEST_CASE("correct_ratio_curve counts skipped empty sets") {
    // one isolated node: its adjacency set and local positives are empty
    const CsrMatrix adjacency = adjacency_from_edges(4, {{0, 1}, {1, 2}, {0, 2}});
    DenseMatrix h(4, 2, 1.0);
    const std::vector<int> labels{0, 0, 0, 1};
    const RatioCurve curve = correct_ratio_curve(h, labels, adjacency, {2});
    CHECK(curve.adj_skipped == 1);
    CHECK(curve.local_skipped[0] == 1);
}

TEST_CASE("kmeans_eval endpoints") {
    const std::vector<int> labels = cyclic_labels(30, 3);
    const ClusterScore perfect = kmeans_eval(one_hot(labels, 3), labels, 3, 5, 7);
    CHECK(perfect.nmi == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(perfect.homogeneity == doctest::Approx(1.0).epsilon(1e-9));

    const ClusterScore flat = kmeans_eval(DenseMatrix(30, 4, 1.0), labels, 2, 3, 7);
    CHECK(flat.nmi == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("kmeans_eval separates blob fixtures") {
    Rng rng(43);
    const std::size_t per_class = 40;
    DenseMatrix h(3 * per_class, 4);
    std::vector<int> labels(3 * per_class);
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t i = 0; i < per_class; ++i) {
            const std::size_t row = c * per_class + i;
            labels[row] = static_cast<int>(c);
            for (std::size_t f = 0; f < 4; ++f) h(row, f) = 0.05 * rng.normal();
            h(row, c) += 10.0;
        }
    }
    const ClusterScore score = kmeans_eval(h, labels, 3, 10, 11);
    CHECK(score.nmi >= 0.95);
    CHECK(score.homogeneity >= 0.95);
}
