#include "afgrl/eval.hpp"

#include <algorithm>
#include <cmath>
#include <iterator>
#include <limits>
#include <stdexcept>
#include <string>

#include "afgrl/error.hpp"
#include "afgrl/positives.hpp"
#include "afgrl/rng.hpp"

namespace afgrl {

namespace {

// Dense contingency table after remapping both labelings to [0, K).
struct Contingency {
    std::size_t n = 0;
    std::size_t ka = 0, kb = 0;
    std::vector<std::size_t> counts;  // ka x kb
    std::vector<std::size_t> row_sums, col_sums;

    std::size_t at(std::size_t i, std::size_t j) const { return counts[i * kb + j]; }
};

std::vector<int> remap(const std::vector<int>& labels, std::size_t& num_ids) {
    std::vector<int> sorted = labels;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<int> out(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        out[i] = static_cast<int>(
            std::lower_bound(sorted.begin(), sorted.end(), labels[i]) - sorted.begin());
    }
    num_ids = sorted.size();
    return out;
}

Contingency contingency_table(const std::vector<int>& a, const std::vector<int>& b) {
    if (a.size() != b.size()) {
        throw std::invalid_argument("clustering metrics: label lengths differ");
    }
    if (a.empty()) throw std::invalid_argument("clustering metrics: empty labelings");
    Contingency c;
    c.n = a.size();
    const std::vector<int> ra = remap(a, c.ka);
    const std::vector<int> rb = remap(b, c.kb);
    c.counts.assign(c.ka * c.kb, 0);
    c.row_sums.assign(c.ka, 0);
    c.col_sums.assign(c.kb, 0);
    for (std::size_t i = 0; i < c.n; ++i) {
        ++c.counts[static_cast<std::size_t>(ra[i]) * c.kb + static_cast<std::size_t>(rb[i])];
        ++c.row_sums[static_cast<std::size_t>(ra[i])];
        ++c.col_sums[static_cast<std::size_t>(rb[i])];
    }
    return c;
}

double entropy(const std::vector<std::size_t>& sums, std::size_t n) {
    double h = 0.0;
    for (std::size_t s : sums) {
        if (s == 0) continue;
        const double p = static_cast<double>(s) / static_cast<double>(n);
        h -= p * std::log(p);
    }
    return h;
}

double mutual_information(const Contingency& c) {
    double mi = 0.0;
    for (std::size_t i = 0; i < c.ka; ++i) {
        for (std::size_t j = 0; j < c.kb; ++j) {
            const std::size_t nij = c.at(i, j);
            if (nij == 0) continue;
            const double pij = static_cast<double>(nij) / static_cast<double>(c.n);
            mi += pij * std::log(static_cast<double>(c.n) * static_cast<double>(nij) /
                                 (static_cast<double>(c.row_sums[i]) *
                                  static_cast<double>(c.col_sums[j])));
        }
    }
    return mi;
}

double clamp01(double v) { return std::min(1.0, std::max(0.0, v)); }

double same_label_ratio(const std::vector<std::size_t>& members, int query_label,
                        const std::vector<int>& labels) {
    std::size_t hits = 0;
    for (std::size_t j : members) {
        if (labels[j] == query_label) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(members.size());
}

// --- linear probe internals ---------------------------------------------

struct ProbeModel {
    DenseMatrix w;           // D x C
    std::vector<double> b;   // C
};

struct ProbeData {
    DenseMatrix x;  // standardized embeddings, all nodes
    std::vector<int> y;
    std::size_t classes = 0;
};

// loss = cross-entropy over the rows in `idx` + 0.5 * reg * |w|^2
double probe_loss_grad(const ProbeModel& model, const ProbeData& data,
                       const std::vector<std::size_t>& idx, double reg, DenseMatrix& gw,
                       std::vector<double>& gb) {
    const std::size_t d = model.w.rows, c = model.w.cols;
    gw = DenseMatrix(d, c);
    gb.assign(c, 0.0);
    double loss = 0.0;
    std::vector<double> logits(c);
    const double inv_m = 1.0 / static_cast<double>(idx.size());
    for (std::size_t row : idx) {
        const double* x = data.x.row(row);
        for (std::size_t j = 0; j < c; ++j) {
            double acc = model.b[j];
            for (std::size_t f = 0; f < d; ++f) acc += x[f] * model.w(f, j);
            logits[j] = acc;
        }
        const double max_logit = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(logits[j] - max_logit);
        const double log_z = std::log(z) + max_logit;
        loss -= inv_m * (logits[static_cast<std::size_t>(data.y[row])] - log_z);
        for (std::size_t j = 0; j < c; ++j) {
            double p = std::exp(logits[j] - log_z);
            if (j == static_cast<std::size_t>(data.y[row])) p -= 1.0;
            p *= inv_m;
            gb[j] += p;
            for (std::size_t f = 0; f < d; ++f) gw(f, j) += p * x[f];
        }
    }
    for (std::size_t i = 0; i < gw.data.size(); ++i) {
        loss += 0.5 * reg * model.w.data[i] * model.w.data[i];
        gw.data[i] += reg * model.w.data[i];
    }
    return loss;
}

double probe_loss_only(const ProbeModel& model, const ProbeData& data,
                       const std::vector<std::size_t>& idx, double reg) {
    const std::size_t d = model.w.rows, c = model.w.cols;
    double loss = 0.0;
    std::vector<double> logits(c);
    const double inv_m = 1.0 / static_cast<double>(idx.size());
    for (std::size_t row : idx) {
        const double* x = data.x.row(row);
        for (std::size_t j = 0; j < c; ++j) {
            double acc = model.b[j];
            for (std::size_t f = 0; f < d; ++f) acc += x[f] * model.w(f, j);
            logits[j] = acc;
        }
        const double max_logit = *std::max_element(logits.begin(), logits.end());
        double z = 0.0;
        for (std::size_t j = 0; j < c; ++j) z += std::exp(logits[j] - max_logit);
        loss -= inv_m * (logits[static_cast<std::size_t>(data.y[row])] - std::log(z) - max_logit);
    }
    for (double v : model.w.data) loss += 0.5 * reg * v * v;
    return loss;
}

ProbeModel fit_probe(const ProbeData& data, const std::vector<std::size_t>& train_idx,
                     double reg) {
    ProbeModel model;
    model.w = DenseMatrix(data.x.cols, data.classes);
    model.b.assign(data.classes, 0.0);

    constexpr std::size_t kMaxIters = 1000;
    constexpr double kGradTol = 1e-6;
    DenseMatrix gw;
    std::vector<double> gb;
    double loss = probe_loss_grad(model, data, train_idx, reg, gw, gb);
    for (std::size_t iter = 0; iter < kMaxIters; ++iter) {
        double grad_sq = 0.0;
        for (double v : gw.data) grad_sq += v * v;
        for (double v : gb) grad_sq += v * v;
        if (std::sqrt(grad_sq) < kGradTol) break;

        // backtracking line search along the negative gradient
        double step = 1.0;
        ProbeModel trial = model;
        bool accepted = false;
        for (int halvings = 0; halvings < 60; ++halvings) {
            for (std::size_t i = 0; i < model.w.data.size(); ++i) {
                trial.w.data[i] = model.w.data[i] - step * gw.data[i];
            }
            for (std::size_t j = 0; j < model.b.size(); ++j) {
                trial.b[j] = model.b[j] - step * gb[j];
            }
            const double trial_loss = probe_loss_only(trial, data, train_idx, reg);
            if (trial_loss <= loss - 0.25 * step * grad_sq) {
                model = trial;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;  // no admissible step left at double precision
        loss = probe_loss_grad(model, data, train_idx, reg, gw, gb);
    }
    return model;
}

double probe_accuracy(const ProbeModel& model, const ProbeData& data,
                      const std::vector<std::size_t>& idx) {
    std::size_t hits = 0;
    const std::size_t d = model.w.rows, c = model.w.cols;
    for (std::size_t row : idx) {
        const double* x = data.x.row(row);
        double best = -std::numeric_limits<double>::infinity();
        std::size_t best_class = 0;
        for (std::size_t j = 0; j < c; ++j) {
            double acc = model.b[j];
            for (std::size_t f = 0; f < d; ++f) acc += x[f] * model.w(f, j);
            if (acc > best) {
                best = acc;
                best_class = j;
            }
        }
        if (static_cast<int>(best_class) == data.y[row]) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(idx.size());
}

}  // namespace

ProbeResult linear_probe(const DenseMatrix& h, const std::vector<int>& labels,
                         const Splits& splits, const std::vector<double>& reg_grid) {
    if (labels.size() != h.rows) {
        throw std::invalid_argument("linear_probe: label count differs from row count");
    }
    if (reg_grid.empty()) throw std::invalid_argument("linear_probe: empty regularization grid");

    std::size_t classes = 0;
    ProbeData data;
    data.y = remap(labels, classes);
    data.classes = classes;

    std::vector<bool> in_train(classes, false);
    for (std::size_t i : splits.train) in_train[static_cast<std::size_t>(data.y[i])] = true;
    for (std::size_t c = 0; c < classes; ++c) {
        if (!in_train[c]) {
            throw DataError("linear_probe: class " + std::to_string(c) +
                            " is absent from the train split");
        }
    }

    // standardize columns with train-split statistics; constant columns are
    // zeroed rather than blown up
    data.x = DenseMatrix(h.rows, h.cols);
    {
        const double m = static_cast<double>(splits.train.size());
        std::vector<double> mean(h.cols, 0.0), scale(h.cols, 0.0);
        for (std::size_t i : splits.train) {
            const double* row = h.row(i);
            for (std::size_t j = 0; j < h.cols; ++j) mean[j] += row[j];
        }
        for (std::size_t j = 0; j < h.cols; ++j) mean[j] /= m;
        for (std::size_t i : splits.train) {
            const double* row = h.row(i);
            for (std::size_t j = 0; j < h.cols; ++j) {
                const double c = row[j] - mean[j];
                scale[j] += c * c;
            }
        }
        for (std::size_t j = 0; j < h.cols; ++j) {
            const double sd = std::sqrt(scale[j] / m);
            scale[j] = sd < 1e-12 ? 0.0 : 1.0 / sd;
        }
        for (std::size_t i = 0; i < h.rows; ++i) {
            const double* src = h.row(i);
            double* dst = data.x.row(i);
            for (std::size_t j = 0; j < h.cols; ++j) dst[j] = (src[j] - mean[j]) * scale[j];
        }
    }

    ProbeResult best;
    best.valid_accuracy = -1.0;
    for (double reg : reg_grid) {
        const ProbeModel model = fit_probe(data, splits.train, reg);
        const double valid_acc = probe_accuracy(model, data, splits.valid);
        if (valid_acc > best.valid_accuracy) {
            best.valid_accuracy = valid_acc;
            best.test_accuracy = probe_accuracy(model, data, splits.test);
            best.chosen_reg = reg;
        }
    }
    return best;
}

double nmi(const std::vector<int>& a, const std::vector<int>& b) {
    const Contingency c = contingency_table(a, b);
    const double ha = entropy(c.row_sums, c.n);
    const double hb = entropy(c.col_sums, c.n);
    if (ha == 0.0 && hb == 0.0) return 1.0;  // both single-cluster: identical partitions
    if (ha == 0.0 || hb == 0.0) return 0.0;
    return clamp01(mutual_information(c) / (0.5 * (ha + hb)));
}

double homogeneity(const std::vector<int>& pred, const std::vector<int>& truth) {
    const Contingency c = contingency_table(pred, truth);
    const double h_truth = entropy(c.col_sums, c.n);
    if (h_truth == 0.0) return 1.0;
    // H(truth | pred)
    double h_cond = 0.0;
    for (std::size_t i = 0; i < c.ka; ++i) {
        if (c.row_sums[i] == 0) continue;
        for (std::size_t j = 0; j < c.kb; ++j) {
            const std::size_t nij = c.at(i, j);
            if (nij == 0) continue;
            const double pij = static_cast<double>(nij) / static_cast<double>(c.n);
            h_cond -= pij * std::log(static_cast<double>(nij) /
                                     static_cast<double>(c.row_sums[i]));
        }
    }
    return clamp01(1.0 - h_cond / h_truth);
}

double sim_at_n(const DenseMatrix& h, const std::vector<int>& labels, std::size_t n) {
    if (labels.size() != h.rows) {
        throw std::invalid_argument("sim_at_n: label count differs from row count");
    }
    const IndexSets neighbors = knn_cross(h, h, n);
    double total = 0.0;
    for (std::size_t i = 0; i < h.rows; ++i) {
        total += same_label_ratio(neighbors[i], labels[i], labels);
    }
    return total / static_cast<double>(h.rows);
}

RatioCurve correct_ratio_curve(const DenseMatrix& h, const std::vector<int>& labels,
                               const CsrMatrix& adjacency,
                               const std::vector<std::size_t>& ks) {
    if (labels.size() != h.rows) {
        throw std::invalid_argument("correct_ratio_curve: label count differs from row count");
    }
    RatioCurve curve;
    curve.ks = ks;
    const IndexSets adjacent = adjacency_sets(adjacency);

    double adj_total = 0.0;
    std::size_t adj_counted = 0;
    for (std::size_t i = 0; i < h.rows; ++i) {
        if (adjacent[i].empty()) {
            ++curve.adj_skipped;
            continue;
        }
        adj_total += same_label_ratio(adjacent[i], labels[i], labels);
        ++adj_counted;
    }
    curve.adj_ratio = adj_counted ? adj_total / static_cast<double>(adj_counted) : 0.0;

    for (std::size_t k : ks) {
        const IndexSets knn = knn_cross(h, h, k);
        double knn_total = 0.0, local_total = 0.0;
        std::size_t local_counted = 0, local_skipped = 0;
        for (std::size_t i = 0; i < h.rows; ++i) {
            knn_total += same_label_ratio(knn[i], labels[i], labels);
            std::vector<std::size_t> local;
            std::set_intersection(knn[i].begin(), knn[i].end(), adjacent[i].begin(),
                                  adjacent[i].end(), std::back_inserter(local));
            if (local.empty()) {
                ++local_skipped;
                continue;
            }
            local_total += same_label_ratio(local, labels[i], labels);
            ++local_counted;
        }
        curve.knn_ratio.push_back(knn_total / static_cast<double>(h.rows));
        curve.local_ratio.push_back(local_counted ? local_total / static_cast<double>(local_counted)
                                                  : 0.0);
        curve.local_skipped.push_back(local_skipped);
    }
    return curve;
}

ClusterScore kmeans_eval(const DenseMatrix& h, const std::vector<int>& labels,
                         std::size_t num_clusters, std::size_t runs, std::uint64_t seed,
                         std::size_t max_iters) {
    if (labels.size() != h.rows) {
        throw std::invalid_argument("kmeans_eval: label count differs from row count");
    }
    if (runs == 0) throw std::invalid_argument("kmeans_eval: need at least one run");
    ClusterAssignment best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < runs; ++j) {
        Rng rng(seed + j);
        ClusterAssignment run = kmeans(h, num_clusters, max_iters, rng);
        if (run.inertia < best.inertia) best = std::move(run);
    }
    ClusterScore score;
    score.nmi = nmi(best.assignments, labels);
    score.homogeneity = homogeneity(best.assignments, labels);
    return score;
}

}  // namespace afgrl
