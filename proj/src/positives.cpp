#include "afgrl/positives.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "afgrl/error.hpp"
#include "afgrl/parallel.hpp"

namespace afgrl {

namespace {

constexpr double kNormEps = 1e-12;

std::vector<std::size_t> set_intersection(const std::vector<std::size_t>& a,
                                          const std::vector<std::size_t>& b) {
    std::vector<std::size_t> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

std::vector<std::size_t> set_union(const std::vector<std::size_t>& a,
                                   const std::vector<std::size_t>& b) {
    std::vector<std::size_t> out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

}  // namespace

IndexSets knn_cross(const DenseMatrix& h_online, const DenseMatrix& h_target, std::size_t k) {
    if (h_online.rows != h_target.rows || h_online.cols != h_target.cols) {
        throw std::invalid_argument("knn_cross: view shapes differ");
    }
    const std::size_t n = h_online.rows;
    if (k >= n) throw std::invalid_argument("knn_cross: k must be below the node count");

    const std::vector<double> online_norms = row_norms(h_online);
    const std::vector<double> target_norms = row_norms(h_target);

    IndexSets result(n);
    parallel_for(n, [&](std::size_t i0, std::size_t i1) {
        std::vector<std::pair<double, std::size_t>> order(n);
        for (std::size_t i = i0; i < i1; ++i) {
            const double* qi = h_online.row(i);
            const double qn = online_norms[i];
            for (std::size_t j = 0; j < n; ++j) {
                double sim = 0.0;
                if (j != i && qn >= kNormEps && target_norms[j] >= kNormEps) {
                    const double* tj = h_target.row(j);
                    double dot = 0.0;
                    for (std::size_t c = 0; c < h_online.cols; ++c) dot += qi[c] * tj[c];
                    sim = dot / (qn * target_norms[j]);
                }
                order[j] = {sim, j};
            }
            // self gets similarity -inf so it can never be selected
            order[i].first = -std::numeric_limits<double>::infinity();
            std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                              order.end(), [](const auto& a, const auto& b) {
                                  if (a.first != b.first) return a.first > b.first;
                                  return a.second < b.second;
                              });
            std::vector<std::size_t> picked(k);
            for (std::size_t t = 0; t < k; ++t) picked[t] = order[t].second;
            std::sort(picked.begin(), picked.end());
            result[i] = std::move(picked);
        }
    });
    return result;
}

ClusterAssignment kmeans(const DenseMatrix& h, std::size_t num_clusters,
                         std::size_t max_iters, Rng& rng) {
    const std::size_t n = h.rows, d = h.cols;
    if (num_clusters == 0 || num_clusters > n) {
        throw std::invalid_argument("kmeans: need 1 <= K <= point count");
    }
    if (max_iters == 0) throw std::invalid_argument("kmeans: max_iters must be >= 1");

    const DenseMatrix x = row_l2_normalize(h);

    auto sq_dist = [&](const double* a, const double* b) {
        double s = 0.0;
        for (std::size_t c = 0; c < d; ++c) {
            const double diff = a[c] - b[c];
            s += diff * diff;
        }
        return s;
    };

    // k-means++ seeding; when all remaining distances are zero (duplicate
    // data) the next center is drawn uniformly.
    DenseMatrix centroids(num_clusters, d);
    std::vector<double> min_dist(n, std::numeric_limits<double>::infinity());
    {
        const std::size_t first = rng.uniform_index(n);
        std::copy_n(x.row(first), d, centroids.row(0));
        for (std::size_t c = 1; c < num_clusters; ++c) {
            double total = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                min_dist[i] = std::min(min_dist[i], sq_dist(x.row(i), centroids.row(c - 1)));
                total += min_dist[i];
            }
            std::size_t chosen;
            if (total > 0.0) {
                const double target = rng.uniform() * total;
                double acc = 0.0;
                chosen = n - 1;
                for (std::size_t i = 0; i < n; ++i) {
                    acc += min_dist[i];
                    if (acc > target) {
                        chosen = i;
                        break;
                    }
                }
            } else {
                chosen = rng.uniform_index(n);
            }
            std::copy_n(x.row(chosen), d, centroids.row(c));
        }
    }

    ClusterAssignment result;
    result.assignments.assign(n, -1);
    std::vector<int> prev(n, -1);
    std::vector<std::size_t> counts(num_clusters, 0);

    std::vector<double> best_dist(n, 0.0);
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        // assignment step; ties go to the smaller cluster id. Points are
        // independent, so this parallelizes without changing any reduction
        // order; the inertia sum stays sequential below.
        parallel_for(n, [&](std::size_t i0, std::size_t i1) {
            for (std::size_t i = i0; i < i1; ++i) {
                double best = std::numeric_limits<double>::infinity();
                int best_c = 0;
                for (std::size_t c = 0; c < num_clusters; ++c) {
                    const double dist = sq_dist(x.row(i), centroids.row(c));
                    if (dist < best) {
                        best = dist;
                        best_c = static_cast<int>(c);
                    }
                }
                result.assignments[i] = best_c;
                best_dist[i] = best;
            }
        });
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) inertia += best_dist[i];
        result.inertia = inertia;
        result.inertia_trace.push_back(inertia);
        result.centroids = centroids;  // the centroids this assignment was made against
        if (result.assignments == prev) break;
        prev = result.assignments;

        // update step
        centroids = DenseMatrix(num_clusters, d);
        counts.assign(num_clusters, 0);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t c = static_cast<std::size_t>(result.assignments[i]);
            ++counts[c];
            double* cr = centroids.row(c);
            const double* xr = x.row(i);
            for (std::size_t j = 0; j < d; ++j) cr[j] += xr[j];
        }
        for (std::size_t c = 0; c < num_clusters; ++c) {
            if (counts[c] == 0) continue;
            double* cr = centroids.row(c);
            for (std::size_t j = 0; j < d; ++j) cr[j] /= static_cast<double>(counts[c]);
        }
        // reseed empty clusters to the points farthest from their centroids,
        // claiming each point at most once
        std::vector<bool> claimed(n, false);
        for (std::size_t c = 0; c < num_clusters; ++c) {
            if (counts[c] != 0) continue;
            double farthest = -1.0;
            std::size_t pick = 0;
            for (std::size_t i = 0; i < n; ++i) {
                if (claimed[i]) continue;
                const std::size_t a = static_cast<std::size_t>(result.assignments[i]);
                const double dist = sq_dist(x.row(i), centroids.row(a));
                if (dist > farthest) {
                    farthest = dist;
                    pick = i;
                }
            }
            claimed[pick] = true;
            std::copy_n(x.row(pick), d, centroids.row(c));
        }
    }
    return result;
}

IndexSets global_candidates(const std::vector<ClusterAssignment>& runs) {
    if (runs.empty()) throw std::invalid_argument("global_candidates: need at least one run");
    const std::size_t n = runs.front().assignments.size();
    for (const ClusterAssignment& run : runs) {
        if (run.assignments.size() != n) {
            throw std::invalid_argument("global_candidates: run node counts differ");
        }
    }
    IndexSets out(n);
    for (const ClusterAssignment& run : runs) {
        int max_cluster = -1;
        for (int c : run.assignments) max_cluster = std::max(max_cluster, c);
        std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(max_cluster + 1));
        for (std::size_t i = 0; i < n; ++i) {
            members[static_cast<std::size_t>(run.assignments[i])].push_back(i);
        }
        for (std::size_t i = 0; i < n; ++i) {
            out[i] = set_union(out[i], members[static_cast<std::size_t>(run.assignments[i])]);
        }
    }
    return out;
}

IndexSets real_positives(const IndexSets& knn, const IndexSets& adjacent,
                         const IndexSets& cluster) {
    const std::size_t n = knn.size();
    if (adjacent.size() != n || cluster.size() != n) {
        throw std::invalid_argument("real_positives: input set counts differ");
    }
    IndexSets out(n);
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> p =
            set_union(set_intersection(knn[i], adjacent[i]), set_intersection(knn[i], cluster[i]));
        out[i] = set_union(p, std::vector<std::size_t>{i});
    }
    return out;
}

IndexSets adjacency_sets(const CsrMatrix& adjacency) {
    IndexSets out(adjacency.rows);
    for (std::size_t i = 0; i < adjacency.rows; ++i) {
        out[i].assign(adjacency.col_indices.begin() + static_cast<std::ptrdiff_t>(adjacency.row_begin(i)),
                      adjacency.col_indices.begin() + static_cast<std::ptrdiff_t>(adjacency.row_end(i)));
    }
    return out;
}

NeighborSets discover_positives(const DenseMatrix& h_online, const DenseMatrix& h_target,
                                const CsrMatrix& adjacency, std::size_t k,
                                std::size_t num_clusters, std::size_t num_runs,
                                std::size_t kmeans_iters, std::uint64_t base_seed) {
    NeighborSets sets;
    sets.knn = knn_cross(h_online, h_target, k);
    sets.adjacent = adjacency_sets(adjacency);
    std::vector<ClusterAssignment> runs;
    runs.reserve(num_runs);
    for (std::size_t j = 0; j < num_runs; ++j) {
        Rng rng(base_seed + j);
        runs.push_back(kmeans(h_target, num_clusters, kmeans_iters, rng));
    }
    sets.cluster = global_candidates(runs);
    sets.positives = real_positives(sets.knn, sets.adjacent, sets.cluster);
    return sets;
}

void write_positives_csv(const std::string& path, const IndexSets& positives) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write positives dump: " + path);
    out << "node_id,positive_id\n";
    for (std::size_t i = 0; i < positives.size(); ++i) {
        for (std::size_t j : positives[i]) out << i << "," << j << "\n";
    }
}

}  // namespace afgrl
