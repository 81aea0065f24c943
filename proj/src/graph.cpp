#include "afgrl/graph.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "afgrl/error.hpp"

namespace afgrl {

std::size_t Graph::num_classes() const {
    if (!labels) return 0;
    int max_label = -1;
    for (int c : *labels) max_label = std::max(max_label, c);
    return static_cast<std::size_t>(max_label + 1);
}

void Graph::validate() const {
    adjacency.validate();
    if (adjacency.rows != n || adjacency.cols != n) {
        throw std::invalid_argument("Graph: adjacency must be n x n");
    }
    if (features.rows != n) {
        throw std::invalid_argument("Graph: feature row count must equal n");
    }
    if (labels && labels->size() != n) {
        throw std::invalid_argument("Graph: label count must equal n");
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = adjacency.row_begin(i); p < adjacency.row_end(i); ++p) {
            const std::size_t j = adjacency.col_indices[p];
            if (j == i) throw std::invalid_argument("Graph: self-loop stored in adjacency");
            // symmetry: (j, i) must exist
            const auto begin = adjacency.col_indices.begin() + adjacency.row_begin(j);
            const auto end = adjacency.col_indices.begin() + adjacency.row_end(j);
            if (!std::binary_search(begin, end, i)) {
                throw std::invalid_argument("Graph: adjacency not symmetric");
            }
        }
    }
}

std::size_t SbmSpec::total_nodes() const {
    std::size_t n = 0;
    for (std::size_t b : block_sizes) n += b;
    return n;
}

void SbmSpec::validate() const {
    if (block_sizes.empty()) throw std::invalid_argument("SbmSpec: need at least one block");
    for (std::size_t b : block_sizes) {
        if (b == 0) throw std::invalid_argument("SbmSpec: block sizes must be >= 1");
    }
    if (!(0.0 <= p_out && p_out <= p_in && p_in <= 1.0)) {
        throw std::invalid_argument("SbmSpec: require 0 <= p_out <= p_in <= 1");
    }
}

CsrMatrix adjacency_from_edges(std::size_t n,
                               const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
    std::vector<std::pair<std::size_t, std::size_t>> directed;
    directed.reserve(edges.size() * 2);
    for (const auto& [u, v] : edges) {
        if (u >= n || v >= n) {
            throw DataError("edge (" + std::to_string(u) + ", " + std::to_string(v) +
                            ") references a node outside [0, " + std::to_string(n) + ")");
        }
        if (u == v) continue;  // self-loops dropped; Eq-style normalization re-adds them
        directed.emplace_back(u, v);
        directed.emplace_back(v, u);
    }
    std::sort(directed.begin(), directed.end());
    directed.erase(std::unique(directed.begin(), directed.end()), directed.end());

    CsrMatrix adj(n, n);
    adj.col_indices.reserve(directed.size());
    adj.values.assign(directed.size(), 1.0);
    std::size_t pos = 0;
    for (std::size_t i = 0; i < n; ++i) {
        while (pos < directed.size() && directed[pos].first == i) {
            adj.col_indices.push_back(directed[pos].second);
            ++pos;
        }
        adj.row_offsets[i + 1] = adj.col_indices.size();
    }
    return adj;
}

CsrMatrix normalize_adjacency(const Graph& g) {
    const CsrMatrix& a = g.adjacency;
    const std::size_t n = g.n;

    // dhat = row sums of A + I; every node has dhat >= 1 from its self-loop.
    std::vector<double> dhat(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t p = a.row_begin(i); p < a.row_end(i); ++p) {
            dhat[i] += a.values[p];
        }
    }

    CsrMatrix out(n, n);
    out.col_indices.reserve(a.nnz() + n);
    out.values.reserve(a.nnz() + n);
    for (std::size_t i = 0; i < n; ++i) {
        bool diagonal_emitted = false;
        for (std::size_t p = a.row_begin(i); p < a.row_end(i); ++p) {
            const std::size_t j = a.col_indices[p];
            if (!diagonal_emitted && j > i) {
                out.col_indices.push_back(i);
                out.values.push_back(1.0 / std::sqrt(dhat[i] * dhat[i]));
                diagonal_emitted = true;
            }
            out.col_indices.push_back(j);
            out.values.push_back(a.values[p] / std::sqrt(dhat[i] * dhat[j]));
        }
        if (!diagonal_emitted) {
            out.col_indices.push_back(i);
            out.values.push_back(1.0 / std::sqrt(dhat[i] * dhat[i]));
        }
        out.row_offsets[i + 1] = out.col_indices.size();
    }
    return out;
}

namespace {

bool is_blank_or_comment(const std::string& line) {
    for (char c : line) {
        if (c == '#') return true;
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

DenseMatrix load_features(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open feature file: " + path);
    std::vector<double> values;
    std::size_t rows = 0, cols = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank_or_comment(line)) continue;
        std::size_t row_cols = 0;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            std::size_t consumed = 0;
            double v = 0.0;
            try {
                v = std::stod(cell, &consumed);
            } catch (const std::exception&) {
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": malformed feature value '" + cell + "'");
            }
            while (consumed < cell.size() &&
                   std::isspace(static_cast<unsigned char>(cell[consumed]))) {
                ++consumed;
            }
            if (consumed != cell.size()) {
                throw DataError(path + ":" + std::to_string(line_no) +
                                ": malformed feature value '" + cell + "'");
            }
            values.push_back(v);
            ++row_cols;
        }
        if (row_cols == 0) {
            throw DataError(path + ":" + std::to_string(line_no) + ": empty feature row");
        }
        if (rows == 0) {
            cols = row_cols;
        } else if (row_cols != cols) {
            throw DataError(path + ":" + std::to_string(line_no) + ": expected " +
                            std::to_string(cols) + " columns, got " + std::to_string(row_cols));
        }
        ++rows;
    }
    if (rows == 0) throw DataError(path + ": feature file is empty");
    DenseMatrix m(rows, cols);
    m.data = std::move(values);
    return m;
}

std::vector<std::pair<std::size_t, std::size_t>> load_edge_list(const std::string& path,
                                                                std::size_t n) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open edge file: " + path);
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank_or_comment(line)) continue;
        std::istringstream ss(line);
        long long u = -1, v = -1;
        std::string extra;
        if (!(ss >> u >> v) || (ss >> extra) || u < 0 || v < 0) {
            throw DataError(path + ":" + std::to_string(line_no) + ": malformed edge line '" +
                            line + "'");
        }
        if (static_cast<std::size_t>(u) >= n || static_cast<std::size_t>(v) >= n) {
            throw DataError(path + ":" + std::to_string(line_no) + ": node index " +
                            std::to_string(std::max(u, v)) + " outside [0, " +
                            std::to_string(n) + ")");
        }
        edges.emplace_back(static_cast<std::size_t>(u), static_cast<std::size_t>(v));
    }
    return edges;
}

std::vector<int> load_labels(const std::string& path, std::size_t n) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open label file: " + path);
    std::vector<int> labels;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (is_blank_or_comment(line)) continue;
        std::istringstream ss(line);
        long long c = -1;
        std::string extra;
        if (!(ss >> c) || (ss >> extra) || c < 0) {
            throw DataError(path + ":" + std::to_string(line_no) + ": malformed label line '" +
                            line + "'");
        }
        labels.push_back(static_cast<int>(c));
    }
    if (labels.size() != n) {
        throw DataError(path + ": expected " + std::to_string(n) + " labels, got " +
                        std::to_string(labels.size()));
    }
    return labels;
}

}  // namespace

Graph load_graph(const std::string& edge_path, const std::string& feature_path,
                 const std::string& label_path) {
    Graph g;
    g.features = load_features(feature_path);  // feature row count is authoritative for n
    g.n = g.features.rows;
    g.adjacency = adjacency_from_edges(g.n, load_edge_list(edge_path, g.n));
    if (!label_path.empty()) g.labels = load_labels(label_path, g.n);
    return g;
}

void save_graph(const Graph& g, const std::string& edge_path,
                const std::string& feature_path, const std::string& label_path) {
    {
        std::ofstream out(edge_path);
        if (!out) throw DataError("cannot write edge file: " + edge_path);
        // one direction per undirected edge; load_graph symmetrizes
        for (std::size_t i = 0; i < g.n; ++i) {
            for (std::size_t p = g.adjacency.row_begin(i); p < g.adjacency.row_end(i); ++p) {
                const std::size_t j = g.adjacency.col_indices[p];
                if (i < j) out << i << " " << j << "\n";
            }
        }
    }
    {
        std::ofstream out(feature_path);
        if (!out) throw DataError("cannot write feature file: " + feature_path);
        char buf[64];
        for (std::size_t i = 0; i < g.features.rows; ++i) {
            for (std::size_t j = 0; j < g.features.cols; ++j) {
                std::snprintf(buf, sizeof buf, "%.17g", g.features(i, j));
                out << (j ? "," : "") << buf;
            }
            out << "\n";
        }
    }
    if (!label_path.empty()) {
        if (!g.labels) throw DataError("save_graph: label path given but graph has no labels");
        std::ofstream out(label_path);
        if (!out) throw DataError("cannot write label file: " + label_path);
        for (int c : *g.labels) out << c << "\n";
    }
}

Graph generate_sbm(const SbmSpec& spec, Rng& rng) {
    spec.validate();
    const std::size_t n = spec.total_nodes();
    const std::size_t num_blocks = spec.block_sizes.size();

    std::vector<int> labels(n);
    {
        std::size_t node = 0;
        for (std::size_t b = 0; b < num_blocks; ++b) {
            for (std::size_t t = 0; t < spec.block_sizes[b]; ++t) labels[node++] = static_cast<int>(b);
        }
    }

    // Edges first, then features: a fixed draw order keeps runs reproducible.
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const double p = labels[i] == labels[j] ? spec.p_in : spec.p_out;
            if (rng.uniform() < p) edges.emplace_back(i, j);
        }
    }

    DenseMatrix features(n, spec.feature_dim);
    const std::size_t span = num_blocks ? spec.feature_dim / num_blocks : 0;
    for (std::size_t i = 0; i < n; ++i) {
        double* row = features.row(i);
        for (std::size_t j = 0; j < spec.feature_dim; ++j) row[j] = rng.normal();
        const std::size_t lo = static_cast<std::size_t>(labels[i]) * span;
        for (std::size_t j = lo; j < lo + span; ++j) row[j] += spec.feature_shift;
    }

    Graph g;
    g.n = n;
    g.adjacency = adjacency_from_edges(n, edges);
    g.features = std::move(features);
    g.labels = std::move(labels);
    return g;
}

Splits make_splits(std::size_t n, double train_ratio, double valid_ratio,
                   std::uint64_t seed) {
    if (train_ratio <= 0.0 || valid_ratio <= 0.0 || train_ratio + valid_ratio >= 1.0) {
        throw std::invalid_argument("make_splits: ratios must be positive and sum below 1");
    }
    const std::size_t n_train = static_cast<std::size_t>(std::floor(n * train_ratio));
    const std::size_t n_valid = static_cast<std::size_t>(std::floor(n * valid_ratio));
    const std::size_t n_test = n - n_train - n_valid;
    if (n_train == 0 || n_valid == 0 || n_test == 0) {
        throw std::invalid_argument("make_splits: a split is empty after rounding (n=" +
                                    std::to_string(n) + ")");
    }
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    Rng rng(seed);
    rng.shuffle(perm);

    Splits s;
    s.train.assign(perm.begin(), perm.begin() + n_train);
    s.valid.assign(perm.begin() + n_train, perm.begin() + n_train + n_valid);
    s.test.assign(perm.begin() + n_train + n_valid, perm.end());
    std::sort(s.train.begin(), s.train.end());
    std::sort(s.valid.begin(), s.valid.end());
    std::sort(s.test.begin(), s.test.end());
    return s;
}

}  // namespace afgrl
