#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "afgrl/error.hpp"
#include "afgrl/eval.hpp"
#include "afgrl/graph.hpp"
#include "afgrl/parallel.hpp"
#include "afgrl/positives.hpp"
#include "afgrl/training.hpp"

namespace py = pybind11;
using namespace afgrl;

namespace {

DenseMatrix to_matrix(const py::array_t<double, py::array::c_style | py::array::forcecast>& arr) {
    if (arr.ndim() != 2) throw std::invalid_argument("expected a 2-D float array");
    DenseMatrix m(static_cast<std::size_t>(arr.shape(0)), static_cast<std::size_t>(arr.shape(1)));
    std::copy_n(arr.data(), m.data.size(), m.data.begin());
    return m;
}

py::array_t<double> from_matrix(const DenseMatrix& m) {
    py::array_t<double> arr({m.rows, m.cols});
    std::copy_n(m.data.data(), m.data.size(), arr.mutable_data());
    return arr;
}

py::array_t<std::int64_t> from_index_vector(const std::vector<std::size_t>& v) {
    py::array_t<std::int64_t> arr(static_cast<py::ssize_t>(v.size()));
    auto* out = arr.mutable_data();
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<std::int64_t>(v[i]);
    return arr;
}

std::vector<std::size_t> to_index_vector(const py::array_t<std::int64_t,
                                                           py::array::c_style |
                                                               py::array::forcecast>& arr) {
    std::vector<std::size_t> out(static_cast<std::size_t>(arr.size()));
    const auto* data = arr.data();
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (data[i] < 0) throw std::invalid_argument("node indices must be non-negative");
        out[i] = static_cast<std::size_t>(data[i]);
    }
    return out;
}

IndexSets to_index_sets(const std::vector<std::vector<std::int64_t>>& sets) {
    IndexSets out(sets.size());
    for (std::size_t i = 0; i < sets.size(); ++i) {
        for (std::int64_t j : sets[i]) {
            if (j < 0) throw std::invalid_argument("positive sets hold non-negative indices");
            out[i].push_back(static_cast<std::size_t>(j));
        }
        std::sort(out[i].begin(), out[i].end());
    }
    return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Augmentation-free self-supervised node embeddings on graphs";

    py::register_exception<ConfigError>(m, "AfgrlConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "AfgrlDataError", PyExc_ValueError);
    py::register_exception<NumericError>(m, "AfgrlNumericError", PyExc_ArithmeticError);

    py::class_<Graph>(m, "Graph")
        .def_property_readonly("num_nodes", [](const Graph& g) { return g.n; })
        .def_property_readonly("num_features", [](const Graph& g) { return g.features.cols; })
        .def_property_readonly("num_classes", [](const Graph& g) { return g.num_classes(); })
        .def_property_readonly("features", [](const Graph& g) { return from_matrix(g.features); })
        .def_property_readonly(
            "labels",
            [](const Graph& g) -> std::optional<std::vector<int>> { return g.labels; })
        .def_property_readonly("adjacency",
                               [](const Graph& g) {
                                   return py::make_tuple(
                                       from_index_vector(g.adjacency.row_offsets),
                                       from_index_vector(g.adjacency.col_indices));
                               })
        .def("__repr__", [](const Graph& g) {
            return "<afgrl.Graph nodes=" + std::to_string(g.n) +
                   " edges=" + std::to_string(g.adjacency.nnz() / 2) +
                   " features=" + std::to_string(g.features.cols) + ">";
        });

    m.def("set_max_threads", &set_max_threads, py::arg("n"),
          "Cap worker threads used by the kernels (results stay bit-identical).");

    m.def(
        "generate_sbm",
        [](const std::vector<std::size_t>& blocks, double p_in, double p_out,
           std::size_t feature_dim, double feature_shift, std::uint64_t seed) {
            SbmSpec spec;
            spec.block_sizes = blocks;
            spec.p_in = p_in;
            spec.p_out = p_out;
            spec.feature_dim = feature_dim;
            spec.feature_shift = feature_shift;
            spec.seed = seed;
            Rng rng(seed);
            return generate_sbm(spec, rng);
        },
        py::arg("blocks"), py::arg("p_in"), py::arg("p_out"), py::arg("feature_dim"),
        py::arg("feature_shift") = 0.0, py::arg("seed") = 1,
        "Sample a planted-partition graph; block ids double as labels.");

    m.def("load_graph", &load_graph, py::arg("edge_path"), py::arg("feature_path"),
          py::arg("label_path") = "");
    m.def("save_graph", &save_graph, py::arg("graph"), py::arg("edge_path"),
          py::arg("feature_path"), py::arg("label_path") = "");

    m.def(
        "normalize_adjacency",
        [](const Graph& g) {
            const CsrMatrix a = normalize_adjacency(g);
            py::array_t<double> values(static_cast<py::ssize_t>(a.values.size()));
            std::copy_n(a.values.data(), a.values.size(), values.mutable_data());
            return py::make_tuple(from_index_vector(a.row_offsets),
                                  from_index_vector(a.col_indices), values);
        },
        py::arg("graph"),
        "Degree-normalized adjacency with self-loops as (indptr, indices, values).");

    m.def(
        "make_splits",
        [](std::size_t n, double train_ratio, double valid_ratio, std::uint64_t seed) {
            const Splits s = make_splits(n, train_ratio, valid_ratio, seed);
            return py::make_tuple(from_index_vector(s.train), from_index_vector(s.valid),
                                  from_index_vector(s.test));
        },
        py::arg("n"), py::arg("train_ratio") = 0.1, py::arg("valid_ratio") = 0.1,
        py::arg("seed") = 1);

    m.def(
        "train",
        [](const Graph& g, std::size_t embedding_dim, std::size_t layers,
           std::size_t predictor_hidden, double learning_rate, double weight_decay,
           std::size_t epochs, double tau, std::size_t k, std::size_t clusters,
           std::size_t kmeans_runs, std::size_t kmeans_iters, std::size_t refresh_period,
           bool normalize_positives, std::uint64_t seed) {
            TrainConfig cfg;
            cfg.embedding_dim = embedding_dim;
            cfg.layers = layers;
            cfg.predictor_hidden = predictor_hidden;
            cfg.learning_rate = learning_rate;
            cfg.weight_decay = weight_decay;
            cfg.epochs = epochs;
            cfg.tau = tau;
            cfg.k = k;
            cfg.clusters = clusters;
            cfg.kmeans_runs = kmeans_runs;
            cfg.kmeans_iters = kmeans_iters;
            cfg.refresh_period = refresh_period;
            cfg.normalize_positives = normalize_positives;
            cfg.seed = seed;
            const TrainResult result = train(cfg, g);
            py::list metrics;
            for (const EpochMetrics& e : result.metrics) {
                py::dict row;
                row["epoch"] = e.epoch;
                row["loss"] = e.loss;
                row["mean_positives"] = e.mean_positives;
                row["knn_local_ratio"] = e.knn_local_ratio;
                metrics.append(row);
            }
            py::dict out;
            out["embeddings"] = from_matrix(result.embeddings);
            out["metrics"] = metrics;
            return out;
        },
        py::arg("graph"), py::arg("embedding_dim") = 64, py::arg("layers") = 1,
        py::arg("predictor_hidden") = 128, py::arg("learning_rate") = 1e-3,
        py::arg("weight_decay") = 1e-5, py::arg("epochs") = 200, py::arg("tau") = 0.9,
        py::arg("k") = 4, py::arg("clusters") = 10, py::arg("kmeans_runs") = 5,
        py::arg("kmeans_iters") = 50, py::arg("refresh_period") = 1,
        py::arg("normalize_positives") = false, py::arg("seed") = 1,
        "Self-supervised training; returns {'embeddings': ndarray, 'metrics': [...]}.");

    m.def(
        "knn_cross",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& h_online,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& h_target,
           std::size_t k) {
            const IndexSets sets = knn_cross(to_matrix(h_online), to_matrix(h_target), k);
            py::array_t<std::int64_t> out({sets.size(), k});
            auto* data = out.mutable_data();
            for (std::size_t i = 0; i < sets.size(); ++i) {
                for (std::size_t j = 0; j < k; ++j) {
                    data[i * k + j] = static_cast<std::int64_t>(sets[i][j]);
                }
            }
            return out;
        },
        py::arg("h_online"), py::arg("h_target"), py::arg("k"),
        "Cosine k-nearest neighbors between the two views; row i lists B_i sorted by index.");

    m.def(
        "kmeans",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& h,
           std::size_t num_clusters, std::size_t max_iters, std::uint64_t seed) {
            Rng rng(seed);
            const ClusterAssignment run = kmeans(to_matrix(h), num_clusters, max_iters, rng);
            py::array_t<std::int64_t> assignments(
                static_cast<py::ssize_t>(run.assignments.size()));
            auto* data = assignments.mutable_data();
            for (std::size_t i = 0; i < run.assignments.size(); ++i) {
                data[i] = run.assignments[i];
            }
            return py::make_tuple(assignments, from_matrix(run.centroids), run.inertia);
        },
        py::arg("h"), py::arg("num_clusters"), py::arg("max_iters") = 100, py::arg("seed") = 1,
        "Lloyd clustering on L2-normalized rows; returns (assignments, centroids, inertia).");

    m.def(
        "afgrl_loss",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& z,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& h,
           const std::vector<std::vector<std::int64_t>>& positives, bool normalize) {
            const LossResult r =
                afgrl_loss(to_matrix(z), to_matrix(h), to_index_sets(positives), normalize);
            return py::make_tuple(r.loss, from_matrix(r.grad));
        },
        py::arg("z_online"), py::arg("h_target"), py::arg("positives"),
        py::arg("normalize") = false,
        "Bootstrapped cosine objective; returns (loss, grad_wrt_z).");

    m.def(
        "symmetrized_loss",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& z,
           const py::array_t<double, py::array::c_style | py::array::forcecast>& h,
           const std::vector<std::vector<std::int64_t>>& positives, bool normalize) {
            const LossResult r = symmetrized_loss(to_matrix(z), to_matrix(h),
                                                  to_index_sets(positives), normalize);
            return py::make_tuple(r.loss, from_matrix(r.grad));
        },
        py::arg("z_online"), py::arg("h_target"), py::arg("positives"),
        py::arg("normalize") = false);

    m.def(
        "linear_probe",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& h,
           const std::vector<int>& labels,
           const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& train,
           const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& valid,
           const py::array_t<std::int64_t, py::array::c_style | py::array::forcecast>& test,
           const std::vector<double>& reg_grid) {
            Splits splits;
            splits.train = to_index_vector(train);
            splits.valid = to_index_vector(valid);
            splits.test = to_index_vector(test);
            const ProbeResult r = linear_probe(to_matrix(h), labels, splits, reg_grid);
            py::dict out;
            out["valid_accuracy"] = r.valid_accuracy;
            out["test_accuracy"] = r.test_accuracy;
            out["chosen_reg"] = r.chosen_reg;
            return out;
        },
        py::arg("h"), py::arg("labels"), py::arg("train"), py::arg("valid"), py::arg("test"),
        py::arg("reg_grid") = std::vector<double>{1e-4, 1e-3, 1e-2, 1e-1, 1.0});

    m.def("nmi", &nmi, py::arg("a"), py::arg("b"));
    m.def("homogeneity", &homogeneity, py::arg("pred"), py::arg("truth"));

    m.def(
        "sim_at_n",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& h,
           const std::vector<int>& labels, std::size_t n) {
            return sim_at_n(to_matrix(h), labels, n);
        },
        py::arg("h"), py::arg("labels"), py::arg("n"));

    m.def(
        "kmeans_eval",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& h,
           const std::vector<int>& labels, std::size_t num_clusters, std::size_t runs,
           std::uint64_t seed) {
            const ClusterScore score =
                kmeans_eval(to_matrix(h), labels, num_clusters, runs, seed);
            py::dict out;
            out["nmi"] = score.nmi;
            out["homogeneity"] = score.homogeneity;
            return out;
        },
        py::arg("h"), py::arg("labels"), py::arg("num_clusters"), py::arg("runs") = 10,
        py::arg("seed") = 1);

    m.def(
        "correct_ratio_curve",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& h,
           const std::vector<int>& labels, const Graph& g, const std::vector<std::size_t>& ks) {
            const RatioCurve curve = correct_ratio_curve(to_matrix(h), labels, g.adjacency, ks);
            py::dict out;
            out["ks"] = curve.ks;
            out["knn_ratio"] = curve.knn_ratio;
            out["local_ratio"] = curve.local_ratio;
            out["local_skipped"] = curve.local_skipped;
            out["adj_ratio"] = curve.adj_ratio;
            out["adj_skipped"] = curve.adj_skipped;
            return out;
        },
        py::arg("h"), py::arg("labels"), py::arg("graph"), py::arg("ks"),
        "Same-label ratios of k-NN, adjacency and local-positive sets per k.");
}
