#include "afgrl/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "afgrl/checkpoint.hpp"
#include "afgrl/error.hpp"
#include "afgrl/eval.hpp"
#include "afgrl/parallel.hpp"

namespace afgrl {

namespace fs = std::filesystem;

namespace {

const char* const kConfigKeys[] = {
    "embedding_dim", "layers",      "predictor_hidden", "learning_rate",
    "weight_decay",  "epochs",      "tau",              "k",
    "clusters",      "kmeans_runs", "kmeans_iters",     "refresh_period",
    "normalize_positives", "seed",
};

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::string valid_keys_message() {
    std::string msg = "valid keys:";
    for (const char* k : kConfigKeys) {
        msg += " ";
        msg += k;
    }
    return msg;
}

std::size_t parse_count(const std::string& value, const std::string& where) {
    try {
        std::size_t consumed = 0;
        const long long v = std::stoll(value, &consumed);
        if (consumed != value.size() || v < 0) throw std::invalid_argument("");
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected a non-negative integer, got '" + value + "'");
    }
}

double parse_real(const std::string& value, const std::string& where) {
    try {
        std::size_t consumed = 0;
        const double v = std::stod(value, &consumed);
        if (consumed != value.size()) throw std::invalid_argument("");
        return v;
    } catch (const std::exception&) {
        throw ConfigError(where + ": expected a real number, got '" + value + "'");
    }
}

bool parse_bool(const std::string& value, const std::string& where) {
    if (value == "true" || value == "1") return true;
    if (value == "false" || value == "0") return false;
    throw ConfigError(where + ": expected true/false, got '" + value + "'");
}

void append_metrics_row(std::ofstream& out, const EpochMetrics& m) {
    out << m.epoch << "," << format_double(m.loss) << "," << format_double(m.mean_positives)
        << "," << format_double(m.knn_local_ratio) << "\n";
    out.flush();
}

std::string hex_u64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

TrainConfig parse_config_text(const std::string& text, const std::string& origin) {
    TrainConfig cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::string where = origin + ":" + std::to_string(line_no);
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(where + ": expected 'key = value', got '" + line + "'");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key == "embedding_dim") {
            cfg.embedding_dim = parse_count(value, where);
        } else if (key == "layers") {
            cfg.layers = parse_count(value, where);
        } else if (key == "predictor_hidden") {
            cfg.predictor_hidden = parse_count(value, where);
        } else if (key == "learning_rate") {
            cfg.learning_rate = parse_real(value, where);
        } else if (key == "weight_decay") {
            cfg.weight_decay = parse_real(value, where);
        } else if (key == "epochs") {
            cfg.epochs = parse_count(value, where);
        } else if (key == "tau") {
            cfg.tau = parse_real(value, where);
        } else if (key == "k") {
            cfg.k = parse_count(value, where);
        } else if (key == "clusters") {
            cfg.clusters = parse_count(value, where);
        } else if (key == "kmeans_runs") {
            cfg.kmeans_runs = parse_count(value, where);
        } else if (key == "kmeans_iters") {
            cfg.kmeans_iters = parse_count(value, where);
        } else if (key == "refresh_period") {
            cfg.refresh_period = parse_count(value, where);
        } else if (key == "normalize_positives") {
            cfg.normalize_positives = parse_bool(value, where);
        } else if (key == "seed") {
            cfg.seed = static_cast<std::uint64_t>(parse_count(value, where));
        } else {
            throw ConfigError(where + ": unknown config key '" + key + "'; " +
                              valid_keys_message());
        }
    }
    return cfg;
}

TrainConfig parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config_text(ss.str(), path);
}

std::string config_to_text(const TrainConfig& cfg) {
    std::ostringstream out;
    out << "embedding_dim = " << cfg.embedding_dim << "\n"
        << "layers = " << cfg.layers << "\n"
        << "predictor_hidden = " << cfg.predictor_hidden << "\n"
        << "learning_rate = " << format_double(cfg.learning_rate) << "\n"
        << "weight_decay = " << format_double(cfg.weight_decay) << "\n"
        << "epochs = " << cfg.epochs << "\n"
        << "tau = " << format_double(cfg.tau) << "\n"
        << "k = " << cfg.k << "\n"
        << "clusters = " << cfg.clusters << "\n"
        << "kmeans_runs = " << cfg.kmeans_runs << "\n"
        << "kmeans_iters = " << cfg.kmeans_iters << "\n"
        << "refresh_period = " << cfg.refresh_period << "\n"
        << "normalize_positives = " << (cfg.normalize_positives ? "true" : "false") << "\n"
        << "seed = " << cfg.seed << "\n";
    return out.str();
}

std::uint64_t fingerprint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file for fingerprinting: " + path);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    char buf[4096];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 0x100000001b3ULL;
        }
        if (!in) break;
    }
    return h;
}

std::string format_double(double v) {
    // shortest precision that round-trips the exact value
    char buf[64];
    for (int precision = 15; precision <= 17; ++precision) {
        std::snprintf(buf, sizeof buf, "%.*g", precision, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    return buf;
}

void run_gen_data(const GenDataOptions& opt) {
    if (opt.blocks.empty()) throw ConfigError("gen-data: --blocks must list at least one size");
    if (opt.out_dir.empty()) throw ConfigError("gen-data: --out is required");
    SbmSpec spec;
    spec.block_sizes = opt.blocks;
    spec.p_in = opt.p_in;
    spec.p_out = opt.p_out;
    spec.feature_dim = opt.feat_dim;
    spec.feature_shift = opt.feature_shift;
    spec.seed = opt.seed;
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("gen-data: ") + e.what());
    }

    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);
    if (ec) throw DataError("gen-data: cannot create output directory " + opt.out_dir);

    Rng rng(spec.seed);
    const Graph g = generate_sbm(spec, rng);
    const fs::path dir(opt.out_dir);
    save_graph(g, (dir / "edges.txt").string(), (dir / "features.csv").string(),
               (dir / "labels.txt").string());

    std::ofstream out(dir / "sbm_spec.txt");
    if (!out) throw DataError("gen-data: cannot write spec record");
    out << "blocks = ";
    for (std::size_t i = 0; i < spec.block_sizes.size(); ++i) {
        out << (i ? "," : "") << spec.block_sizes[i];
    }
    out << "\n"
        << "p_in = " << format_double(spec.p_in) << "\n"
        << "p_out = " << format_double(spec.p_out) << "\n"
        << "feature_dim = " << spec.feature_dim << "\n"
        << "feature_shift = " << format_double(spec.feature_shift) << "\n"
        << "seed = " << spec.seed << "\n";
}

void run_train(const TrainOptions& opt) {
    if (opt.out_dir.empty()) throw ConfigError("train: --out is required");
    set_max_threads(opt.jobs);

    TrainConfig cfg = opt.config_path.empty() ? TrainConfig{} : parse_config_file(opt.config_path);
    if (opt.seed_override) cfg.seed = *opt.seed_override;
    cfg.validate();

    const Graph g = load_graph(opt.edge_path, opt.feature_path, opt.label_path);

    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);
    if (ec) throw DataError("train: cannot create output directory " + opt.out_dir);
    const fs::path dir(opt.out_dir);
    const std::string manifest_path = (dir / "manifest.txt").string();
    const std::string metrics_path = (dir / "metrics.csv").string();
    const std::string checkpoint_path = (dir / "checkpoint.bin").string();

    std::uint64_t fingerprint = fingerprint_file(opt.edge_path);
    fingerprint = derive_seed(fingerprint, "features") ^ fingerprint_file(opt.feature_path);
    if (!opt.label_path.empty()) {
        fingerprint = derive_seed(fingerprint, "labels") ^ fingerprint_file(opt.label_path);
    }

    // the manifest is written before training so an interrupted run can
    // still be reproduced
    {
        std::ofstream out(manifest_path);
        if (!out) throw DataError("train: cannot write manifest " + manifest_path);
        const auto now = std::chrono::system_clock::now();
        out << "# afgrl run manifest\n"
            << "manifest_version = 1\n"
            << "command = train\n"
            << "edge_path = " << opt.edge_path << "\n"
            << "feature_path = " << opt.feature_path << "\n"
            << "label_path = " << opt.label_path << "\n"
            << "out_dir = " << opt.out_dir << "\n"
            << "dataset_fingerprint = " << hex_u64(fingerprint) << "\n"
            << "started_at_unix = "
            << std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count()
            << "\n\n# train config\n"
            << config_to_text(cfg);
    }

    std::ofstream metrics_out(metrics_path);
    if (!metrics_out) throw DataError("train: cannot write metrics " + metrics_path);
    metrics_out << "epoch,loss,mean_positives,knn_local_ratio\n";
    metrics_out.flush();

    const auto t0 = std::chrono::steady_clock::now();
    TrainResult result = train(
        cfg, g, [&](const EpochMetrics& m) { append_metrics_row(metrics_out, m); });
    const auto t1 = std::chrono::steady_clock::now();
    metrics_out.close();

    TensorMap tensors = network_tensors(result.net);
    tensors.push_back(matrix_as_tensor("embeddings", result.embeddings));
    save_checkpoint(checkpoint_path, tensors);

    {
        std::ofstream out(manifest_path, std::ios::app);
        out << "train_seconds = "
            << format_double(std::chrono::duration<double>(t1 - t0).count()) << "\n";
    }
}

void run_eval(const EvalOptions& opt) {
    if (opt.out_path.empty()) throw ConfigError("eval: --out is required");
    if (opt.tasks.empty()) throw ConfigError("eval: select at least one task");
    for (const std::string& task : opt.tasks) {
        if (task != "classify" && task != "cluster" && task != "simsearch" &&
            task != "ratio-curve") {
            throw ConfigError("eval: unknown task '" + task +
                              "' (valid: classify cluster simsearch ratio-curve)");
        }
    }
    set_max_threads(opt.jobs);

    const TensorMap checkpoint = load_checkpoint(opt.checkpoint_path);
    const NamedTensor* emb = find_tensor(checkpoint, "embeddings");
    if (!emb) throw DataError("eval: checkpoint has no 'embeddings' tensor");
    const DenseMatrix h = tensor_as_matrix(*emb);

    const Graph g = load_graph(opt.edge_path, opt.feature_path, opt.label_path);
    if (h.rows != g.n) {
        throw DataError("eval: checkpoint has " + std::to_string(h.rows) +
                        " embeddings but the dataset has " + std::to_string(g.n) + " nodes");
    }
    if (!g.labels) {
        throw DataError("eval: the selected tasks need labels; none were given");
    }
    const std::vector<int>& labels = *g.labels;

    auto selected = [&](const char* task) {
        return std::find(opt.tasks.begin(), opt.tasks.end(), task) != opt.tasks.end();
    };

    std::ofstream out(opt.out_path);
    if (!out) throw DataError("eval: cannot write results " + opt.out_path);
    out << "metric,value,params\n";

    if (selected("classify")) {
        std::vector<double> accs;
        for (std::size_t s = 0; s < opt.num_splits; ++s) {
            const Splits splits =
                make_splits(g.n, opt.train_ratio, opt.valid_ratio,
                            derive_seed(opt.seed, "splits-" + std::to_string(s)));
            accs.push_back(linear_probe(h, labels, splits).test_accuracy);
        }
        double mean = 0.0;
        for (double a : accs) mean += a;
        mean /= static_cast<double>(accs.size());
        double var = 0.0;
        for (double a : accs) var += (a - mean) * (a - mean);
        var /= static_cast<double>(accs.size());
        std::ostringstream params;
        params << "splits=" << opt.num_splits << ";train=" << format_double(opt.train_ratio)
               << ";valid=" << format_double(opt.valid_ratio);
        out << "accuracy_mean," << format_double(mean) << ",\"" << params.str() << "\"\n";
        out << "accuracy_std," << format_double(std::sqrt(var)) << ",\"" << params.str()
            << "\"\n";
    }
    if (selected("cluster")) {
        const std::size_t num_classes = g.num_classes();
        const ClusterScore score = kmeans_eval(h, labels, num_classes, opt.cluster_runs,
                                               derive_seed(opt.seed, "kmeans-eval"));
        std::ostringstream params;
        params << "K=" << num_classes << ";runs=" << opt.cluster_runs;
        out << "nmi," << format_double(score.nmi) << ",\"" << params.str() << "\"\n";
        out << "homogeneity," << format_double(score.homogeneity) << ",\"" << params.str()
            << "\"\n";
    }
    if (selected("simsearch")) {
        for (std::size_t n : opt.sim_ns) {
            out << "sim@" << n << "," << format_double(sim_at_n(h, labels, n)) << ",\"n=" << n
                << "\"\n";
        }
    }
    if (selected("ratio-curve")) {
        std::vector<std::size_t> ks;
        for (std::size_t k : opt.ratio_ks) {
            if (k >= 1 && k < g.n) {
                ks.push_back(k);
            } else {
                std::cerr << "eval: dropping ratio-curve k=" << k
                          << " (graph has " << g.n << " nodes)\n";
            }
        }
        const RatioCurve curve = correct_ratio_curve(h, labels, g.adjacency, ks);
        for (std::size_t i = 0; i < curve.ks.size(); ++i) {
            out << "knn_ratio@" << curve.ks[i] << "," << format_double(curve.knn_ratio[i])
                << ",\"k=" << curve.ks[i] << "\"\n";
            out << "local_ratio@" << curve.ks[i] << "," << format_double(curve.local_ratio[i])
                << ",\"k=" << curve.ks[i] << ";skipped=" << curve.local_skipped[i] << "\"\n";
        }
        out << "adj_ratio," << format_double(curve.adj_ratio) << ",\"skipped="
            << curve.adj_skipped << "\"\n";
    }
}

}  // namespace afgrl
