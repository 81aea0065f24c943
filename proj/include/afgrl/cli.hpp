#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "afgrl/training.hpp"

namespace afgrl {

// Flat `key = value` config with '#' comments. Unknown keys are rejected
// with the list of valid keys.
TrainConfig parse_config_text(const std::string& text, const std::string& origin);
TrainConfig parse_config_file(const std::string& path);
std::string config_to_text(const TrainConfig& cfg);

// FNV-1a content hash used as the dataset fingerprint in run manifests.
std::uint64_t fingerprint_file(const std::string& path);

// Shortest round-trippable decimal form of a double (%.17g).
std::string format_double(double v);

struct GenDataOptions {
    std::vector<std::size_t> blocks;
    double p_in = 0.2;
    double p_out = 0.02;
    std::size_t feat_dim = 32;
    double feature_shift = 1.0;
    std::uint64_t seed = 1;
    std::string out_dir;
};

// Writes edges.txt, features.csv, labels.txt and sbm_spec.txt under out_dir.
void run_gen_data(const GenDataOptions& opt);

struct TrainOptions {
    std::string config_path;  // defaults when empty
    std::string edge_path;
    std::string feature_path;
    std::string label_path;  // optional
    std::string out_dir;
    std::optional<std::uint64_t> seed_override;
    int jobs = 1;
};

// Writes manifest.txt (before training), metrics.csv and checkpoint.bin
// (network tensors plus the final embeddings) under out_dir.
void run_train(const TrainOptions& opt);

struct EvalOptions {
    std::string checkpoint_path;
    std::string edge_path;
    std::string feature_path;
    std::string label_path;
    std::string out_path;             // results CSV
    std::vector<std::string> tasks;   // classify, cluster, simsearch, ratio-curve
    double train_ratio = 0.1;
    double valid_ratio = 0.1;
    std::size_t num_splits = 20;
    std::size_t cluster_runs = 10;
    std::vector<std::size_t> sim_ns = {5, 10};
    std::vector<std::size_t> ratio_ks = {4, 8, 16, 32};
    std::uint64_t seed = 1;
    int jobs = 1;
};

// Emits `metric,value,params` rows for the selected tasks. Classification
// averages over num_splits seeded splits.
void run_eval(const EvalOptions& opt);

}  // namespace afgrl
