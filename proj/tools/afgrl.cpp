#include <cstdint>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "afgrl/cli.hpp"
#include "afgrl/parallel.hpp"
#include "afgrl/error.hpp"

namespace {

std::vector<std::size_t> parse_size_list(const std::string& csv, const std::string& flag) {
    std::vector<std::size_t> out;
    std::size_t pos = 0;
    while (pos <= csv.size()) {
        const std::size_t comma = csv.find(',', pos);
        const std::string item =
            csv.substr(pos, comma == std::string::npos ? std::string::npos : comma - pos);
        try {
            std::size_t consumed = 0;
            const long long v = std::stoll(item, &consumed);
            if (consumed != item.size() || v < 0) throw std::invalid_argument("");
            out.push_back(static_cast<std::size_t>(v));
        } catch (const std::exception&) {
            throw afgrl::ConfigError(flag + ": expected a comma-separated integer list, got '" +
                                     csv + "'");
        }
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"afgrl: augmentation-free self-supervised node embeddings"};
    app.require_subcommand(1);

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic planted-partition dataset");
    std::string gen_blocks = "60,60,60";
    afgrl::GenDataOptions gen_opt;
    gen->add_option("--blocks", gen_blocks, "Comma-separated block sizes")->capture_default_str();
    gen->add_option("--p-in", gen_opt.p_in, "Intra-block edge probability")->capture_default_str();
    gen->add_option("--p-out", gen_opt.p_out, "Inter-block edge probability")->capture_default_str();
    gen->add_option("--feat-dim", gen_opt.feat_dim, "Feature dimension")->capture_default_str();
    gen->add_option("--feature-shift", gen_opt.feature_shift, "Per-class feature mean offset")
        ->capture_default_str();
    gen->add_option("--seed", gen_opt.seed, "Random seed")->capture_default_str();
    gen->add_option("--out", gen_opt.out_dir, "Output directory")->required();
    int gen_jobs = 1;
    gen->add_option("--jobs", gen_jobs, "Worker thread cap")->capture_default_str();

    // train
    auto* train = app.add_subcommand("train", "Train embeddings on a dataset");
    afgrl::TrainOptions train_opt;
    std::uint64_t train_seed = 0;
    train->add_option("--config", train_opt.config_path, "Config file (key = value lines)");
    train->add_option("--edges", train_opt.edge_path, "Edge list file")->required();
    train->add_option("--features", train_opt.feature_path, "Feature CSV file")->required();
    train->add_option("--labels", train_opt.label_path, "Label file (optional)");
    train->add_option("--out", train_opt.out_dir, "Output directory")->required();
    train->add_option("--seed", train_seed, "Overrides the config seed");
    train->add_option("--jobs", train_opt.jobs, "Worker thread cap")->capture_default_str();

    // eval
    auto* eval = app.add_subcommand("eval", "Evaluate embeddings from a checkpoint");
    afgrl::EvalOptions eval_opt;
    eval->add_option("--checkpoint", eval_opt.checkpoint_path, "Checkpoint file")->required();
    eval->add_option("--edges", eval_opt.edge_path, "Edge list file")->required();
    eval->add_option("--features", eval_opt.feature_path, "Feature CSV file")->required();
    eval->add_option("--labels", eval_opt.label_path, "Label file")->required();
    eval->add_option("--out", eval_opt.out_path, "Results CSV path")->required();
    eval->add_option("--tasks", eval_opt.tasks,
                     "Tasks to run: classify cluster simsearch ratio-curve")
        ->required();
    eval->add_option("--train-ratio", eval_opt.train_ratio, "Train split fraction")
        ->capture_default_str();
    eval->add_option("--valid-ratio", eval_opt.valid_ratio, "Valid split fraction")
        ->capture_default_str();
    eval->add_option("--splits", eval_opt.num_splits, "Number of classification splits")
        ->capture_default_str();
    eval->add_option("--cluster-runs", eval_opt.cluster_runs, "Clustering restarts")
        ->capture_default_str();
    eval->add_option("--seed", eval_opt.seed, "Random seed")->capture_default_str();
    eval->add_option("--jobs", eval_opt.jobs, "Worker thread cap")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 1;
    }

    try {
        if (gen->parsed()) {
            afgrl::set_max_threads(gen_jobs);
            gen_opt.blocks = parse_size_list(gen_blocks, "--blocks");
            afgrl::run_gen_data(gen_opt);
        } else if (train->parsed()) {
            if (train->count("--seed") > 0) train_opt.seed_override = train_seed;
            afgrl::run_train(train_opt);
        } else if (eval->parsed()) {
            afgrl::run_eval(eval_opt);
        }
    } catch (const afgrl::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const afgrl::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const afgrl::NumericError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    return 0;
}
