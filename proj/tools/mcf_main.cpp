// Copyright 2026 The MCF Authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry points for the multi-chart flow library:
//   mcf generate --config cfg.toml --out data/
//   mcf train    --config cfg.toml [--data data/] --out runs/exp/
//   mcf sample   --checkpoint runs/exp/ --n 1000 --seed 7 --out samples.csv
//   mcf eval     --checkpoint runs/exp/ [--data data/] [--mode exact] --out report.json
//   mcf plot     --checkpoint runs/exp/ --projection mollweide --out density.png
//   mcf plot     --config cfg.toml --projection scatter3d --out data.png

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <string>

#include "mcf/commands.hpp"

namespace {

mcf::config::ExperimentConfig load_with_seed_override(const std::string& path,
                                                      const std::uint64_t* seed) {
    mcf::config::ExperimentConfig cfg = mcf::config::load_config(path);
    if (seed) {
        cfg.dataset.seed = *seed;
        cfg.train.seed = *seed;
    }
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-chart normalizing flows: manifold and density learning"};
    app.require_subcommand(1);

    std::string config_path, checkpoint_dir, data_dir, out_path, projection = "mollweide";
    std::string mode;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int n_samples = 1000;
    int width = 384;

    auto add_seed = [&](CLI::App* sub) {
        sub->add_option("--seed", seed, "Master seed override")
            ->each([&](const std::string&) { seed_set = true; });
    };

    CLI::App* generate = app.add_subcommand("generate", "Write the configured dataset to disk");
    generate->add_option("--config", config_path, "Experiment config (TOML)")->required();
    generate->add_option("--out", out_path, "Output directory")->required();
    add_seed(generate);

    CLI::App* train = app.add_subcommand("train", "Run two-phase training, write a checkpoint");
    train->add_option("--config", config_path, "Experiment config (TOML)")->required();
    train->add_option("--data", data_dir, "Directory holding a prior `generate` output");
    train->add_option("--out", out_path, "Checkpoint directory")->required();
    add_seed(train);

    CLI::App* sample = app.add_subcommand("sample", "Draw ambient-space samples into a CSV");
    sample->add_option("--checkpoint", checkpoint_dir, "Checkpoint directory")->required();
    sample->add_option("--n", n_samples, "Number of samples")->check(CLI::NonNegativeNumber);
    sample->add_option("--out", out_path, "Output CSV path")->required();
    add_seed(sample);

    CLI::App* eval = app.add_subcommand("eval", "Score the checkpointed model, write JSON");
    eval->add_option("--checkpoint", checkpoint_dir, "Checkpoint directory")->required();
    eval->add_option("--data", data_dir, "Directory holding a prior `generate` output");
    eval->add_option("--mode", mode, "Single density mode override")
        ->check(CLI::IsMember({"exact", "bound", "hutchinson", "hutchinson_bound", "coarse"}));
    eval->add_option("--out", out_path, "Output JSON path")->required();

    CLI::App* plot = app.add_subcommand("plot", "Render a density heatmap or dataset scatter");
    plot->add_option("--checkpoint", checkpoint_dir, "Checkpoint directory (model density)");
    plot->add_option("--config", config_path, "Experiment config (dataset scatter)");
    plot->add_option("--projection", projection, "mollweide | poincare | scatter3d")
        ->check(CLI::IsMember({"mollweide", "poincare", "scatter3d"}));
    plot->add_option("--width", width, "Image width in pixels")->check(CLI::Range(16, 4096));
    plot->add_option("--out", out_path, "Output PNG path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        const std::uint64_t* seed_ptr = seed_set ? &seed : nullptr;
        if (generate->parsed()) {
            mcf::config::ExperimentConfig cfg = load_with_seed_override(config_path, seed_ptr);
            mcf::cmd::GenerateResult result = mcf::cmd::generate(cfg, out_path);
            std::cout << "wrote " << result.n_train << " train / " << result.n_val
                      << " val points to " << result.prefix << ".{train,val}.csv\n";
        } else if (train->parsed()) {
            mcf::config::ExperimentConfig cfg = load_with_seed_override(config_path, seed_ptr);
            mcf::cmd::TrainResult result = mcf::cmd::train(cfg, data_dir, out_path, &std::cout);
            if (result.state.diverged) return 2;
        } else if (sample->parsed()) {
            mcf::cmd::sample(checkpoint_dir, n_samples, seed, out_path);
            std::cout << "wrote " << n_samples << " samples to " << out_path << "\n";
        } else if (eval->parsed()) {
            mcf::eval::EvalReport report =
                mcf::cmd::evaluate(checkpoint_dir, data_dir, out_path, mode);
            std::cout << "report written to " << out_path << "\n";
            for (const auto& [name, nll] : report.mean_nll) {
                std::cout << "  nll[" << name << "] = " << nll << "\n";
            }
            std::cout << "  recon = " << report.mean_recon_error
                      << "  kde = " << report.kde_score << "\n";
        } else if (plot->parsed()) {
            if (checkpoint_dir.empty() == config_path.empty()) {
                std::cerr << "plot: pass exactly one of --checkpoint or --config\n";
                return 1;
            }
            if (!checkpoint_dir.empty()) {
                mcf::cmd::plot_model(checkpoint_dir, projection, out_path, width);
            } else {
                mcf::cmd::plot_dataset(mcf::config::load_config(config_path), projection,
                                       out_path, width);
            }
            std::cout << "wrote " << out_path << "\n";
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
