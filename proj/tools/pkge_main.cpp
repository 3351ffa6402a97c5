#include <CLI11.hpp>

#include "pkge/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"ProcrustEs-style knowledge graph embedding trainer"};
    app.require_subcommand(1);

    pkge::cli::TrainOptions train_opts;
    auto* train = app.add_subcommand("train", "train embeddings");
    train->add_option("--train", train_opts.train_path, "training triples")->required();
    train->add_option("--valid", train_opts.valid_path, "validation triples")->required();
    train->add_option("--test", train_opts.test_path, "test triples")->required();
    train->add_option("--d", train_opts.config.d, "embedding dimension");
    train->add_option("--ds", train_opts.config.d_s, "sub-vector dimension");
    train->add_option("--lr", train_opts.config.learning_rate, "learning rate");
    train->add_option("--max-epochs", train_opts.config.max_epochs, "epoch cap");
    train->add_option("--eval-every", train_opts.config.eval_every,
                      "validation interval (epochs)");
    train->add_flag("--neg-sampling", train_opts.config.negative_sampling,
                    "negative sampling mode");
    train->add_flag("--trad-batch", train_opts.config.traditional_batch,
                    "traditional mini-batch mode");
    auto* batch_opt =
        train->add_option("--batch-size", train_opts.config.batch_size, "TB batch size");
    auto* neg_opt = train->add_option(
        "--negatives", train_opts.config.negatives_per_positive, "negatives per positive");
    auto* margin_opt =
        train->add_option("--margin", train_opts.config.margin, "NS margin gamma");
    train->add_option("--seed", train_opts.config.seed, "random seed");
    train->add_option("--threads", train_opts.config.threads, "worker thread cap");
    train->add_option("--out", train_opts.checkpoint_out, "checkpoint output path");
    train->add_option("--metrics", train_opts.metrics_out, "per-epoch JSON-lines path");

    pkge::cli::EvalOptions eval_opts;
    auto* evalc = app.add_subcommand("eval", "evaluate a checkpoint");
    evalc->add_option("--checkpoint", eval_opts.checkpoint_path, "checkpoint path")
        ->required();
    evalc->add_option("--train", eval_opts.train_path, "training triples")->required();
    evalc->add_option("--valid", eval_opts.valid_path, "validation triples")->required();
    evalc->add_option("--test", eval_opts.test_path, "test triples")->required();
    evalc->add_option("--threads", eval_opts.threads, "worker thread cap");
    bool unsquared = false;
    evalc->add_flag("--unsquared", unsquared, "sum unsquared sub-distances in scores");

    pkge::cli::StatsOptions stats_opts;
    auto* stats = app.add_subcommand("stats", "dataset statistics");
    stats->add_option("--train", stats_opts.train_path, "training triples")->required();
    stats->add_option("--valid", stats_opts.valid_path, "validation triples")->required();
    stats->add_option("--test", stats_opts.test_path, "test triples")->required();

    pkge::cli::PcaOptions pca_opts;
    auto* pca = app.add_subcommand("export-pca", "project entities onto top components");
    pca->add_option("--checkpoint", pca_opts.checkpoint_path, "checkpoint path")
        ->required();
    pca->add_option("--out", pca_opts.csv_out, "output CSV path")->required();
    pca->add_option("--components", pca_opts.components, "number of components");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    if (train->parsed()) {
        if (batch_opt->count() > 0 && !train_opts.config.traditional_batch) {
            std::cerr << "usage error: --batch-size requires --trad-batch\n";
            return 2;
        }
        if ((neg_opt->count() > 0 || margin_opt->count() > 0) &&
            !train_opts.config.negative_sampling) {
            std::cerr << "usage error: --negatives/--margin require --neg-sampling\n";
            return 2;
        }
        return pkge::cli::cmd_train(train_opts);
    }
    if (evalc->parsed()) {
        eval_opts.squared = !unsquared;
        return pkge::cli::cmd_eval(eval_opts);
    }
    if (stats->parsed()) {
        return pkge::cli::cmd_stats(stats_opts);
    }
    if (pca->parsed()) {
        return pkge::cli::cmd_export_pca(pca_opts);
    }
    return 2;
}
