#pragma once

#include <string>

#include "pkge/trainer.hpp"

namespace pkge::cli {

struct TrainOptions {
    std::string train_path;
    std::string valid_path;
    std::string test_path;
    trainer::TrainConfig config;
    std::string checkpoint_out;  // empty = don't write
    std::string metrics_out;     // JSON-lines stream, empty = don't write
};

struct EvalOptions {
    std::string checkpoint_path;
    std::string train_path;
    std::string valid_path;
    std::string test_path;
    int threads = 0;
    bool squared = true;
};

struct StatsOptions {
    std::string train_path;
    std::string valid_path;
    std::string test_path;
};

struct PcaOptions {
    std::string checkpoint_path;
    std::string csv_out;
    std::size_t components = 3;
};

int cmd_train(const TrainOptions& opts);
int cmd_eval(const EvalOptions& opts);
int cmd_stats(const StatsOptions& opts);
int cmd_export_pca(const PcaOptions& opts);

}  // namespace pkge::cli
