#include "pkge/cli.hpp"

#include <fstream>
#include <iostream>

#include <json.hpp>

#include "pkge/checkpoint.hpp"
#include "pkge/errors.hpp"
#include "pkge/eval.hpp"

namespace pkge::cli {

namespace {

using nlohmann::json;

dataset::TripleStore load_store(const std::string& train, const std::string& valid,
                                const std::string& test) {
    return dataset::build_store(dataset::load_split(train), dataset::load_split(valid),
                                dataset::load_split(test));
}

json report_to_json(const eval::EvalReport& report) {
    return json{{"mrr", report.mrr},
                {"hits1", report.hits1},
                {"hits3", report.hits3},
                {"hits10", report.hits10},
                {"n_queries", report.n_queries},
                {"samples_per_sec", report.samples_per_sec},
                {"wall_clock_s", report.wall_clock_s},
                {"score_variant", report.squared_distance ? "squared" : "unsquared"}};
}

}  // namespace

int cmd_train(const TrainOptions& opts) {
    try {
        const dataset::TripleStore store =
            load_store(opts.train_path, opts.valid_path, opts.test_path);

        std::ofstream metrics;
        if (!opts.metrics_out.empty()) {
            metrics.open(opts.metrics_out, std::ios::trunc);
            if (!metrics) {
                std::cerr << "cannot open metrics file: " << opts.metrics_out << "\n";
                return 1;
            }
        }
        trainer::TelemetrySink sink;
        if (metrics.is_open()) {
            sink = [&metrics](const trainer::EpochRecord& rec) {
                json line{{"epoch", rec.epoch},
                          {"loss", rec.loss},
                          {"wall_clock_ms", rec.wall_clock_ms},
                          {"samples_per_sec", rec.samples_per_sec}};
                if (rec.valid_mrr) line["valid_mrr"] = *rec.valid_mrr;
                metrics << line.dump() << "\n";
            };
        }

        const trainer::TrainState state = trainer::fit(opts.config, store, sink);
        if (!opts.checkpoint_out.empty()) {
            checkpoint::save(opts.checkpoint_out, state.table, state.relations);
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_eval(const EvalOptions& opts) {
    try {
        const checkpoint::Checkpoint ckpt = checkpoint::load(opts.checkpoint_path);
        const dataset::TripleStore store =
            load_store(opts.train_path, opts.valid_path, opts.test_path);
        if (store.vocab.n_entities() != ckpt.table.n_entities ||
            store.vocab.n_relations() != ckpt.relations.m) {
            std::cerr << "checkpoint does not match dataset (entities "
                      << ckpt.table.n_entities << " vs " << store.vocab.n_entities()
                      << ", relations " << ckpt.relations.m << " vs "
                      << store.vocab.n_relations() << ")\n";
            return 1;
        }
        const dataset::FilterIndex filter = dataset::build_filter(store);
        const eval::EvalReport report = eval::evaluate(
            ckpt.table, ckpt.relations, store.test, filter, opts.threads, opts.squared);
        std::cout << report_to_json(report).dump() << "\n";
        return 0;
    } catch (const CheckpointError& e) {
        std::cerr << "corrupt checkpoint: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_stats(const StatsOptions& opts) {
    try {
        const std::vector<dataset::NameTriple> train = dataset::load_split(opts.train_path);
        const std::vector<dataset::NameTriple> valid = dataset::load_split(opts.valid_path);
        const std::vector<dataset::NameTriple> test = dataset::load_split(opts.test_path);
        const dataset::TripleStore store = dataset::build_store(train, valid, test);
        json out{{"entities", store.vocab.n_entities()},
                 {"relations", store.vocab.n_relations()},
                 {"train", store.train.size()},
                 {"valid", store.valid.size()},
                 {"test", store.test.size()}};
        std::cout << out.dump() << "\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

int cmd_export_pca(const PcaOptions& opts) {
    try {
        const checkpoint::Checkpoint ckpt = checkpoint::load(opts.checkpoint_path);
        const std::size_t n = ckpt.table.n_entities;
        const std::size_t d = ckpt.table.d;
        if (opts.components == 0 || opts.components > d) {
            std::cerr << "usage error: components must be in [1, " << d << "]\n";
            return 2;
        }
        const std::size_t k = opts.components;

        // Column-centred table and its covariance.
        linalg::DenseMatrix centred(n, d);
        std::vector<double> mean(d, 0.0);
        for (std::size_t e = 0; e < n; ++e) {
            const double* row = ckpt.table.row(e);
            for (std::size_t c = 0; c < d; ++c) mean[c] += row[c];
        }
        for (std::size_t c = 0; c < d; ++c) mean[c] /= static_cast<double>(n);
        for (std::size_t e = 0; e < n; ++e) {
            const double* row = ckpt.table.row(e);
            for (std::size_t c = 0; c < d; ++c) centred(e, c) = row[c] - mean[c];
        }
        linalg::DenseMatrix cov(d, d);
        const double scale = n > 1 ? 1.0 / static_cast<double>(n - 1) : 1.0;
        for (std::size_t e = 0; e < n; ++e) {
            const double* row = centred.row_ptr(e);
            for (std::size_t i = 0; i < d; ++i) {
                const double ri = row[i];
                if (ri == 0.0) continue;
                double* crow = cov.row_ptr(i);
                for (std::size_t j = 0; j < d; ++j) crow[j] += ri * row[j];
            }
        }
        for (double& x : cov.data) x *= scale;

        const linalg::EigResult eig = linalg::sym_eig_top_k(cov, k);
        const linalg::DenseMatrix projections = linalg::matmul(centred, eig.vectors);

        std::ofstream out(opts.csv_out, std::ios::trunc);
        if (!out) {
            std::cerr << "cannot open output CSV: " << opts.csv_out << "\n";
            return 1;
        }
        out << "entity";
        for (std::size_t c = 0; c < k; ++c) out << ",pc" << (c + 1);
        out << "\n";
        out.precision(17);
        for (std::size_t e = 0; e < n; ++e) {
            out << e;
            for (std::size_t c = 0; c < k; ++c) out << "," << projections(e, c);
            out << "\n";
        }
        return 0;
    } catch (const CheckpointError& e) {
        std::cerr << "corrupt checkpoint: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace pkge::cli
