#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "pkge/dataset.hpp"
#include "pkge/embeddings.hpp"
#include "pkge/procrustes.hpp"

namespace pkge::trainer {

using dataset::RelationGroup;
using dataset::TripleStore;
using embeddings::EmbeddingTable;
using linalg::DenseMatrix;
using procrustes::RelationSet;

struct TrainConfig {
    std::size_t d = 2000;
    std::size_t d_s = 20;
    double learning_rate = 0.001;  // 0.05 suits FB15k-237-style graphs
    int max_epochs = 2000;
    int eval_every = 100;
    bool negative_sampling = false;
    bool traditional_batch = false;
    std::size_t batch_size = 1024;
    int negatives_per_positive = 128;
    double margin = 6.0;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 42;
    bool spherise = true;
    int threads = 0;  // 0 = resolve from PKGE_THREADS / hardware

    void validate() const;
};

struct EpochRecord {
    int epoch;
    double loss;
    std::optional<double> valid_mrr;
    double wall_clock_ms;
    double samples_per_sec;  // positive tuples per second
};

using TelemetrySink = std::function<void(const EpochRecord&)>;

struct TrainState {
    int epoch = 0;
    EmbeddingTable table;
    RelationSet relations;
    EmbeddingTable moment1;
    EmbeddingTable moment2;
    std::int64_t adam_step = 0;
    double best_mrr = -1.0;
    int best_epoch = -1;
    std::mt19937_64 sample_rng;    // TB shuffles and NS corruptions
    std::mt19937_64 spherise_rng;  // degenerate-row repair
};

/// Fresh state: seeded unit-norm table, identity relations, zero moments.
TrainState init_state(const TrainConfig& cfg, std::size_t n_entities);

/// Reported loss of Eq-style block objective: ||h r - t||_F (unsquared).
double compute_block_loss(const DenseMatrix& h, const DenseMatrix& r,
                          const DenseMatrix& t);

/// Gradients of the smooth surrogate 0.5 ||h r - t||_F^2:
/// gradH = (h r - t) r^T, gradT = -(h r - t).
std::pair<DenseMatrix, DenseMatrix> entity_gradients(const DenseMatrix& h,
                                                     const DenseMatrix& r,
                                                     const DenseMatrix& t);

/// One relation-grouped full-batch epoch: closed-form solve per cell,
/// entity gradients, a single optimizer step, then spherisation.
double train_epoch_fullbatch(TrainState& state, const std::vector<RelationGroup>& groups,
                             const TrainConfig& cfg);

/// Traditional mini-batch epoch; honours cfg.negative_sampling for NS+TB.
double train_epoch_tb(TrainState& state, const TripleStore& store, const TrainConfig& cfg);

/// Full-batch epoch with a logistic negative-sampling loss on entities;
/// relation matrices still come from the closed-form solve on positives.
double train_epoch_ns(TrainState& state, const std::vector<RelationGroup>& groups,
                      const TrainConfig& cfg);

/// NS loss and entity gradients for one positive with its corruptions;
/// exposed for finite-difference checks. Gradients accumulate into grad_buf.
double ns_tuple_loss(const EmbeddingTable& table, const RelationSet& rels,
                     const dataset::Triple& positive,
                     const std::vector<dataset::Triple>& negatives,
                     const TrainConfig& cfg, EmbeddingTable* grad_buf);

/// Uniform corruption: heads and tails replaced 50/50.
dataset::Triple corrupt(const dataset::Triple& positive, std::size_t n_entities,
                        std::mt19937_64& rng);

/// Re-derives every relation matrix from the current entity table (the
/// closed-form solve is a pure function of entities and grouping).
void resolve_relations(TrainState& state, const std::vector<RelationGroup>& groups,
                       int threads);

/// Full training loop with validation-MRR early stopping; returns the state
/// snapshot at the best validation MRR (final state if never evaluated).
TrainState fit(const TrainConfig& cfg, const TripleStore& store,
               const TelemetrySink& telemetry = nullptr);

}  // namespace pkge::trainer
