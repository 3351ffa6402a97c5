#include "pkge/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>

#include "pkge/errors.hpp"
#include "pkge/eval.hpp"
#include "pkge/parallel.hpp"

namespace pkge::trainer {

namespace {

using dataset::EntityId;
using dataset::RelationId;
using dataset::Triple;

double softplus(double x) {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
    return x >= 0.0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

void check_finite(double loss, int epoch) {
    if (!std::isfinite(loss)) {
        throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                              ": non-finite loss");
    }
}

void check_table_finite(const EmbeddingTable& t, int epoch, const char* what) {
    for (double x : t.data) {
        if (!std::isfinite(x)) {
            throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                                  ": non-finite " + std::string(what));
        }
    }
}

/// Canonical processing order: relation ids ascending, independent of the
/// order groups were handed in. Keeps gradient accumulation bit-stable.
std::vector<std::size_t> canonical_order(const std::vector<RelationGroup>& groups) {
    std::vector<std::size_t> order(groups.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return groups[a].relation < groups[b].relation;
    });
    return order;
}

/// Per-cell solve + loss, optionally accumulating entity gradients.
/// Parallel across subspaces; each subspace owns disjoint slices of the
/// gradient buffer and the relation set, and walks relations in canonical
/// order, so results do not depend on thread count or group order.
double solve_cells(TrainState& state, const std::vector<RelationGroup>& groups,
                   const TrainConfig& cfg, EmbeddingTable* grad) {
    const std::size_t n_sub = state.table.subspaces();
    const std::vector<std::size_t> order = canonical_order(groups);
    std::vector<double> loss_per_subspace(n_sub, 0.0);

    parallel_for(n_sub, cfg.threads, [&](std::size_t j) {
        double loss_j = 0.0;
        for (std::size_t idx : order) {
            const RelationGroup& g = groups[idx];
            const DenseMatrix h = embeddings::gather(state.table, g.heads, j);
            const DenseMatrix t = embeddings::gather(state.table, g.tails, j);
            DenseMatrix r = procrustes::solve_opa(h, t);
            loss_j += compute_block_loss(h, r, t);
            if (grad != nullptr) {
                auto [grad_h, grad_t] = entity_gradients(h, r, t);
                embeddings::scatter_add(*grad, g.heads, j, grad_h);
                embeddings::scatter_add(*grad, g.tails, j, grad_t);
            }
            state.relations.at(static_cast<std::size_t>(g.relation), j) = std::move(r);
        }
        loss_per_subspace[j] = loss_j;
    });

    double loss = 0.0;
    for (double lj : loss_per_subspace) loss += lj;
    return loss;
}

void adam_step(TrainState& state, const EmbeddingTable& grad, const TrainConfig& cfg) {
    ++state.adam_step;
    const double t = static_cast<double>(state.adam_step);
    const double bias1 = 1.0 - std::pow(cfg.beta1, t);
    const double bias2 = 1.0 - std::pow(cfg.beta2, t);
    const std::size_t n = state.table.data.size();
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grad.data[i];
        double& m = state.moment1.data[i];
        double& v = state.moment2.data[i];
        m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
        v = cfg.beta2 * v + (1.0 - cfg.beta2) * g * g;
        state.table.data[i] -= cfg.learning_rate * (m / bias1) /
                               (std::sqrt(v / bias2) + cfg.epsilon);
    }
}

void end_of_epoch(TrainState& state, const TrainConfig& cfg) {
    if (cfg.spherise) embeddings::spherise(state.table, state.spherise_rng);
    check_table_finite(state.table, state.epoch, "embedding table");
}

std::vector<RelationGroup> group_batch(const std::vector<Triple>& triples,
                                       std::span<const std::size_t> batch_indices) {
    std::map<RelationId, RelationGroup> by_relation;
    for (std::size_t idx : batch_indices) {
        const Triple& t = triples[idx];
        RelationGroup& g = by_relation[t.relation];
        g.relation = t.relation;
        g.heads.push_back(t.head);
        g.tails.push_back(t.tail);
    }
    std::vector<RelationGroup> groups;
    groups.reserve(by_relation.size());
    for (auto& [rel, g] : by_relation) groups.push_back(std::move(g));
    return groups;
}

/// NS objective over a set of positives (and their presampled negatives).
/// Relation matrices are solved from the positives first; entity gradients
/// come from the logistic ranking loss only.
double ns_step_loss(TrainState& state, const std::vector<RelationGroup>& groups,
                    const std::vector<Triple>& positives,
                    const std::vector<std::vector<Triple>>& negatives,
                    const TrainConfig& cfg, EmbeddingTable& grad) {
    solve_cells(state, groups, cfg, nullptr);
    double loss = 0.0;
    for (std::size_t i = 0; i < positives.size(); ++i) {
        loss += ns_tuple_loss(state.table, state.relations, positives[i], negatives[i],
                              cfg, &grad);
    }
    return loss;
}

}  // namespace

void TrainConfig::validate() const {
    if (d_s == 0 || d % d_s != 0) {
        throw ConfigError("d (" + std::to_string(d) + ") must be divisible by d_s (" +
                          std::to_string(d_s) + ")");
    }
    if (learning_rate <= 0.0) throw ConfigError("learning rate must be positive");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (negative_sampling && negatives_per_positive < 1) {
        throw ConfigError("negatives per positive must be >= 1");
    }
    if (max_epochs < 0) throw ConfigError("max epochs must be >= 0");
}

TrainState init_state(const TrainConfig& cfg, std::size_t n_entities) {
    cfg.validate();
    TrainState state;
    state.table = embeddings::init(n_entities, cfg.d, cfg.d_s, cfg.seed);
    state.moment1 = state.table.zeros_like();
    state.moment2 = state.table.zeros_like();
    state.sample_rng.seed(cfg.seed ^ 0x5bd1e995u);
    state.spherise_rng.seed(cfg.seed ^ 0x27d4eb2fu);
    return state;
}

double compute_block_loss(const DenseMatrix& h, const DenseMatrix& r,
                          const DenseMatrix& t) {
    if (h.cols != r.rows || r.rows != r.cols || t.cols != r.cols || h.rows != t.rows) {
        throw ShapeError("compute_block_loss: inconsistent shapes");
    }
    const std::size_t d_s = r.cols;
    std::vector<double> rotated(d_s);
    double sum = 0.0;
    for (std::size_t n = 0; n < h.rows; ++n) {
        linalg::rotate_row(h.row_ptr(n), r, rotated.data());
        const double* trow = t.row_ptr(n);
        for (std::size_t c = 0; c < d_s; ++c) {
            const double diff = rotated[c] - trow[c];
            sum += diff * diff;
        }
    }
    return std::sqrt(sum);
}

std::pair<DenseMatrix, DenseMatrix> entity_gradients(const DenseMatrix& h,
                                                     const DenseMatrix& r,
                                                     const DenseMatrix& t) {
    if (h.cols != r.rows || r.rows != r.cols || t.cols != r.cols || h.rows != t.rows) {
        throw ShapeError("entity_gradients: inconsistent shapes");
    }
    const std::size_t d_s = r.cols;
    DenseMatrix grad_h(h.rows, d_s);
    DenseMatrix grad_t(h.rows, d_s);
    std::vector<double> rotated(d_s);
    for (std::size_t n = 0; n < h.rows; ++n) {
        linalg::rotate_row(h.row_ptr(n), r, rotated.data());
        const double* trow = t.row_ptr(n);
        double* gt = grad_t.row_ptr(n);
        for (std::size_t c = 0; c < d_s; ++c) {
            const double diff = rotated[c] - trow[c];
            rotated[c] = diff;  // reuse as the residual row
            gt[c] = -diff;
        }
        double* gh = grad_h.row_ptr(n);
        for (std::size_t k = 0; k < d_s; ++k) {
            double s = 0.0;
            const double* rrow = r.row_ptr(k);
            for (std::size_t c = 0; c < d_s; ++c) s += rotated[c] * rrow[c];
            gh[k] = s;  // (h r - t) r^T
        }
    }
    return {std::move(grad_h), std::move(grad_t)};
}

double train_epoch_fullbatch(TrainState& state, const std::vector<RelationGroup>& groups,
                             const TrainConfig& cfg) {
    ++state.epoch;
    EmbeddingTable grad = state.table.zeros_like();
    const double loss = solve_cells(state, groups, cfg, &grad);
    check_finite(loss, state.epoch);
    check_table_finite(grad, state.epoch, "gradient");
    adam_step(state, grad, cfg);
    end_of_epoch(state, cfg);
    return loss;
}

dataset::Triple corrupt(const Triple& positive, std::size_t n_entities,
                        std::mt19937_64& rng) {
    std::uniform_int_distribution<int> coin(0, 1);
    std::uniform_int_distribution<EntityId> pick(0, static_cast<EntityId>(n_entities - 1));
    Triple corrupted = positive;
    if (coin(rng) == 0) {
        corrupted.head = pick(rng);
    } else {
        corrupted.tail = pick(rng);
    }
    return corrupted;
}

double ns_tuple_loss(const EmbeddingTable& table, const RelationSet& rels,
                     const Triple& positive, const std::vector<Triple>& negatives,
                     const TrainConfig& cfg, EmbeddingTable* grad_buf) {
    const std::size_t d_s = table.d_s;
    const std::size_t n_sub = table.subspaces();
    std::vector<double> rotated(d_s);

    auto distance = [&](const Triple& t) {
        double s = 0.0;
        for (std::size_t j = 0; j < n_sub; ++j) {
            const DenseMatrix& r = rels.at(static_cast<std::size_t>(t.relation), j);
            linalg::rotate_row(table.block(static_cast<std::size_t>(t.head), j), r,
                               rotated.data());
            const double* tail = table.block(static_cast<std::size_t>(t.tail), j);
            for (std::size_t c = 0; c < d_s; ++c) {
                const double diff = rotated[c] - tail[c];
                s += diff * diff;
            }
        }
        return s;
    };

    // coef scales d(loss)/d(distance); gradient of distance wrt head block is
    // 2 (h R - t) R^T and wrt tail block -2 (h R - t).
    auto add_grads = [&](const Triple& t, double coef) {
        for (std::size_t j = 0; j < n_sub; ++j) {
            const DenseMatrix& r = rels.at(static_cast<std::size_t>(t.relation), j);
            const double* head = table.block(static_cast<std::size_t>(t.head), j);
            const double* tail = table.block(static_cast<std::size_t>(t.tail), j);
            linalg::rotate_row(head, r, rotated.data());
            for (std::size_t c = 0; c < d_s; ++c) rotated[c] -= tail[c];
            double* gh = grad_buf->block(static_cast<std::size_t>(t.head), j);
            double* gt = grad_buf->block(static_cast<std::size_t>(t.tail), j);
            for (std::size_t k = 0; k < d_s; ++k) {
                double s = 0.0;
                const double* rrow = r.row_ptr(k);
                for (std::size_t c = 0; c < d_s; ++c) s += rotated[c] * rrow[c];
                gh[k] += coef * 2.0 * s;
            }
            for (std::size_t c = 0; c < d_s; ++c) gt[c] -= coef * 2.0 * rotated[c];
        }
    };

    const double s_pos = distance(positive);
    double loss = softplus(s_pos - cfg.margin);  // -log sigmoid(margin - s+)
    if (grad_buf != nullptr) {
        add_grads(positive, 1.0 - sigmoid(cfg.margin - s_pos));
    }
    if (!negatives.empty()) {
        const double inv_k = 1.0 / static_cast<double>(negatives.size());
        for (const Triple& neg : negatives) {
            const double s_neg = distance(neg);
            loss += inv_k * softplus(cfg.margin - s_neg);  // -log sigmoid(s- - margin)
            if (grad_buf != nullptr) {
                add_grads(neg, -inv_k * (1.0 - sigmoid(s_neg - cfg.margin)));
            }
        }
    }
    return loss;
}

double train_epoch_ns(TrainState& state, const std::vector<RelationGroup>& groups,
                      const TrainConfig& cfg) {
    ++state.epoch;
    std::vector<Triple> positives;
    for (const RelationGroup& g : groups) {
        for (std::size_t i = 0; i < g.heads.size(); ++i) {
            positives.push_back({g.heads[i], g.relation, g.tails[i]});
        }
    }
    std::vector<std::vector<Triple>> negatives(positives.size());
    for (std::size_t i = 0; i < positives.size(); ++i) {
        negatives[i].reserve(cfg.negatives_per_positive);
        for (int k = 0; k < cfg.negatives_per_positive; ++k) {
            negatives[i].push_back(
                corrupt(positives[i], state.table.n_entities, state.sample_rng));
        }
    }
    EmbeddingTable grad = state.table.zeros_like();
    const double loss = ns_step_loss(state, groups, positives, negatives, cfg, grad);
    check_finite(loss, state.epoch);
    check_table_finite(grad, state.epoch, "gradient");
    adam_step(state, grad, cfg);
    end_of_epoch(state, cfg);
    return loss;
}

double train_epoch_tb(TrainState& state, const TripleStore& store,
                      const TrainConfig& cfg) {
    ++state.epoch;
    const std::vector<Triple>& train = store.train;
    std::vector<std::size_t> perm(train.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), state.sample_rng);

    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < perm.size(); start += cfg.batch_size) {
        const std::size_t end = std::min(perm.size(), start + cfg.batch_size);
        const std::span<const std::size_t> batch(perm.data() + start, end - start);
        const std::vector<RelationGroup> groups = group_batch(train, batch);
        EmbeddingTable grad = state.table.zeros_like();
        double loss;
        if (cfg.negative_sampling) {
            std::vector<Triple> positives;
            positives.reserve(batch.size());
            for (std::size_t idx : batch) positives.push_back(train[idx]);
            std::vector<std::vector<Triple>> negatives(positives.size());
            for (std::size_t i = 0; i < positives.size(); ++i) {
                for (int k = 0; k < cfg.negatives_per_positive; ++k) {
                    negatives[i].push_back(
                        corrupt(positives[i], state.table.n_entities, state.sample_rng));
                }
            }
            loss = ns_step_loss(state, groups, positives, negatives, cfg, grad);
        } else {
            loss = solve_cells(state, groups, cfg, &grad);
        }
        check_finite(loss, state.epoch);
        adam_step(state, grad, cfg);
        epoch_loss += loss;
    }
    check_finite(epoch_loss, state.epoch);
    end_of_epoch(state, cfg);
    return epoch_loss;
}

void resolve_relations(TrainState& state, const std::vector<RelationGroup>& groups,
                       int threads) {
    const std::size_t n_sub = state.table.subspaces();
    parallel_for(n_sub, threads, [&](std::size_t j) {
        for (const RelationGroup& g : groups) {
            const DenseMatrix h = embeddings::gather(state.table, g.heads, j);
            const DenseMatrix t = embeddings::gather(state.table, g.tails, j);
            state.relations.at(static_cast<std::size_t>(g.relation), j) =
                procrustes::solve_opa(h, t);
        }
    });
}

TrainState fit(const TrainConfig& cfg, const TripleStore& store,
               const TelemetrySink& telemetry) {
    cfg.validate();
    if (store.train.empty()) {
        throw ConfigError("training split is empty");
    }
    const bool will_evaluate = cfg.eval_every > 0 && cfg.max_epochs >= cfg.eval_every;
    if (will_evaluate && store.valid.empty()) {
        throw ConfigError("validation split is empty but early stopping is enabled");
    }

    const std::vector<RelationGroup> groups = dataset::build_groups(store);
    const dataset::FilterIndex filter =
        will_evaluate ? dataset::build_filter(store) : dataset::FilterIndex{};

    TrainState state = init_state(cfg, store.vocab.n_entities());
    state.relations = RelationSet(store.vocab.n_relations(), cfg.d / cfg.d_s, cfg.d_s);

    TrainState best;
    bool have_best = false;

    for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        double loss;
        if (cfg.traditional_batch) {
            loss = train_epoch_tb(state, store, cfg);
        } else if (cfg.negative_sampling) {
            loss = train_epoch_ns(state, groups, cfg);
        } else {
            loss = train_epoch_fullbatch(state, groups, cfg);
        }
        const auto t1 = std::chrono::steady_clock::now();
        const double ms = std::chrono::duration<double, std::milli>(t1 - t0).count();

        EpochRecord record;
        record.epoch = state.epoch;
        record.loss = loss;
        record.wall_clock_ms = ms;
        record.samples_per_sec =
            ms > 0.0 ? static_cast<double>(store.train.size()) / (ms / 1000.0) : 0.0;

        bool stop = false;
        if (will_evaluate && epoch % cfg.eval_every == 0) {
            resolve_relations(state, groups, cfg.threads);
            const eval::EvalReport report = eval::evaluate(
                state.table, state.relations, store.valid, filter, cfg.threads);
            record.valid_mrr = report.mrr;
            if (report.mrr > state.best_mrr) {
                state.best_mrr = report.mrr;
                state.best_epoch = state.epoch;
                best = state;
                have_best = true;
            } else {
                stop = true;
            }
        }
        if (telemetry) telemetry(record);
        if (stop) break;
    }

    TrainState result = have_best ? std::move(best) : std::move(state);
    resolve_relations(result, groups, cfg.threads);
    return result;
}

}  // namespace pkge::trainer
