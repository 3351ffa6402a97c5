#include "pkge/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <map>
#include <span>
#include <unordered_set>

#include "pkge/errors.hpp"
#include "pkge/linalg.hpp"
#include "pkge/parallel.hpp"

namespace pkge::eval {

namespace {

using linalg::DenseMatrix;

constexpr std::size_t kQueryChunk = 32;

double block_distance(const double* a, const double* b, std::size_t d_s, bool squared) {
    double s = 0.0;
    for (std::size_t c = 0; c < d_s; ++c) {
        const double diff = a[c] - b[c];
        s += diff * diff;
    }
    return squared ? s : std::sqrt(s);
}

/// Scores every candidate entity for a block of same-relation queries.
/// Rotated entity blocks are shared across the block, one matrix of rotated
/// rows per subspace; accumulation runs subspace-major so the arithmetic is
/// identical to score().
void chunk_candidate_scores(const EmbeddingTable& table, const RelationSet& rels,
                            dataset::RelationId relation,
                            std::span<const Triple> queries, bool squared,
                            std::vector<std::vector<double>>& tail_scores,
                            std::vector<std::vector<double>>& head_scores) {
    const std::size_t n = table.n_entities;
    const std::size_t d_s = table.d_s;
    for (auto& v : tail_scores) v.assign(n, 0.0);
    for (auto& v : head_scores) v.assign(n, 0.0);

    DenseMatrix rotated(n, d_s);
    for (std::size_t j = 0; j < table.subspaces(); ++j) {
        const DenseMatrix& r = rels.at(static_cast<std::size_t>(relation), j);
        for (std::size_t e = 0; e < n; ++e) {
            linalg::rotate_row(table.block(e, j), r, rotated.row_ptr(e));
        }
        for (std::size_t q = 0; q < queries.size(); ++q) {
            const Triple& t = queries[q];
            const double* rotated_head =
                rotated.row_ptr(static_cast<std::size_t>(t.head));
            const double* tail_block = table.block(static_cast<std::size_t>(t.tail), j);
            double* ts = tail_scores[q].data();
            double* hs = head_scores[q].data();
            for (std::size_t cand = 0; cand < n; ++cand) {
                ts[cand] -= block_distance(rotated_head, table.block(cand, j), d_s, squared);
                hs[cand] -= block_distance(rotated.row_ptr(cand), tail_block, d_s, squared);
            }
        }
    }
}

double rank_from_scores(const std::vector<double>& scores, EntityId answer,
                        const std::unordered_set<EntityId>* filtered) {
    const double answer_score = scores[static_cast<std::size_t>(answer)];
    std::size_t better = 0;
    std::size_t ties = 0;
    for (std::size_t cand = 0; cand < scores.size(); ++cand) {
        const EntityId id = static_cast<EntityId>(cand);
        if (id == answer) continue;
        if (filtered != nullptr && filtered->count(id) > 0) continue;
        if (scores[cand] > answer_score) {
            ++better;
        } else if (scores[cand] == answer_score) {
            ++ties;
        }
    }
    return 1.0 + static_cast<double>(better) + static_cast<double>(ties) / 2.0;
}

const std::unordered_set<EntityId>* lookup(const FilterIndex* filter, std::uint64_t key,
                                           bool tails) {
    if (filter == nullptr) return nullptr;
    const auto& map = tails ? filter->tails_of : filter->heads_of;
    const auto it = map.find(key);
    return it == map.end() ? nullptr : &it->second;
}

}  // namespace

double score(const EmbeddingTable& table, const RelationSet& rels, EntityId h,
             dataset::RelationId r, EntityId t, bool squared) {
    const std::size_t d_s = table.d_s;
    std::vector<double> rotated(d_s);
    double s = 0.0;
    for (std::size_t j = 0; j < table.subspaces(); ++j) {
        const DenseMatrix& rel = rels.at(static_cast<std::size_t>(r), j);
        linalg::rotate_row(table.block(static_cast<std::size_t>(h), j), rel,
                           rotated.data());
        s -= block_distance(rotated.data(), table.block(static_cast<std::size_t>(t), j),
                            d_s, squared);
    }
    return s;
}

double rank_query(const EmbeddingTable& table, const RelationSet& rels,
                  const Triple& query, Direction direction, const FilterIndex* filter,
                  bool squared) {
    std::vector<std::vector<double>> tail_scores(1), head_scores(1);
    chunk_candidate_scores(table, rels, query.relation, std::span(&query, 1), squared,
                           tail_scores, head_scores);
    if (direction == Direction::tail) {
        const auto* filtered =
            lookup(filter, FilterIndex::key(query.head, query.relation), true);
        return rank_from_scores(tail_scores[0], query.tail, filtered);
    }
    const auto* filtered =
        lookup(filter, FilterIndex::key(query.relation, query.tail), false);
    return rank_from_scores(head_scores[0], query.head, filtered);
}

EvalReport evaluate(const EmbeddingTable& table, const RelationSet& rels,
                    const std::vector<Triple>& split, const FilterIndex& filter,
                    int threads, bool squared) {
    if (split.empty()) {
        throw ConfigError("evaluate: empty split");
    }
    const auto t0 = std::chrono::steady_clock::now();

    // Same-relation queries share rotated candidate blocks; chunked so the
    // per-chunk score buffers stay small.
    std::map<dataset::RelationId, std::vector<std::size_t>> by_relation;
    for (std::size_t i = 0; i < split.size(); ++i) {
        by_relation[split[i].relation].push_back(i);
    }
    struct Chunk {
        dataset::RelationId relation;
        std::vector<std::size_t> indices;
    };
    std::vector<Chunk> chunks;
    for (const auto& [rel, indices] : by_relation) {
        for (std::size_t start = 0; start < indices.size(); start += kQueryChunk) {
            const std::size_t end = std::min(indices.size(), start + kQueryChunk);
            chunks.push_back({rel, {indices.begin() + start, indices.begin() + end}});
        }
    }

    std::vector<double> tail_ranks(split.size());
    std::vector<double> head_ranks(split.size());
    parallel_for(chunks.size(), threads, [&](std::size_t ci) {
        const Chunk& chunk = chunks[ci];
        std::vector<Triple> queries;
        queries.reserve(chunk.indices.size());
        for (std::size_t idx : chunk.indices) queries.push_back(split[idx]);
        std::vector<std::vector<double>> tail_scores(queries.size());
        std::vector<std::vector<double>> head_scores(queries.size());
        chunk_candidate_scores(table, rels, chunk.relation, queries, squared,
                               tail_scores, head_scores);
        for (std::size_t q = 0; q < queries.size(); ++q) {
            const Triple& t = queries[q];
            const auto tail_key = FilterIndex::key(t.head, t.relation);
            const auto head_key = FilterIndex::key(t.relation, t.tail);
            const auto tit = filter.tails_of.find(tail_key);
            const auto hit = filter.heads_of.find(head_key);
            tail_ranks[chunk.indices[q]] = rank_from_scores(
                tail_scores[q], t.tail,
                tit == filter.tails_of.end() ? nullptr : &tit->second);
            head_ranks[chunk.indices[q]] = rank_from_scores(
                head_scores[q], t.head,
                hit == filter.heads_of.end() ? nullptr : &hit->second);
        }
    });

    EvalReport report;
    report.squared_distance = squared;
    report.n_queries = 2 * split.size();
    double mrr = 0.0;
    std::size_t h1 = 0, h3 = 0, h10 = 0;
    auto tally = [&](double rank) {
        mrr += 1.0 / rank;
        if (rank <= 1.0) ++h1;
        if (rank <= 3.0) ++h3;
        if (rank <= 10.0) ++h10;
    };
    for (double r : tail_ranks) tally(r);
    for (double r : head_ranks) tally(r);
    const double n_q = static_cast<double>(report.n_queries);
    report.mrr = mrr / n_q;
    report.hits1 = static_cast<double>(h1) / n_q;
    report.hits3 = static_cast<double>(h3) / n_q;
    report.hits10 = static_cast<double>(h10) / n_q;

    const auto t1 = std::chrono::steady_clock::now();
    report.wall_clock_s = std::chrono::duration<double>(t1 - t0).count();
    report.samples_per_sec =
        report.wall_clock_s > 0.0 ? n_q / report.wall_clock_s : 0.0;
    return report;
}

}  // namespace pkge::eval
