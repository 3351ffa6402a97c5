#pragma once

#include <cstddef>
#include <vector>

#include "pkge/dataset.hpp"
#include "pkge/embeddings.hpp"
#include "pkge/procrustes.hpp"

namespace pkge::eval {

using dataset::EntityId;
using dataset::FilterIndex;
using dataset::Triple;
using embeddings::EmbeddingTable;
using procrustes::RelationSet;

enum class Direction { head, tail };

struct EvalReport {
    double mrr = 0.0;
    double hits1 = 0.0;
    double hits3 = 0.0;
    double hits10 = 0.0;
    std::size_t n_queries = 0;
    double samples_per_sec = 0.0;
    double wall_clock_s = 0.0;
    bool squared_distance = true;  // score variant used
};

/// Plausibility of one triple: negated sum of per-subspace distances between
/// the rotated head block and the tail block (squared by default).
double score(const EmbeddingTable& table, const RelationSet& rels, EntityId h,
             dataset::RelationId r, EntityId t, bool squared = true);

/// Filtered rank of the query's answer in the chosen slot, tie-averaged:
/// 1 + |strictly better| + |ties| / 2. Pass filter = nullptr for raw ranks.
double rank_query(const EmbeddingTable& table, const RelationSet& rels,
                  const Triple& query, Direction direction, const FilterIndex* filter,
                  bool squared = true);

/// Two queries (head and tail prediction) per triple; MRR, Hits@{1,3,10},
/// wall clock and throughput.
EvalReport evaluate(const EmbeddingTable& table, const RelationSet& rels,
                    const std::vector<Triple>& split, const FilterIndex& filter,
                    int threads = 0, bool squared = true);

}  // namespace pkge::eval
