#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "pkge/errors.hpp"
#include "pkge/eval.hpp"
#include "support/oracles.hpp"
#include "support/synthetic.hpp"

using namespace pkge;
using dataset::EntityId;
using dataset::FilterIndex;
using dataset::Triple;
using embeddings::EmbeddingTable;
using eval::Direction;
using linalg::DenseMatrix;
using procrustes::RelationSet;

namespace {

// Independent scorer: naive per-coordinate rotation and distance.
double oracle_score(const EmbeddingTable& table, const RelationSet& rels, EntityId h,
                    dataset::RelationId r, EntityId t, bool squared) {
    double total = 0.0;
    for (std::size_t j = 0; j < table.subspaces(); ++j) {
        const DenseMatrix& rel = rels.at(static_cast<std::size_t>(r), j);
        double dist = 0.0;
        for (std::size_t c = 0; c < table.d_s; ++c) {
            double rotated = 0.0;
            for (std::size_t k = 0; k < table.d_s; ++k)
                rotated += table.block(static_cast<std::size_t>(h), j)[k] * rel(k, c);
            const double diff = rotated - table.block(static_cast<std::size_t>(t), j)[c];
            dist += diff * diff;
        }
        total -= squared ? dist : std::sqrt(dist);
    }
    return total;
}

// Brute-force tie-averaged rank over every entity, honouring the filter.
double oracle_rank(const EmbeddingTable& table, const RelationSet& rels,
                   const Triple& query, Direction dir, const FilterIndex* filter,
                   bool squared = true) {
    const std::size_t n = table.n_entities;
    const EntityId answer = dir == Direction::tail ? query.tail : query.head;
    auto candidate_score = [&](EntityId cand) {
        return dir == Direction::tail
                   ? oracle_score(table, rels, query.head, query.relation, cand, squared)
                   : oracle_score(table, rels, cand, query.relation, query.tail, squared);
    };
    const std::unordered_set<EntityId>* filtered = nullptr;
    if (filter != nullptr) {
        const auto& map = dir == Direction::tail ? filter->tails_of : filter->heads_of;
        const auto key = dir == Direction::tail
                             ? FilterIndex::key(query.head, query.relation)
                             : FilterIndex::key(query.relation, query.tail);
        const auto it = map.find(key);
        if (it != map.end()) filtered = &it->second;
    }
    const double answer_score = candidate_score(answer);
    std::size_t better = 0, ties = 0;
    for (std::size_t c = 0; c < n; ++c) {
        const EntityId cand = static_cast<EntityId>(c);
        if (cand == answer) continue;
        if (filtered != nullptr && filtered->count(cand) > 0) continue;
        const double s = candidate_score(cand);
        if (s > answer_score) ++better;
        if (s == answer_score) ++ties;
    }
    return 1.0 + static_cast<double>(better) + static_cast<double>(ties) / 2.0;
}

// Entities on a line in a single 2-dim subspace, identity relation.
EmbeddingTable line_table(const std::vector<double>& xs) {
    EmbeddingTable t(xs.size(), 2, 2);
    for (std::size_t e = 0; e < xs.size(); ++e) t.block(e, 0)[0] = xs[e];
    return t;
}

}  // namespace

TEST_CASE("score hand values under identity relations") {
    EmbeddingTable table(2, 2, 2);
    table.block(0, 0)[0] = 1.0;  // e0 = (1, 0)
    table.block(1, 0)[1] = 1.0;  // e1 = (0, 1)
    const RelationSet rels(1, 1, 2);

    CHECK(eval::score(table, rels, 0, 0, 0) == 0.0);
    CHECK(eval::score(table, rels, 0, 0, 1) == doctest::Approx(-2.0).epsilon(1e-15));
    CHECK(eval::score(table, rels, 0, 0, 1, /*squared=*/false) ==
          doctest::Approx(-std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("score matches the naive loop oracle on random inputs") {
    std::mt19937_64 rng(81);
    std::normal_distribution<double> gauss(0.0, 1.0);
    EmbeddingTable table(12, 8, 4);
    for (double& x : table.data) x = gauss(rng);
    RelationSet rels(3, 2, 4);
    for (std::size_t r = 0; r < 3; ++r)
        for (std::size_t j = 0; j < 2; ++j)
            rels.at(r, j) = linalg::random_orthogonal(4, 2000 + r * 10 + j);

    for (int trial = 0; trial < 200; ++trial) {
        const EntityId h = static_cast<EntityId>(rng() % 12);
        const EntityId t = static_cast<EntityId>(rng() % 12);
        const dataset::RelationId r = static_cast<dataset::RelationId>(rng() % 3);
        for (bool squared : {true, false}) {
            const double got = eval::score(table, rels, h, r, t, squared);
            const double want = oracle_score(table, rels, h, r, t, squared);
            CHECK(std::abs(got - want) < 1e-12 * std::max(1.0, std::abs(want)));
        }
    }
}

TEST_CASE("rank_query trivial best case and the all-tie average") {
    // answer strictly nearest: rank 1
    const EmbeddingTable table = line_table({0.0, 0.1, 5.0, 9.0});
    const RelationSet rels(1, 1, 2);
    CHECK(eval::rank_query(table, rels, Triple{0, 0, 1}, Direction::tail, nullptr) ==
          doctest::Approx(2.0));  // e0 itself still competes unfiltered
    FilterIndex filter;
    filter.tails_of[FilterIndex::key(0, 0)] = {0, 1};
    CHECK(eval::rank_query(table, rels, Triple{0, 0, 1}, Direction::tail, &filter) == 1.0);

    // every entity identical: all candidates tie, rank = (n + 1) / 2
    const std::size_t n = 7;
    EmbeddingTable same(n, 2, 2);
    for (std::size_t e = 0; e < n; ++e) same.block(e, 0)[0] = 1.0;
    const double tie_rank =
        eval::rank_query(same, rels, Triple{0, 0, 3}, Direction::tail, nullptr);
    CHECK(tie_rank == doctest::Approx((static_cast<double>(n) + 1.0) / 2.0));
}

TEST_CASE("ranks on an 8-entity hand graph match the brute-force oracle exactly") {
    std::mt19937_64 rng(82);
    std::normal_distribution<double> gauss(0.0, 1.0);
    EmbeddingTable table(8, 4, 2);
    for (double& x : table.data) x = gauss(rng);
    // duplicate rows force exact ties in both directions
    std::copy(table.row(2), table.row(2) + 4, table.row(5));
    std::copy(table.row(0), table.row(0) + 4, table.row(7));

    RelationSet rels(2, 2, 2);
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t j = 0; j < 2; ++j)
            rels.at(r, j) = linalg::random_orthogonal(2, 3000 + r * 10 + j);

    dataset::TripleStore store;
    store.train = {{0, 0, 1}, {1, 0, 2}, {2, 1, 3}, {4, 0, 5}, {6, 1, 7}, {0, 1, 5}};
    store.valid = {{3, 0, 4}};
    store.test = {{5, 1, 6}, {7, 0, 0}};
    const FilterIndex filter = dataset::build_filter(store);

    std::vector<Triple> all = store.train;
    all.insert(all.end(), store.valid.begin(), store.valid.end());
    all.insert(all.end(), store.test.begin(), store.test.end());
    for (const Triple& q : all) {
        for (Direction dir : {Direction::tail, Direction::head}) {
            CHECK(eval::rank_query(table, rels, q, dir, &filter) ==
                  oracle_rank(table, rels, q, dir, &filter));
            CHECK(eval::rank_query(table, rels, q, dir, nullptr) ==
                  oracle_rank(table, rels, q, dir, nullptr));
        }
    }
}

TEST_CASE("evaluate reproduces hand-computed metrics") {
    // ranks by construction: tail A = 1, head A = 1, tail B = 4, head B = 4
    const EmbeddingTable table = line_table({0.0, 1.0, 10.0, -6.0, -5.0});
    const RelationSet rels(1, 1, 2);

    dataset::TripleStore store;
    store.train = {{0, 0, 0}, {1, 0, 1}, {2, 0, 2}, {3, 0, 3}, {4, 0, 4}};
    store.test = {{0, 0, 1}, {2, 0, 3}};
    const FilterIndex filter = dataset::build_filter(store);

    const eval::EvalReport report = eval::evaluate(table, rels, store.test, filter);
    CHECK(report.n_queries == 4);
    CHECK(report.mrr == doctest::Approx(0.625).epsilon(1e-15));
    CHECK(report.hits1 == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(report.hits3 == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(report.hits10 == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(report.squared_distance);
    CHECK(report.wall_clock_s >= 0.0);
}

TEST_CASE("evaluate equals per-query ranking and is thread-invariant") {
    const auto kg = test::make_planted_kg(40, 3, 8, 4, 120, 15, 15, 83);
    const FilterIndex filter = dataset::build_filter(kg.store);
    const auto& table = kg.true_entities;
    const auto& rels = kg.true_relations;

    const eval::EvalReport report = eval::evaluate(table, rels, kg.store.test, filter, 1);
    double mrr = 0.0;
    std::size_t h1 = 0, h3 = 0, h10 = 0;
    for (const Triple& q : kg.store.test) {
        for (Direction dir : {Direction::tail, Direction::head}) {
            const double lib = eval::rank_query(table, rels, q, dir, &filter);
            CHECK(lib == oracle_rank(table, rels, q, dir, &filter));
            mrr += 1.0 / lib;
            if (lib <= 1.0) ++h1;
            if (lib <= 3.0) ++h3;
            if (lib <= 10.0) ++h10;
        }
    }
    const double n_q = static_cast<double>(2 * kg.store.test.size());
    CHECK(report.n_queries == 2 * kg.store.test.size());
    CHECK(report.mrr == doctest::Approx(mrr / n_q).epsilon(1e-15));
    CHECK(report.hits1 == doctest::Approx(h1 / n_q).epsilon(1e-15));
    CHECK(report.hits3 == doctest::Approx(h3 / n_q).epsilon(1e-15));
    CHECK(report.hits10 == doctest::Approx(h10 / n_q).epsilon(1e-15));

    const eval::EvalReport threaded =
        eval::evaluate(table, rels, kg.store.test, filter, 4);
    CHECK(threaded.mrr == report.mrr);
    CHECK(threaded.hits1 == report.hits1);
    CHECK(threaded.hits3 == report.hits3);
    CHECK(threaded.hits10 == report.hits10);
}

TEST_CASE("moving a distractor closer never improves the answer's rank") {
    EmbeddingTable table = line_table({0.0, 1.0, 3.0, 9.0});
    const RelationSet rels(1, 1, 2);
    const Triple query{0, 0, 1};
    const double before = eval::rank_query(table, rels, query, Direction::tail, nullptr);
    table.block(2, 0)[0] = 0.5;  // distractor e2 now nearer to the head than e1
    const double after = eval::rank_query(table, rels, query, Direction::tail, nullptr);
    CHECK(after >= before);
    CHECK(after == before + 1.0);
}

TEST_CASE("filtering never worsens a rank") {
    const auto kg = test::make_planted_kg(30, 2, 8, 4, 90, 10, 10, 84);
    const FilterIndex filter = dataset::build_filter(kg.store);
    for (const Triple& q : kg.store.test) {
        for (Direction dir : {Direction::tail, Direction::head}) {
            const double raw =
                eval::rank_query(kg.true_entities, kg.true_relations, q, dir, nullptr);
            const double filtered =
                eval::rank_query(kg.true_entities, kg.true_relations, q, dir, &filter);
            CHECK(filtered <= raw);
        }
    }
}

TEST_CASE("scores are invariant under a per-subspace gauge rotation") {
    const auto kg = test::make_planted_kg(20, 2, 8, 4, 60, 8, 8, 85);
    const EmbeddingTable& table = kg.true_entities;
    const RelationSet& rels = kg.true_relations;
    const std::size_t d_s = table.d_s;

    // x' = x Q per subspace, R' = Q^T R Q: distances are preserved
    std::vector<DenseMatrix> gauges;
    for (std::size_t j = 0; j < table.subspaces(); ++j)
        gauges.push_back(linalg::random_orthogonal(d_s, 4000 + j));

    EmbeddingTable transformed = table;
    std::vector<double> rotated(d_s);
    for (std::size_t e = 0; e < table.n_entities; ++e) {
        for (std::size_t j = 0; j < table.subspaces(); ++j) {
            linalg::rotate_row(table.block(e, j), gauges[j], rotated.data());
            std::copy(rotated.begin(), rotated.end(), transformed.block(e, j));
        }
    }
    RelationSet conjugated = rels;
    for (std::size_t r = 0; r < 2; ++r)
        for (std::size_t j = 0; j < table.subspaces(); ++j)
            conjugated.at(r, j) = linalg::matmul(
                linalg::transpose(gauges[j]), linalg::matmul(rels.at(r, j), gauges[j]));

    std::mt19937_64 rng(86);
    for (int trial = 0; trial < 100; ++trial) {
        const EntityId h = static_cast<EntityId>(rng() % 20);
        const EntityId t = static_cast<EntityId>(rng() % 20);
        const dataset::RelationId r = static_cast<dataset::RelationId>(rng() % 2);
        const double a = eval::score(table, rels, h, r, t);
        const double b = eval::score(transformed, conjugated, h, r, t);
        CHECK(std::abs(a - b) < 1e-9 * std::max(1.0, std::abs(a)));
    }
}

TEST_CASE("evaluate rejects an empty split") {
    const EmbeddingTable table = line_table({0.0, 1.0});
    const RelationSet rels(1, 1, 2);
    const FilterIndex filter;
    CHECK_THROWS_AS(eval::evaluate(table, rels, {}, filter), ConfigError);
}
