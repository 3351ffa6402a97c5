#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace pkge::dataset {

using EntityId = std::int32_t;
using RelationId = std::int32_t;

struct NameTriple {
    std::string head;
    std::string relation;
    std::string tail;
};

struct Triple {
    EntityId head;
    RelationId relation;
    EntityId tail;

    bool operator==(const Triple&) const = default;
};

/// Dense, first-occurrence-ordered id maps over all observed names.
struct Vocab {
    std::unordered_map<std::string, EntityId> entity_ids;
    std::unordered_map<std::string, RelationId> relation_ids;
    std::vector<std::string> entity_names;
    std::vector<std::string> relation_names;

    std::size_t n_entities() const { return entity_names.size(); }
    std::size_t n_relations() const { return relation_names.size(); }
};

struct TripleStore {
    Vocab vocab;
    std::vector<Triple> train;
    std::vector<Triple> valid;
    std::vector<Triple> test;
};

/// All train tuples sharing one relation, in train-file order.
struct RelationGroup {
    RelationId relation;
    std::vector<EntityId> heads;
    std::vector<EntityId> tails;
};

/// True-answer sets over train + valid + test for filtered ranking.
struct FilterIndex {
    // key = (first_id << 32) | second_id
    std::unordered_map<std::uint64_t, std::unordered_set<EntityId>> tails_of;  // (h, r)
    std::unordered_map<std::uint64_t, std::unordered_set<EntityId>> heads_of;  // (r, t)

    static std::uint64_t key(std::int64_t a, std::int64_t b) {
        return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
    }
};

/// Parses one tab-separated triple per line; keeps file order and duplicates.
std::vector<NameTriple> load_split(const std::string& path);

/// Ids assigned in first-occurrence order over train, then valid, then test.
TripleStore build_store(const std::vector<NameTriple>& train,
                        const std::vector<NameTriple>& valid,
                        const std::vector<NameTriple>& test);

std::vector<RelationGroup> build_groups(const TripleStore& store);

FilterIndex build_filter(const TripleStore& store);

}  // namespace pkge::dataset
