#include "pkge/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>

#include "pkge/errors.hpp"

namespace pkge::dataset {

std::vector<NameTriple> load_split(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open triple file: " + path);
    }
    std::vector<NameTriple> triples;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t tab1 = line.find('\t');
        const std::size_t tab2 = tab1 == std::string::npos ? std::string::npos
                                                           : line.find('\t', tab1 + 1);
        if (tab1 == std::string::npos || tab2 == std::string::npos ||
            line.find('\t', tab2 + 1) != std::string::npos) {
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": expected 3 tab-separated fields");
        }
        triples.push_back({line.substr(0, tab1), line.substr(tab1 + 1, tab2 - tab1 - 1),
                           line.substr(tab2 + 1)});
    }
    if (in.bad()) {
        throw IoError("read failure on " + path);
    }
    return triples;
}

namespace {

Triple encode(Vocab& vocab, const NameTriple& t) {
    auto intern_entity = [&vocab](const std::string& name) -> EntityId {
        auto [it, inserted] = vocab.entity_ids.try_emplace(
            name, static_cast<EntityId>(vocab.entity_names.size()));
        if (inserted) vocab.entity_names.push_back(name);
        return it->second;
    };
    auto intern_relation = [&vocab](const std::string& name) -> RelationId {
        auto [it, inserted] = vocab.relation_ids.try_emplace(
            name, static_cast<RelationId>(vocab.relation_names.size()));
        if (inserted) vocab.relation_names.push_back(name);
        return it->second;
    };
    return {intern_entity(t.head), intern_relation(t.relation), intern_entity(t.tail)};
}

}  // namespace

TripleStore build_store(const std::vector<NameTriple>& train,
                        const std::vector<NameTriple>& valid,
                        const std::vector<NameTriple>& test) {
    TripleStore store;
    store.train.reserve(train.size());
    store.valid.reserve(valid.size());
    store.test.reserve(test.size());
    for (const auto& t : train) store.train.push_back(encode(store.vocab, t));
    for (const auto& t : valid) store.valid.push_back(encode(store.vocab, t));
    for (const auto& t : test) store.test.push_back(encode(store.vocab, t));
    return store;
}

std::vector<RelationGroup> build_groups(const TripleStore& store) {
    std::map<RelationId, RelationGroup> by_relation;
    for (const Triple& t : store.train) {
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

FilterIndex build_filter(const TripleStore& store) {
    FilterIndex index;
    auto add = [&index](const Triple& t) {
        index.tails_of[FilterIndex::key(t.head, t.relation)].insert(t.tail);
        index.heads_of[FilterIndex::key(t.relation, t.tail)].insert(t.head);
    };
    for (const Triple& t : store.train) add(t);
    for (const Triple& t : store.valid) add(t);
    for (const Triple& t : store.test) add(t);
    return index;
}

}  // namespace pkge::dataset
