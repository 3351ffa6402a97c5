#pragma once

#include <string>

#include "pkge/embeddings.hpp"
#include "pkge/procrustes.hpp"

namespace pkge::checkpoint {

struct Checkpoint {
    embeddings::EmbeddingTable table;
    procrustes::RelationSet relations;
};

/// Binary layout, little-endian:
///   "PKGE" | u32 version | u64 n_entities, d, d_s, m |
///   entity doubles (row-major) | relation doubles (cell-major, row-major) |
///   u64 FNV-1a checksum over everything before it.
void save(const std::string& path, const embeddings::EmbeddingTable& table,
          const procrustes::RelationSet& relations);

/// Throws CheckpointError on bad magic, checksum failure, or payload length
/// inconsistent with the header dimensions.
Checkpoint load(const std::string& path);

}  // namespace pkge::checkpoint
