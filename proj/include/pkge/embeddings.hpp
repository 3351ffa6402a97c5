#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "pkge/dataset.hpp"
#include "pkge/linalg.hpp"

namespace pkge::embeddings {

using dataset::EntityId;

/// n_entities x d entity embeddings, each row a concatenation of d/d_s
/// independent sub-vectors of width d_s.
struct EmbeddingTable {
    std::size_t n_entities = 0;
    std::size_t d = 0;
    std::size_t d_s = 0;
    std::vector<double> data;  // n_entities x d, row-major

    EmbeddingTable() = default;
    EmbeddingTable(std::size_t n, std::size_t dim, std::size_t sub);

    std::size_t subspaces() const { return d_s == 0 ? 0 : d / d_s; }

    double* row(std::size_t entity) { return data.data() + entity * d; }
    const double* row(std::size_t entity) const { return data.data() + entity * d; }

    double* block(std::size_t entity, std::size_t subspace) {
        return row(entity) + subspace * d_s;
    }
    const double* block(std::size_t entity, std::size_t subspace) const {
        return row(entity) + subspace * d_s;
    }

    /// Zeroed buffer with identical shape (gradients, optimizer moments).
    EmbeddingTable zeros_like() const { return EmbeddingTable(n_entities, d, d_s); }
};

/// Unit-norm Gaussian sub-vectors; deterministic per seed.
EmbeddingTable init(std::size_t n_entities, std::size_t d, std::size_t d_s,
                    std::uint64_t seed);

/// Rows ids[k] of one subspace block, stacked into an |ids| x d_s matrix.
linalg::DenseMatrix gather(const EmbeddingTable& table, std::span<const EntityId> ids,
                           std::size_t subspace);

/// Adds grad row k into the buffer at entity ids[k]; repeats accumulate.
void scatter_add(EmbeddingTable& buffer, std::span<const EntityId> ids,
                 std::size_t subspace, const linalg::DenseMatrix& grad);

/// Per subspace: subtract the column mean, then rescale every row block to
/// unit norm. Rows that centre to zero are re-randomised to a unit vector.
void spherise(EmbeddingTable& table, std::mt19937_64& rng);

}  // namespace pkge::embeddings
