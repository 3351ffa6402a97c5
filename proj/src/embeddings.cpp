#include "pkge/embeddings.hpp"

#include <cmath>
#include <string>

#include "pkge/errors.hpp"

namespace pkge::embeddings {

EmbeddingTable::EmbeddingTable(std::size_t n, std::size_t dim, std::size_t sub)
    : n_entities(n), d(dim), d_s(sub), data(n * dim, 0.0) {
    if (sub == 0 || dim % sub != 0) {
        throw ConfigError("embedding dimension " + std::to_string(dim) +
                          " not divisible by sub-vector width " + std::to_string(sub));
    }
}

EmbeddingTable init(std::size_t n_entities, std::size_t d, std::size_t d_s,
                    std::uint64_t seed) {
    if (n_entities == 0) {
        throw ConfigError("embedding table needs at least one entity");
    }
    EmbeddingTable table(n_entities, d, d_s);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t n_sub = table.subspaces();
    for (std::size_t e = 0; e < n_entities; ++e) {
        for (std::size_t j = 0; j < n_sub; ++j) {
            double* b = table.block(e, j);
            double norm = 0.0;
            do {
                norm = 0.0;
                for (std::size_t c = 0; c < d_s; ++c) {
                    b[c] = gauss(rng);
                    norm += b[c] * b[c];
                }
                norm = std::sqrt(norm);
            } while (norm <= 1e-12);
            for (std::size_t c = 0; c < d_s; ++c) b[c] /= norm;
        }
    }
    return table;
}

linalg::DenseMatrix gather(const EmbeddingTable& table, std::span<const EntityId> ids,
                           std::size_t subspace) {
    if (subspace >= table.subspaces()) {
        throw IndexError("gather: subspace " + std::to_string(subspace) + " out of range");
    }
    linalg::DenseMatrix out(ids.size(), table.d_s);
    for (std::size_t k = 0; k < ids.size(); ++k) {
        const EntityId id = ids[k];
        if (id < 0 || static_cast<std::size_t>(id) >= table.n_entities) {
            throw IndexError("gather: entity id " + std::to_string(id) + " out of range");
        }
        const double* src = table.block(static_cast<std::size_t>(id), subspace);
        double* dst = out.row_ptr(k);
        for (std::size_t c = 0; c < table.d_s; ++c) dst[c] = src[c];
    }
    return out;
}

void scatter_add(EmbeddingTable& buffer, std::span<const EntityId> ids,
                 std::size_t subspace, const linalg::DenseMatrix& grad) {
    if (subspace >= buffer.subspaces()) {
        throw IndexError("scatter_add: subspace out of range");
    }
    if (grad.rows != ids.size() || grad.cols != buffer.d_s) {
        throw ShapeError("scatter_add: gradient is " + std::to_string(grad.rows) + "x" +
                         std::to_string(grad.cols) + ", expected " +
                         std::to_string(ids.size()) + "x" + std::to_string(buffer.d_s));
    }
    for (std::size_t k = 0; k < ids.size(); ++k) {
        const EntityId id = ids[k];
        if (id < 0 || static_cast<std::size_t>(id) >= buffer.n_entities) {
            throw IndexError("scatter_add: entity id " + std::to_string(id) +
                             " out of range");
        }
        double* dst = buffer.block(static_cast<std::size_t>(id), subspace);
        const double* src = grad.row_ptr(k);
        for (std::size_t c = 0; c < buffer.d_s; ++c) dst[c] += src[c];
    }
}

void spherise(EmbeddingTable& table, std::mt19937_64& rng) {
    const std::size_t n = table.n_entities;
    const std::size_t d_s = table.d_s;
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<double> mean(d_s);
    for (std::size_t j = 0; j < table.subspaces(); ++j) {
        for (std::size_t c = 0; c < d_s; ++c) mean[c] = 0.0;
        for (std::size_t e = 0; e < n; ++e) {
            const double* b = table.block(e, j);
            for (std::size_t c = 0; c < d_s; ++c) mean[c] += b[c];
        }
        for (std::size_t c = 0; c < d_s; ++c) mean[c] /= static_cast<double>(n);
        for (std::size_t e = 0; e < n; ++e) {
            double* b = table.block(e, j);
            double norm = 0.0;
            for (std::size_t c = 0; c < d_s; ++c) {
                b[c] -= mean[c];
                norm += b[c] * b[c];
            }
            norm = std::sqrt(norm);
            while (norm <= 1e-12) {  // centring annihilated the row
                norm = 0.0;
                for (std::size_t c = 0; c < d_s; ++c) {
                    b[c] = gauss(rng);
                    norm += b[c] * b[c];
                }
                norm = std::sqrt(norm);
            }
            for (std::size_t c = 0; c < d_s; ++c) b[c] /= norm;
        }
    }
}

}  // namespace pkge::embeddings
