#include "pkge/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

#include "pkge/errors.hpp"

namespace pkge::checkpoint {

namespace {

constexpr char kMagic[4] = {'P', 'K', 'G', 'E'};
constexpr std::uint32_t kVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

struct Fnv1a {
    std::uint64_t hash = 14695981039346656037ull;
    void update(const void* data, std::size_t n) {
        const auto* bytes = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            hash ^= bytes[i];
            hash *= 1099511628211ull;
        }
    }
};

void append(std::vector<char>& buf, const void* data, std::size_t n) {
    const char* p = static_cast<const char*>(data);
    buf.insert(buf.end(), p, p + n);
}

}  // namespace

void save(const std::string& path, const embeddings::EmbeddingTable& table,
          const procrustes::RelationSet& relations) {
    std::vector<char> payload;
    append(payload, kMagic, 4);
    append(payload, &kVersion, sizeof(kVersion));
    const std::uint64_t header[4] = {table.n_entities, table.d, table.d_s, relations.m};
    append(payload, header, sizeof(header));
    append(payload, table.data.data(), table.data.size() * sizeof(double));
    for (const auto& r : relations.matrices) {
        append(payload, r.data.data(), r.data.size() * sizeof(double));
    }

    Fnv1a fnv;
    fnv.update(payload.data(), payload.size());

    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open checkpoint for writing: " + path);
    }
    out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
    out.write(reinterpret_cast<const char*>(&fnv.hash), sizeof(fnv.hash));
    if (!out) {
        throw IoError("write failure on checkpoint: " + path);
    }
}

Checkpoint load(const std::string& path) {
    std::ifstream in(path, std::ios::binary | std::ios::ate);
    if (!in) {
        throw IoError("cannot open checkpoint: " + path);
    }
    const std::streamsize size = in.tellg();
    in.seekg(0);
    constexpr std::size_t kHeaderSize = 4 + sizeof(std::uint32_t) + 4 * sizeof(std::uint64_t);
    if (size < static_cast<std::streamsize>(kHeaderSize + sizeof(std::uint64_t))) {
        throw CheckpointError("corrupt checkpoint: file too short");
    }
    std::vector<char> bytes(static_cast<std::size_t>(size));
    if (!in.read(bytes.data(), size)) {
        throw IoError("read failure on checkpoint: " + path);
    }

    const std::size_t payload_size = bytes.size() - sizeof(std::uint64_t);
    std::uint64_t stored_hash;
    std::memcpy(&stored_hash, bytes.data() + payload_size, sizeof(stored_hash));
    Fnv1a fnv;
    fnv.update(bytes.data(), payload_size);
    if (fnv.hash != stored_hash) {
        throw CheckpointError("corrupt checkpoint: checksum mismatch");
    }

    if (std::memcmp(bytes.data(), kMagic, 4) != 0) {
        throw CheckpointError("corrupt checkpoint: bad magic");
    }
    std::uint32_t version;
    std::memcpy(&version, bytes.data() + 4, sizeof(version));
    if (version != kVersion) {
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    }
    std::uint64_t header[4];
    std::memcpy(header, bytes.data() + 8, sizeof(header));
    const std::uint64_t n_entities = header[0];
    const std::uint64_t d = header[1];
    const std::uint64_t d_s = header[2];
    const std::uint64_t m = header[3];
    if (d_s == 0 || d % d_s != 0 || n_entities == 0) {
        throw CheckpointError("corrupt checkpoint: inconsistent dimensions");
    }
    const std::uint64_t subspaces = d / d_s;
    const std::uint64_t expected = kHeaderSize + (n_entities * d + m * subspaces * d_s * d_s) * sizeof(double);
    if (payload_size != expected) {
        throw CheckpointError("corrupt checkpoint: payload length mismatch");
    }

    Checkpoint ckpt;
    ckpt.table = embeddings::EmbeddingTable(n_entities, d, d_s);
    std::size_t offset = kHeaderSize;
    std::memcpy(ckpt.table.data.data(), bytes.data() + offset,
                ckpt.table.data.size() * sizeof(double));
    offset += ckpt.table.data.size() * sizeof(double);
    ckpt.relations = procrustes::RelationSet(m, subspaces, d_s);
    for (auto& r : ckpt.relations.matrices) {
        std::memcpy(r.data.data(), bytes.data() + offset, r.data.size() * sizeof(double));
        offset += r.data.size() * sizeof(double);
    }
    return ckpt;
}

}  // namespace pkge::checkpoint
