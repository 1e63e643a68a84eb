#include "segment/embeddings.hpp"

#include "core/bytes.hpp"
#include "core/store_io.hpp"

namespace urbanfield::seg {

void EmbeddingTable::insert(const EmbeddingKey& key, std::vector<float> embedding) {
    if (dim == 0) dim = embedding.size();
    if (embedding.size() != dim) {
        invalid_argument("embedding dimension " + std::to_string(embedding.size()) +
                         " does not match table dimension " + std::to_string(dim));
    }
    rows[key] = std::move(embedding);
}

const std::vector<float>* EmbeddingTable::find(const EmbeddingKey& key) const {
    const auto it = rows.find(key);
    return it == rows.end() ? nullptr : &it->second;
}

void write_embeddings(const EmbeddingTable& table, const std::filesystem::path& path) {
    ByteWriter w;
    w.magic("OC3E");
    w.put(kContainerVersion);
    w.put(static_cast<std::uint64_t>(table.rows.size()));
    w.put(static_cast<std::uint16_t>(table.dim));
    w.zeros(6);
    for (const auto& [key, v] : table.rows) {
        w.put(key.view_id);
        w.put(static_cast<std::uint8_t>(key.level));
        w.zeros(3);
        w.put(static_cast<std::int32_t>(key.segment_id));
        w.put_span(std::span<const float>(v));
    }
    w.save(path);
}

EmbeddingTable read_embeddings(const std::filesystem::path& path) {
    auto r = ByteReader::load(path);
    r.expect_magic("OC3E");
    r.expect_version(kContainerVersion);
    const auto count = r.get<std::uint64_t>();
    const auto dim = r.get<std::uint16_t>();
    r.skip(6);
    if (dim == 0 && count > 0) r.error("zero embedding dimension");
    EmbeddingTable table;
    table.dim = dim;
    for (std::uint64_t i = 0; i < count; ++i) {
        EmbeddingKey key;
        key.view_id = r.get<std::int64_t>();
        key.level = r.get<std::uint8_t>();
        r.skip(3);
        key.segment_id = r.get<std::int32_t>();
        std::vector<float> v(dim);
        r.get_span(std::span<float>(v), "embedding row");
        table.rows.emplace(key, std::move(v));
    }
    r.expect_end();
    return table;
}

}  // namespace urbanfield::seg
