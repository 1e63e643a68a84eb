#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <tuple>
#include <vector>

namespace urbanfield::seg {

// Embedding rows keyed by (view_id, level, segment_id); level 0 rows carry
// the whole-image embedding with segment_id -1.
struct EmbeddingKey {
    std::int64_t view_id = 0;
    int level = 0;
    int segment_id = -1;

    friend auto operator<=>(const EmbeddingKey&, const EmbeddingKey&) = default;
};

struct EmbeddingTable {
    std::size_t dim = 0;
    std::map<EmbeddingKey, std::vector<float>> rows;

    void insert(const EmbeddingKey& key, std::vector<float> embedding);
    const std::vector<float>* find(const EmbeddingKey& key) const;
};

// "OC3E": version u32, count u64, dim u16, 6 reserved; rows of
// view_id i64, level u8, 3 reserved, segment_id i32, dim f32. Rows sorted by key.
void write_embeddings(const EmbeddingTable& table, const std::filesystem::path& path);
EmbeddingTable read_embeddings(const std::filesystem::path& path);

}  // namespace urbanfield::seg
