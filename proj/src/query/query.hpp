#pragma once

#include <map>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "core/types.hpp"
#include "segment/provider.hpp"

namespace urbanfield::query {

// Max over all stored levels, or a single level.
struct LevelMode {
    std::optional<std::size_t> single;

    static LevelMode max_over_levels() { return {}; }
    static LevelMode only(std::size_t level) { return {level}; }
    bool is_max() const { return !single.has_value(); }
};

struct QuerySpec {
    std::string positive;
    std::vector<std::string> negatives;
    LevelMode level_mode;

    void validate() const;
};

// Parses {"positive": "...", "negatives": [...], "level_mode": "max" | 0..3}.
QuerySpec parse_query_spec(const std::string& json_text);
std::string query_spec_to_json(const QuerySpec& spec);

struct Similarity {
    double value = 1.0;    // max over observed levels of exp(cosine)
    bool observed = false;
};

// exp of the cosine between `phi` (unit) and the renormalised stored mean,
// maximised over the observed levels selected by `mode`.
Similarity raw_similarity(const FeatureStore& store, std::size_t point, std::span<const float> phi,
                          const LevelMode& mode);

// s_q / (s_q + sum of s_n); the negatives are summed in ascending order so the
// result does not depend on their order.
double normalized_score(double positive, std::span<const double> negatives);

struct QueryEmbeddings {
    std::vector<float> positive;
    std::vector<std::vector<float>> negatives;
};

// In-memory prompt cache shared across requests; reads are concurrent.
class PromptCache {
public:
    std::vector<float> embed(seg::Provider& provider, const std::string& prompt);

private:
    std::shared_mutex mutex_;
    std::map<std::string, std::vector<float>> cache_;
};

QueryEmbeddings embed_query(const QuerySpec& spec, seg::Provider& provider, PromptCache* cache = nullptr);

ScoreField score_field(const FeatureStore& store, const QueryEmbeddings& embeddings,
                       const LevelMode& mode);
ScoreField score_field(const FeatureStore& store, const QuerySpec& spec, seg::Provider& provider,
                       PromptCache* cache = nullptr);

// Point indices ordered by descending score; ties keep ascending index.
std::vector<std::size_t> rank_points(std::span<const double> scores);

}  // namespace urbanfield::query
