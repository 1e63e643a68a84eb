#include "query/query.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "core/parallel.hpp"

namespace urbanfield::query {

using nlohmann::json;

void QuerySpec::validate() const {
    if (positive.empty()) invalid_argument("positive prompt must be non-empty");
    for (const auto& n : negatives) {
        if (n.empty()) invalid_argument("negative prompts must be non-empty");
    }
}

QuerySpec parse_query_spec(const std::string& json_text) {
    const auto j = json::parse(json_text, nullptr, false);
    if (j.is_discarded() || !j.is_object()) invalid_argument("query spec is not a JSON object");
    QuerySpec spec;
    if (!j.contains("positive") || !j["positive"].is_string()) {
        invalid_argument("query spec needs a string \"positive\"");
    }
    spec.positive = j["positive"].get<std::string>();
    if (j.contains("negatives")) {
        if (!j["negatives"].is_array()) invalid_argument("\"negatives\" must be an array of strings");
        for (const auto& n : j["negatives"]) {
            if (!n.is_string()) invalid_argument("\"negatives\" must be an array of strings");
            spec.negatives.push_back(n.get<std::string>());
        }
    }
    if (j.contains("level_mode")) {
        const auto& m = j["level_mode"];
        if (m.is_string() && m.get<std::string>() == "max") {
            spec.level_mode = LevelMode::max_over_levels();
        } else if (m.is_number_unsigned() && m.get<std::size_t>() <= 3) {
            spec.level_mode = LevelMode::only(m.get<std::size_t>());
        } else {
            invalid_argument("\"level_mode\" must be \"max\" or a level 0..3");
        }
    }
    spec.validate();
    return spec;
}

std::string query_spec_to_json(const QuerySpec& spec) {
    json j{{"positive", spec.positive}, {"negatives", spec.negatives}};
    if (spec.level_mode.is_max()) {
        j["level_mode"] = "max";
    } else {
        j["level_mode"] = *spec.level_mode.single;
    }
    return j.dump();
}

Similarity raw_similarity(const FeatureStore& store, std::size_t point, std::span<const float> phi,
                          const LevelMode& mode) {
    if (point >= store.size()) invalid_argument("point index " + std::to_string(point) + " out of range");
    if (phi.size() != store.dim()) invalid_argument("query embedding dimension does not match the store");
    std::size_t first = 0, last = store.levels();
    if (mode.single) {
        if (*mode.single >= store.levels()) invalid_argument("level out of range");
        first = *mode.single;
        last = first + 1;
    }
    Similarity best;
    for (std::size_t l = first; l < last; ++l) {
        if (store.obs_count(l, point) == 0) continue;
        const auto f = store.feature(l, point);
        double dot = 0.0, sq = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k) {
            dot += static_cast<double>(phi[k]) * f[k];
            sq += static_cast<double>(f[k]) * f[k];
        }
        if (!(sq > 0.0)) continue;
        const double s = std::exp(dot / std::sqrt(sq));
        if (!best.observed || s > best.value) best.value = s;
        best.observed = true;
    }
    return best;
}

double normalized_score(double positive, std::span<const double> negatives) {
    if (!(positive > 0.0) || !std::isfinite(positive)) invalid_argument("similarity must be positive");
    std::vector<double> sorted(negatives.begin(), negatives.end());
    std::sort(sorted.begin(), sorted.end());
    double sum = 0.0;
    for (double n : sorted) {
        if (!(n > 0.0) || !std::isfinite(n)) invalid_argument("similarity must be positive");
        sum += n;
    }
    return positive / (positive + sum);
}

std::vector<float> PromptCache::embed(seg::Provider& provider, const std::string& prompt) {
    {
        std::shared_lock lock(mutex_);
        if (auto it = cache_.find(prompt); it != cache_.end()) return it->second;
    }
    auto v = provider.embed_text(prompt);
    std::unique_lock lock(mutex_);
    return cache_.emplace(prompt, std::move(v)).first->second;
}

QueryEmbeddings embed_query(const QuerySpec& spec, seg::Provider& provider, PromptCache* cache) {
    spec.validate();
    const auto embed = [&](const std::string& p) {
        return cache ? cache->embed(provider, p) : provider.embed_text(p);
    };
    QueryEmbeddings e;
    e.positive = embed(spec.positive);
    for (const auto& n : spec.negatives) e.negatives.push_back(embed(n));
    return e;
}

ScoreField score_field(const FeatureStore& store, const QueryEmbeddings& embeddings,
                       const LevelMode& mode) {
    ScoreField field;
    field.values.resize(store.size());
    field.observed.resize(store.size());
    constexpr std::size_t kBlock = 4096;
    parallel_for((store.size() + kBlock - 1) / kBlock, [&](std::size_t b) {
        std::vector<double> neg(embeddings.negatives.size());
        const std::size_t end = std::min(store.size(), (b + 1) * kBlock);
        for (std::size_t p = b * kBlock; p < end; ++p) {
            const auto q = raw_similarity(store, p, embeddings.positive, mode);
            for (std::size_t i = 0; i < neg.size(); ++i) {
                neg[i] = raw_similarity(store, p, embeddings.negatives[i], mode).value;
            }
            field.values[p] = normalized_score(q.value, neg);
            field.observed[p] = q.observed ? 1 : 0;
        }
    });
    return field;
}

ScoreField score_field(const FeatureStore& store, const QuerySpec& spec, seg::Provider& provider,
                       PromptCache* cache) {
    return score_field(store, embed_query(spec, provider, cache), spec.level_mode);
}

std::vector<std::size_t> rank_points(std::span<const double> scores) {
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
    return order;
}

}  // namespace urbanfield::query
