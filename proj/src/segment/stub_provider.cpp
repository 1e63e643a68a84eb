#include <algorithm>
#include <cctype>
#include <cmath>
#include <string>
#include <utility>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "segment/provider.hpp"

namespace urbanfield::seg {
namespace {

struct LexiconEntry {
    std::string_view word;
    std::array<std::uint8_t, 3> rgb;
};

constexpr std::array<LexiconEntry, 13> kLexicon{{
    {"red", {220, 40, 40}},
    {"green", {40, 160, 60}},
    {"blue", {40, 80, 220}},
    {"yellow", {230, 210, 40}},
    {"orange", {240, 140, 30}},
    {"purple", {140, 60, 180}},
    {"pink", {240, 150, 190}},
    {"brown", {130, 90, 50}},
    {"gray", {128, 128, 128}},
    {"grey", {128, 128, 128}},
    {"white", {245, 245, 245}},
    {"black", {20, 20, 20}},
    {"cyan", {40, 200, 210}},
}};

std::vector<float> color_features(const RgbImage& image) {
    std::array<double, StubProvider::kDim> acc{};
    const std::size_t n = image.pixel_count();
    for (std::size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) {
            const std::uint8_t v = image.pixels[3 * i + c];
            acc[c] += v / 255.0;
            acc[3 + 4 * c + v / 64] += 1.0;
        }
    }
    std::vector<float> out(StubProvider::kDim);
    for (std::size_t k = 0; k < 15; ++k) out[k] = static_cast<float>(acc[k] / static_cast<double>(n));
    out[15] = StubProvider::kBias;
    normalize_in_place(out);
    return out;
}

std::string lowercase(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

}  // namespace

void normalize_in_place(std::vector<float>& v) {
    double sq = 0.0;
    for (float x : v) sq += static_cast<double>(x) * x;
    if (!(sq > 0.0) || !std::isfinite(sq)) invalid_argument("cannot normalise a zero or non-finite vector");
    const double inv = 1.0 / std::sqrt(sq);
    for (auto& x : v) x = static_cast<float>(x * inv);
}

const std::array<std::uint8_t, 3>* StubProvider::lexicon_color(std::string_view word) {
    for (const auto& e : kLexicon) {
        if (e.word == word) return &e.rgb;
    }
    return nullptr;
}

std::vector<float> StubProvider::embed_image(const RgbImage& image) {
    if (image.pixel_count() == 0) invalid_argument("cannot embed an empty image");
    return color_features(image);
}

std::vector<float> StubProvider::embed_text(std::string_view text) {
    const std::string lower = lowercase(text);
    std::size_t pos = 0;
    while (pos < lower.size()) {
        while (pos < lower.size() && !std::isalpha(static_cast<unsigned char>(lower[pos]))) ++pos;
        std::size_t end = pos;
        while (end < lower.size() && std::isalpha(static_cast<unsigned char>(lower[end]))) ++end;
        if (end > pos) {
            if (const auto* rgb = lexicon_color(std::string_view(lower).substr(pos, end - pos))) {
                return color_features(RgbImage(1, 1, *rgb));
            }
        }
        pos = end;
    }
    SeededRng rng(fnv1a64(lower), "stub-text");
    std::vector<float> v(kDim);
    for (auto& x : v) x = static_cast<float>(rng.normal());
    normalize_in_place(v);
    return v;
}

double StubProvider::score_image(const RgbImage& image, std::string_view prompt) {
    const auto a = embed_image(image);
    const auto b = embed_text(prompt);
    double dot = 0.0;
    for (std::size_t i = 0; i < kDim; ++i) dot += static_cast<double>(a[i]) * b[i];
    return std::clamp(5.0 * (1.0 + dot), 0.0, 10.0);
}

}  // namespace urbanfield::seg
