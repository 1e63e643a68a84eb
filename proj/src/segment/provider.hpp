#pragma once

#include <chrono>
#include <memory>
#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "core/image.hpp"

namespace urbanfield::seg {

enum class ProviderKind { Stub, External };

// Embedding/score source. Embeddings are unit-norm `dim()`-vectors; scores lie in [0, 10].
class Provider {
public:
    virtual ~Provider() = default;

    virtual ProviderKind kind() const = 0;
    virtual std::size_t dim() const = 0;
    virtual std::vector<float> embed_text(std::string_view text) = 0;
    virtual std::vector<float> embed_image(const RgbImage& image) = 0;
    virtual double score_image(const RgbImage& image, std::string_view prompt) = 0;
};

// Pure, deterministic, 16-dimensional. Image features are the mean RGB (3),
// per-channel 4-bin histograms (12) and a constant 0.25 bias, unit-normalised.
// Text: a known color word (first matching token) maps to the embedding of a
// uniform image of that color; anything else to a unit vector drawn from a
// stream seeded by FNV-1a of the lowercased prompt.
class StubProvider final : public Provider {
public:
    static constexpr std::size_t kDim = 16;
    static constexpr float kBias = 0.25f;

    ProviderKind kind() const override { return ProviderKind::Stub; }
    std::size_t dim() const override { return kDim; }
    std::vector<float> embed_text(std::string_view text) override;
    std::vector<float> embed_image(const RgbImage& image) override;
    // 10 * (1 + cos(image, prompt)) / 2.
    double score_image(const RgbImage& image, std::string_view prompt) override;

    // Lexicon color for a lowercase word, if any.
    static const std::array<std::uint8_t, 3>* lexicon_color(std::string_view word);
};

struct ProcessOptions {
    std::chrono::milliseconds timeout{60000};
};

// Child process speaking line-delimited JSON on stdin/stdout. Requests are
// serialised; at most one is outstanding. Images travel as PNG paths in a
// private temporary directory.
class ProcessProvider final : public Provider {
public:
    ProcessProvider(std::vector<std::string> argv, ProcessOptions options = {});
    ~ProcessProvider() override;
    ProcessProvider(const ProcessProvider&) = delete;
    ProcessProvider& operator=(const ProcessProvider&) = delete;

    ProviderKind kind() const override { return ProviderKind::External; }
    std::size_t dim() const override { return dim_; }
    std::vector<float> embed_text(std::string_view text) override;
    std::vector<float> embed_image(const RgbImage& image) override;
    double score_image(const RgbImage& image, std::string_view prompt) override;

private:
    std::string request(const std::string& line);
    std::vector<float> parse_embedding(const std::string& reply);
    std::string stage_image(const RgbImage& image);
    void spawn();
    void terminate();

    std::vector<std::string> argv_;
    ProcessOptions options_;
    std::mutex mutex_;
    int pid_ = -1;
    int to_child_ = -1;
    int from_child_ = -1;
    std::string pending_;
    std::size_t dim_ = 0;
    std::string temp_dir_;
    std::size_t staged_ = 0;
};

// "stub" or "cmd:<argv>" with whitespace-separated arguments.
std::unique_ptr<Provider> open_provider(const std::string& spec, ProcessOptions options = {});

// Scales to unit L2 norm. Throws on a zero vector.
void normalize_in_place(std::vector<float>& v);

}  // namespace urbanfield::seg
