#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace urbanfield {

// 64-bit FNV-1a. Stable across platforms; also used for stub text embeddings.
std::uint64_t fnv1a64(std::string_view text) noexcept;

std::uint64_t splitmix64(std::uint64_t x) noexcept;

// Deterministic random stream identified by (seed, label). Distribution
// mappings are implemented here rather than with <random> distributions,
// whose output is implementation-defined.
class SeededRng {
public:
    SeededRng(std::uint64_t seed, std::string label);

    std::uint64_t seed() const { return seed_; }
    const std::string& label() const { return label_; }

    // Independent child stream; existing streams are unaffected.
    SeededRng derive(std::string_view sublabel) const;

    std::uint64_t next_u64() { return engine_(); }
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    // Uniform integer on [0, n). n must be positive.
    std::uint64_t uniform_index(std::uint64_t n);
    double normal();

private:
    std::uint64_t seed_;
    std::string label_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace urbanfield
