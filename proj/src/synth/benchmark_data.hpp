#pragma once

#include <cstdint>
#include <vector>

#include "eval/benchmark.hpp"

namespace urbanfield::synth {

// Small seeded benchmark covering every task kind and mode: noisy binary
// footprint scores, monotone-noisy continuous scores, 16-d KNN features driven
// by a latent variable, and one single-class task whose rank metrics are
// undefined.
std::vector<eval::BenchmarkTask> synthetic_benchmark_tasks(std::uint64_t seed);

}  // namespace urbanfield::synth
