#include "synth/benchmark_data.hpp"

#include <cmath>

#include "core/rng.hpp"

namespace urbanfield::synth {

namespace {

eval::BenchmarkTask binary_task(const char* name, eval::BenchmarkMode mode, std::size_t n, double positive_rate,
                                double separation, SeededRng rng) {
    eval::BenchmarkTask t;
    t.name = name;
    t.kind = eval::TaskKind::Binary;
    t.mode = mode;
    for (std::size_t i = 0; i < n; ++i) {
        const double label = rng.uniform() < positive_rate ? 1.0 : 0.0;
        t.truth.push_back(label);
        t.scores.push_back(0.4 + separation * label + 0.1 * rng.normal());
    }
    return t;
}

eval::BenchmarkTask continuous_task(const char* name, eval::BenchmarkMode mode, const char* unit, std::size_t n,
                                    double lo, double hi, double noise, SeededRng rng) {
    eval::BenchmarkTask t;
    t.name = name;
    t.kind = eval::TaskKind::Continuous;
    t.mode = mode;
    t.unit = unit;
    for (std::size_t i = 0; i < n; ++i) {
        const double latent = rng.uniform();
        t.truth.push_back(std::round(lo + (hi - lo) * latent));
        // Scores live on a different, nonlinear scale than the truth.
        t.scores.push_back(1.0 / (1.0 + std::exp(-4.0 * (latent - 0.5 + noise * rng.normal()))));
    }
    return t;
}

eval::BenchmarkTask knn_task(const char* name, eval::TaskKind kind, const char* unit, std::size_t n, SeededRng rng) {
    eval::BenchmarkTask t;
    t.name = name;
    t.kind = kind;
    t.mode = eval::BenchmarkMode::Knn;
    t.unit = unit;
    t.dim = 16;
    for (std::size_t i = 0; i < n; ++i) {
        const double latent = rng.uniform();
        for (std::size_t k = 0; k < t.dim; ++k) {
            const double phase = static_cast<double>(k) / static_cast<double>(t.dim);
            t.features.push_back(static_cast<float>(std::cos(3.0 * latent + 6.0 * phase) + 0.3 * rng.normal()));
        }
        t.truth.push_back(kind == eval::TaskKind::Binary ? (latent > 0.6 ? 1.0 : 0.0)
                                                         : std::round(100.0 * (0.5 + latent * latent)) / 10.0);
    }
    return t;
}

}  // namespace

std::vector<eval::BenchmarkTask> synthetic_benchmark_tasks(std::uint64_t seed) {
    const SeededRng base(seed, "synthetic-benchmark");
    std::vector<eval::BenchmarkTask> tasks;
    tasks.push_back(binary_task("building_footprint", eval::BenchmarkMode::ZeroShot, 2500, 0.3, 0.25,
                                base.derive("building_footprint")));
    tasks.push_back(binary_task("building_footprint_calibrated", eval::BenchmarkMode::QuantileCalibrated, 2500, 0.3,
                                0.2, base.derive("building_footprint_calibrated")));
    tasks.push_back(continuous_task("building_age", eval::BenchmarkMode::ZeroShot, "years", 1500, 1900, 2020, 0.15,
                                    base.derive("building_age")));
    tasks.push_back(continuous_task("property_price", eval::BenchmarkMode::QuantileCalibrated, "k$/m2", 1500, 2, 15,
                                    0.1, base.derive("property_price")));
    tasks.push_back(knn_task("crime_rate", eval::TaskKind::Continuous, "crimes/km2/year", 400, base.derive("crime_rate")));
    tasks.push_back(knn_task("dense_district", eval::TaskKind::Binary, "", 400, base.derive("dense_district")));
    auto degenerate = binary_task("single_class", eval::BenchmarkMode::ZeroShot, 50, 0.0, 0.25,
                                  base.derive("single_class"));
    tasks.push_back(std::move(degenerate));
    return tasks;
}

}  // namespace urbanfield::synth
