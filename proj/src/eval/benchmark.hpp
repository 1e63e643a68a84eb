#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace urbanfield::eval {

enum class BenchmarkMode { ZeroShot, QuantileCalibrated, Knn };
enum class TaskKind { Binary, Continuous };

const char* mode_name(BenchmarkMode mode);
const char* kind_name(TaskKind kind);
BenchmarkMode parse_mode(const std::string& name);
TaskKind parse_kind(const std::string& name);

struct SplitSpec {
    double train_fraction = 0.3;
    std::size_t draws = 5;
    std::uint64_t seed = 0;
    std::size_t validation_point_cap = 20000;

    void validate() const;
};

// One evaluation task over aligned samples. Zero-shot and calibrated modes
// read `scores`; knn mode reads `features` (row-major, n x dim). Binary truth
// is 0/1.
struct BenchmarkTask {
    std::string name;
    TaskKind kind = TaskKind::Continuous;
    BenchmarkMode mode = BenchmarkMode::ZeroShot;
    std::string unit;
    std::size_t quantiles = 5;
    std::size_t knn_k = 5;
    std::vector<double> scores;
    std::vector<float> features;
    std::size_t dim = 0;
    std::vector<double> truth;

    std::size_t size() const { return truth.size(); }
    void validate() const;
};

struct MetricValue {
    std::optional<double> value;  // empty when undefined in every draw
    std::string unit;
    std::size_t count = 0;        // evaluated samples, summed over draws
    std::size_t draws = 0;        // draws in which the metric was defined
    std::string error;            // first failure message
};

struct TaskReport {
    std::string name;
    TaskKind kind = TaskKind::Continuous;
    BenchmarkMode mode = BenchmarkMode::ZeroShot;
    std::size_t samples = 0;
    std::size_t classes = 0;
    std::map<std::string, MetricValue> metrics;
    std::vector<std::vector<std::size_t>> confusion;  // summed over draws
    std::vector<std::string> notes;
    std::string error;  // set when the task could not be evaluated at all
};

struct MetricReport {
    SplitSpec split;
    std::vector<TaskReport> tasks;
};

// Zero-shot: rank metrics on all samples, plus quantile matching fitted on
// all samples for the value and class metrics. Calibrated: quantile map (or
// threshold for binary tasks) fitted on the train split of each draw,
// evaluated on the rest. KNN: quantile-bin classifier on the train split,
// continuous predictions by bin expectation. Validation sets are capped by
// seeded downsampling. Failures are recorded per metric or task.
MetricReport run_benchmark(const std::vector<BenchmarkTask>& tasks, const SplitSpec& split);
TaskReport run_task(const BenchmarkTask& task, const SplitSpec& split);

std::string report_to_json(const MetricReport& report);
std::string report_to_table(const MetricReport& report);

}  // namespace urbanfield::eval
