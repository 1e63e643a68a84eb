#include "pipeline/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "core/errors.hpp"

namespace urbanfield::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

const char* command_name(Command c) {
    switch (c) {
        case Command::RenderViews: return "render-views";
        case Command::Fuse: return "fuse";
        case Command::Query: return "query";
        case Command::Calibrate: return "calibrate";
        case Command::Knn: return "knn";
        case Command::Evaluate: return "evaluate";
        case Command::Serve: return "serve";
    }
    return "?";
}

std::optional<Command> parse_command(const std::string& name) {
    for (auto c : {Command::RenderViews, Command::Fuse, Command::Query, Command::Calibrate, Command::Knn,
                   Command::Evaluate, Command::Serve}) {
        if (name == command_name(c)) return c;
    }
    return std::nullopt;
}

namespace {

std::string join_problems(const std::vector<std::string>& problems) {
    std::string msg = std::to_string(problems.size()) + (problems.size() == 1 ? " problem: " : " problems: ");
    for (std::size_t i = 0; i < problems.size(); ++i) {
        if (i) msg += "; ";
        msg += problems[i];
    }
    return msg;
}

// Typed field access that records problems instead of throwing.
class Section {
public:
    Section(const json* obj, std::string prefix, std::vector<std::string>& problems,
            std::initializer_list<const char*> known)
        : obj_(obj), prefix_(std::move(prefix)), problems_(problems) {
        if (!obj_) return;
        if (!obj_->is_object()) {
            problems_.push_back(prefix_ + " must be an object");
            obj_ = nullptr;
            return;
        }
        const std::set<std::string> names(known.begin(), known.end());
        for (const auto& [key, value] : obj_->items()) {
            if (!names.count(key)) problems_.push_back("unknown key " + path(key));
        }
    }

    bool has(const char* key) const { return obj_ && obj_->contains(key) && !(*obj_)[key].is_null(); }
    const json* child(const char* key) const { return has(key) ? &(*obj_)[key] : nullptr; }
    std::string path(const std::string& key) const { return prefix_.empty() ? key : prefix_ + "." + key; }

    void number(const char* key, double& out) const {
        if (!has(key)) return;
        const auto& v = (*obj_)[key];
        if (!v.is_number()) {
            problems_.push_back(path(key) + " must be a number");
            return;
        }
        out = v.get<double>();
    }

    template <typename Int>
    void integer(const char* key, Int& out, long long min_value) const {
        if (!has(key)) return;
        const auto& v = (*obj_)[key];
        if (!v.is_number_integer() || (v.is_number_unsigned() ? false : v.get<long long>() < min_value)) {
            problems_.push_back(path(key) + " must be an integer >= " + std::to_string(min_value));
            return;
        }
        out = v.is_number_unsigned() ? static_cast<Int>(v.get<unsigned long long>()) : static_cast<Int>(v.get<long long>());
    }

    void string(const char* key, std::string& out) const {
        if (!has(key)) return;
        const auto& v = (*obj_)[key];
        if (!v.is_string()) {
            problems_.push_back(path(key) + " must be a string");
            return;
        }
        out = v.get<std::string>();
    }

    void boolean(const char* key, bool& out) const {
        if (!has(key)) return;
        const auto& v = (*obj_)[key];
        if (!v.is_boolean()) {
            problems_.push_back(path(key) + " must be true or false");
            return;
        }
        out = v.get<bool>();
    }

    void file(const char* key, std::optional<fs::path>& out, const fs::path& base) const {
        std::string s;
        if (!has(key)) return;
        string(key, s);
        if (s.empty()) {
            problems_.push_back(path(key) + " must be a non-empty path");
            return;
        }
        fs::path p(s);
        out = p.is_absolute() ? p : base / p;
    }

private:
    const json* obj_;
    std::string prefix_;
    std::vector<std::string>& problems_;
};

template <typename Fn>
void check(std::vector<std::string>& problems, Fn&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        problems.push_back(e.what());
    }
}

}  // namespace

PipelineConfig parse_config(const std::string& json_text, const fs::path& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        fail(ErrorCode::Config, std::string("config is not valid JSON: ") + e.what());
    }
    std::vector<std::string> problems;
    PipelineConfig c;
    c.base_dir = base_dir;
    const Section root(&doc, "", problems,
                       {"seed", "provider", "scene", "views", "segments", "fusion", "grid", "query", "ground_truth",
                        "calibrate", "knn", "benchmark", "serve"});
    root.integer("seed", c.seed, 0);
    root.string("provider", c.provider);

    const Section scene(root.child("scene"), "scene", problems, {"mesh", "points", "labels", "bounds", "geo_origin"});
    scene.file("mesh", c.mesh, base_dir);
    scene.file("points", c.points, base_dir);
    scene.file("labels", c.labels, base_dir);
    if (const auto* b = scene.child("bounds")) {
        if (!b->is_array() || b->size() != 4 || !std::all_of(b->begin(), b->end(), [](const json& v) { return v.is_number(); })) {
            problems.push_back("scene.bounds must be [xmin, ymin, xmax, ymax]");
        } else {
            c.bounds = Bounds2{{(*b)[0].get<double>(), (*b)[1].get<double>()}, {(*b)[2].get<double>(), (*b)[3].get<double>()}};
            if (c.bounds->empty()) problems.push_back("scene.bounds is empty");
        }
    }
    if (const auto* g = scene.child("geo_origin")) {
        const Section geo(g, "scene.geo_origin", problems, {"lat", "lon"});
        double lat = NAN, lon = NAN;
        geo.number("lat", lat);
        geo.number("lon", lon);
        if (!(lat >= -90.0 && lat <= 90.0) || !(lon >= -180.0 && lon <= 180.0)) {
            problems.push_back("scene.geo_origin needs lat in [-90, 90] and lon in [-180, 180]");
        } else {
            c.geo = GeoTransform::about(lat, lon);
        }
    }

    const Section views(root.child("views"), "views", problems,
                        {"dir", "grid_spacing", "xy_jitter", "height_min", "height_max", "min_closest_depth",
                         "max_infinite_fraction", "width", "height", "fov_deg"});
    views.file("dir", c.views_dir, base_dir);
    views.number("grid_spacing", c.sampling.grid_spacing);
    views.number("xy_jitter", c.sampling.xy_jitter);
    views.number("height_min", c.sampling.height_min);
    views.number("height_max", c.sampling.height_max);
    views.number("min_closest_depth", c.sampling.min_closest_depth);
    views.number("max_infinite_fraction", c.sampling.max_infinite_fraction);
    views.integer("width", c.image_width, 8);
    views.integer("height", c.image_height, 8);
    views.number("fov_deg", c.fov_deg);
    check(problems, [&] { c.sampling.validate(); });
    if (!(c.fov_deg > 0.0 && c.fov_deg < 180.0)) problems.push_back("views.fov_deg must be in (0, 180)");

    const Section segments(root.child("segments"), "segments", problems,
                           {"masks", "min_area_frac", "outline_width", "background_opacity", "crop_padding",
                            "outline_color"});
    segments.file("masks", c.masks, base_dir);
    segments.number("min_area_frac", c.min_area_frac);
    if (!(c.min_area_frac >= 0.0 && c.min_area_frac <= 1.0)) problems.push_back("segments.min_area_frac must be in [0, 1]");
    segments.integer("outline_width", c.highlight.outline_width, 0);
    segments.number("background_opacity", c.highlight.background_opacity);
    segments.number("crop_padding", c.highlight.crop_padding);
    if (const auto* oc = segments.child("outline_color")) {
        if (!oc->is_array() || oc->size() != 3 ||
            !std::all_of(oc->begin(), oc->end(), [](const json& v) { return v.is_number_integer() && v.get<int>() >= 0 && v.get<int>() <= 255; })) {
            problems.push_back("segments.outline_color must be [r, g, b] with 0..255 entries");
        } else {
            for (int i = 0; i < 3; ++i) c.highlight.outline_color[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>((*oc)[static_cast<std::size_t>(i)].get<int>());
        }
    }
    check(problems, [&] { c.highlight.validate(); });

    const Section fusion(root.child("fusion"), "fusion", problems,
                         {"store", "embeddings", "precomputed_embeddings", "depth_tolerance_abs", "depth_tolerance_rel",
                          "chunk_size"});
    fusion.file("store", c.store, base_dir);
    fusion.file("embeddings", c.embeddings, base_dir);
    fusion.file("precomputed_embeddings", c.precomputed_embeddings, base_dir);
    fusion.number("depth_tolerance_abs", c.visibility.depth_tolerance_abs);
    fusion.number("depth_tolerance_rel", c.visibility.depth_tolerance_rel);
    fusion.number("chunk_size", c.chunk_size);
    check(problems, [&] { c.visibility.validate(); });
    if (!(c.chunk_size > 0.0)) problems.push_back("fusion.chunk_size must be positive");

    const Section grid(root.child("grid"), "grid", problems, {"cell_size"});
    grid.number("cell_size", c.cell_size);
    if (!(c.cell_size > 0.0)) problems.push_back("grid.cell_size must be positive");

    if (const auto* q = root.child("query")) {
        check(problems, [&] {
            try {
                c.query = query::parse_query_spec(q->dump());
            } catch (const Error& e) {
                fail(ErrorCode::Config, std::string("query: ") + e.what());
            }
        });
    }

    const Section gt(root.child("ground_truth"), "ground_truth", problems, {"points", "districts", "footprints"});
    gt.file("points", c.gt_points, base_dir);
    gt.file("districts", c.gt_districts, base_dir);
    gt.file("footprints", c.gt_footprints, base_dir);

    const Section cal(root.child("calibrate"), "calibrate", problems, {"quantiles"});
    cal.integer("quantiles", c.quantiles, 1);
    const Section knn(root.child("knn"), "knn", problems, {"k", "level"});
    knn.integer("k", c.knn_k, 1);
    knn.integer("level", c.knn_level, 0);
    if (c.knn_level > 3) problems.push_back("knn.level must be 0..3");

    const Section bench(root.child("benchmark"), "benchmark", problems,
                        {"train_fraction", "draws", "validation_point_cap", "synthetic", "tasks"});
    bench.number("train_fraction", c.split.train_fraction);
    bench.integer("draws", c.split.draws, 1);
    bench.integer("validation_point_cap", c.split.validation_point_cap, 1);
    bench.boolean("synthetic", c.synthetic_benchmark);
    check(problems, [&] {
        try {
            c.split.validate();
        } catch (const Error& e) {
            fail(ErrorCode::Config, std::string("benchmark: ") + e.what());
        }
    });
    if (const auto* tasks = bench.child("tasks")) {
        if (!tasks->is_array()) {
            problems.push_back("benchmark.tasks must be an array");
        } else {
            for (std::size_t i = 0; i < tasks->size(); ++i) {
                const std::string prefix = "benchmark.tasks[" + std::to_string(i) + "]";
                const Section t(&(*tasks)[i], prefix, problems,
                                {"name", "source", "kind", "mode", "table", "unit", "quantiles", "k"});
                TaskSource ts;
                t.string("name", ts.name);
                if (ts.name.empty()) problems.push_back(prefix + ".name is required");
                t.string("source", ts.source);
                if (ts.source != "table" && ts.source != "footprints" && ts.source != "point_labels") {
                    problems.push_back(prefix + ".source must be table, footprints or point_labels");
                }
                std::string kind = ts.source == "footprints" ? "binary" : "continuous", mode = "zero_shot";
                t.string("kind", kind);
                t.string("mode", mode);
                check(problems, [&] {
                    try {
                        ts.kind = eval::parse_kind(kind);
                        ts.mode = eval::parse_mode(mode);
                    } catch (const Error& e) {
                        fail(ErrorCode::Config, prefix + ": " + e.what());
                    }
                });
                std::optional<fs::path> table;
                t.file("table", table, base_dir);
                if (table) ts.table = *table;
                if (ts.source == "table" && !table) problems.push_back(prefix + ".table is required for table tasks");
                t.string("unit", ts.unit);
                t.integer("quantiles", ts.quantiles, 1);
                t.integer("k", ts.k, 1);
                c.tasks.push_back(std::move(ts));
            }
        }
    }

    const Section serve(root.child("serve"), "serve", problems, {"listen"});
    serve.string("listen", c.listen);

    if (!problems.empty()) fail(ErrorCode::Config, "config: " + join_problems(problems));
    return c;
}

PipelineConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::Config, "cannot open config " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str(), path.parent_path());
}

std::vector<std::string> config_problems(const PipelineConfig& c, Command command) {
    std::vector<std::string> problems;
    const auto need_file = [&](const std::optional<fs::path>& p, const char* key) {
        if (!p) {
            problems.push_back(std::string(key) + " is required for " + command_name(command));
        } else if (!fs::exists(*p)) {
            problems.push_back(std::string(key) + " does not exist: " + p->string());
        }
    };
    const auto need_value = [&](bool present, const char* key) {
        if (!present) problems.push_back(std::string(key) + " is required for " + command_name(command));
    };
    const bool store_input = command == Command::Query || command == Command::Calibrate || command == Command::Knn ||
                             command == Command::Serve;
    if (command != Command::Knn && command != Command::Evaluate && command != Command::RenderViews) {
        if (c.provider != "stub" && c.provider.rfind("cmd:", 0) != 0) {
            problems.push_back("provider must be 'stub' or 'cmd:<argv>'");
        }
    }
    switch (command) {
        case Command::RenderViews:
            need_file(c.mesh, "scene.mesh");
            if (c.labels) need_file(c.labels, "scene.labels");
            need_value(c.views_dir.has_value(), "views.dir");
            break;
        case Command::Fuse:
            need_file(c.points, "scene.points");
            need_value(c.views_dir.has_value(), "views.dir");
            if (c.views_dir) {
                if (!fs::exists(c.views_manifest())) problems.push_back("views manifest does not exist: " + c.views_manifest().string());
                if (!fs::exists(c.masks_path())) problems.push_back("segment masks do not exist: " + c.masks_path().string());
            }
            if (c.precomputed_embeddings) need_file(c.precomputed_embeddings, "fusion.precomputed_embeddings");
            need_value(c.store.has_value(), "fusion.store");
            break;
        case Command::Query:
        case Command::Calibrate:
        case Command::Knn:
        case Command::Serve:
            break;
        case Command::Evaluate:
            if (!c.synthetic_benchmark && c.tasks.empty()) {
                problems.push_back("benchmark.tasks or benchmark.synthetic is required for evaluate");
            }
            for (const auto& t : c.tasks) {
                if (t.source == "table") {
                    if (!fs::exists(t.table)) problems.push_back("task '" + t.name + "' table does not exist: " + t.table.string());
                } else {
                    if (!c.store || !fs::exists(*c.store)) problems.push_back("task '" + t.name + "' needs an existing fusion.store");
                    if (!c.query) problems.push_back("task '" + t.name + "' needs a query");
                    if (t.source == "footprints") need_file(c.gt_footprints, "ground_truth.footprints");
                    if (t.source == "point_labels") need_file(c.gt_points, "ground_truth.points");
                    if (!c.geo) problems.push_back("task '" + t.name + "' needs scene.geo_origin");
                }
            }
            break;
    }
    if (store_input) need_file(c.store, "fusion.store");
    if (command == Command::Query || command == Command::Calibrate) need_value(c.query.has_value(), "query");
    if (command == Command::Calibrate) {
        need_file(c.gt_points, "ground_truth.points");
        need_value(c.geo.has_value(), "scene.geo_origin");
    }
    if (command == Command::Knn) {
        need_file(c.gt_districts, "ground_truth.districts");
        need_value(c.geo.has_value(), "scene.geo_origin");
    }
    return problems;
}

void validate_config(const PipelineConfig& config, Command command) {
    const auto problems = config_problems(config, command);
    if (!problems.empty()) fail(ErrorCode::Config, std::string(command_name(command)) + " config: " + join_problems(problems));
}

}  // namespace urbanfield::pipeline
