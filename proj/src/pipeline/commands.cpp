#include "pipeline/commands.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "analytics/calibration.hpp"
#include "analytics/ground_truth.hpp"
#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/store_io.hpp"
#include "eval/metrics.hpp"
#include "synth/benchmark_data.hpp"
#include "view/view_io.hpp"

namespace urbanfield::pipeline {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out << text;
    if (!out) fail(ErrorCode::Io, "write failed: " + path.string());
}

view::CameraIntrinsics intrinsics_of(const PipelineConfig& c) {
    return view::CameraIntrinsics::from_fov(c.image_width, c.image_height, c.fov_deg);
}

GridResult config_grid(const PipelineConfig& c, const FeatureStore& store) {
    auto provider = seg::open_provider(c.provider);
    return query_grid(store, *c.query, *provider, c.cell_size);
}

// Scores at labelled positions; labels outside the raster are dropped.
struct LabelSamples {
    std::vector<double> scores;
    std::vector<double> truth;
    std::size_t dropped = 0;
    std::string unit;
};

LabelSamples sample_labels(const analytics::GridRaster& grid, const std::vector<analytics::PointLabel>& labels) {
    LabelSamples s;
    for (const auto& l : labels) {
        const auto v = sample_grid(grid, l.position);
        if (!v || !std::isfinite(*v)) {
            ++s.dropped;
            continue;
        }
        s.scores.push_back(*v);
        s.truth.push_back(l.value);
        if (s.unit.empty()) s.unit = l.unit;
    }
    return s;
}

std::size_t column(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return header.size();
}

double parse_number(const std::string& s, const fs::path& path, std::size_t row) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail(ErrorCode::Format, path.string() + " row " + std::to_string(row) + ": not a number: '" + s + "'");
}

// CSV with a "truth" column plus "score" and/or "f0".."f{d-1}".
eval::BenchmarkTask read_table_task(const TaskSource& source) {
    const auto rows = analytics::parse_csv(read_text(source.table));
    if (rows.empty()) fail(ErrorCode::Format, source.table.string() + " is empty");
    const auto& header = rows[0];
    const auto truth_col = column(header, "truth");
    if (truth_col == header.size()) fail(ErrorCode::Format, source.table.string() + " has no truth column");
    const auto score_col = column(header, "score");
    std::vector<std::size_t> feature_cols;
    while (true) {
        const auto c = column(header, "f" + std::to_string(feature_cols.size()));
        if (c == header.size()) break;
        feature_cols.push_back(c);
    }
    eval::BenchmarkTask t;
    t.name = source.name;
    t.kind = source.kind;
    t.mode = source.mode;
    t.unit = source.unit;
    t.quantiles = source.quantiles;
    t.knn_k = source.k;
    t.dim = feature_cols.size();
    const bool want_scores = source.mode != eval::BenchmarkMode::Knn;
    if (want_scores && score_col == header.size()) {
        fail(ErrorCode::Format, source.table.string() + " needs a score column for " + eval::mode_name(source.mode));
    }
    if (!want_scores && feature_cols.empty()) {
        fail(ErrorCode::Format, source.table.string() + " needs f0.. feature columns for knn");
    }
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() != header.size()) {
            fail(ErrorCode::Format, source.table.string() + " row " + std::to_string(r) + " has " +
                                        std::to_string(row.size()) + " fields, expected " + std::to_string(header.size()));
        }
        t.truth.push_back(parse_number(row[truth_col], source.table, r));
        if (want_scores) t.scores.push_back(parse_number(row[score_col], source.table, r));
        if (!want_scores) {
            for (auto c : feature_cols) t.features.push_back(static_cast<float>(parse_number(row[c], source.table, r)));
        }
    }
    return t;
}

}  // namespace

std::optional<double> sample_grid(const analytics::GridRaster& grid, const Vec2& p) {
    int col = 0, row = 0;
    if (!grid.locate(p, col, row)) return std::nullopt;
    return grid.values[grid.index(col, row)];
}

json grid_to_json(const GridResult& grid, bool include_scores) {
    const auto& g = grid.interpolated;
    json values = json::array(), missing = json::array();
    for (std::size_t i = 0; i < g.cell_count(); ++i) {
        values.push_back(number_or_null(g.values[i]));
        missing.push_back(g.observed[i] ? 0 : 1);
    }
    json doc{{"origin", {g.origin.x, g.origin.y}},
             {"cell_size", g.cell_size},
             {"width", g.width},
             {"height", g.height},
             {"values", std::move(values)},
             {"missing_mask", std::move(missing)},
             {"fallback_fill", g.fallback_fill},
             {"point_count", grid.field.size()},
             {"observed_points", grid.field.observed_count()}};
    if (include_scores) {
        json scores = json::array();
        for (std::size_t p = 0; p < grid.field.size(); ++p) {
            scores.push_back(grid.field.is_observed(p) ? json(grid.field.values[p]) : json(nullptr));
        }
        doc["scores"] = std::move(scores);
    }
    return doc;
}

CommandOutput run_render_views(const PipelineConfig& c) {
    const auto mesh = read_mesh(*c.mesh);
    RenderSettings settings;
    settings.sampling = c.sampling;
    settings.intrinsics = intrinsics_of(c);
    settings.bounds = c.bounds;
    settings.triangle_ids = c.labels.has_value();
    auto result = render_views(mesh, settings, c.seed);

    std::size_t masks = 0;
    if (c.labels) {
        const auto labels = synth::read_labels(*c.labels);
        if (labels.size() != mesh.triangles.size()) {
            fail(ErrorCode::Format, "labels cover " + std::to_string(labels.size()) + " triangles, mesh has " +
                                        std::to_string(mesh.triangles.size()));
        }
        std::vector<seg::SegmentRecord> records;
        for (auto& v : result.views) {
            auto segs = synth::synthetic_segments(v, labels);
            records.insert(records.end(), std::make_move_iterator(segs.begin()), std::make_move_iterator(segs.end()));
            v.triangle_id.clear();
        }
        masks = records.size();
        if (c.masks_path().has_parent_path()) fs::create_directories(c.masks_path().parent_path());
        write_masks(records, c.masks_path());
    }
    view::save_views(result.views, *c.views_dir);
    json doc{{"sampled", result.sampled},
             {"kept", result.views.size()},
             {"masks", masks},
             {"manifest", c.views_manifest().string()}};
    return {doc.dump(2) + "\n", "rendered " + std::to_string(result.views.size()) + " of " +
                                    std::to_string(result.sampled) + " views"};
}

CommandOutput run_fuse(const PipelineConfig& c) {
    const auto points = read_point_cloud(*c.points);
    const auto views = view::load_views(c.views_manifest());
    auto segments = group_segments(seg::read_masks(c.masks_path()), c.min_area_frac);

    seg::EmbeddingTable table;
    if (c.precomputed_embeddings) {
        table = seg::read_embeddings(*c.precomputed_embeddings);
    } else {
        // Records carrying their own embedding skip the provider.
        SegmentsByView pending;
        for (const auto& [id, recs] : segments) {
            for (const auto& r : recs) {
                if (!r.embedding) pending[id].push_back(r);
            }
        }
        auto provider = seg::open_provider(c.provider);
        table = embed_views(views, pending, *provider, c.highlight);
        for (const auto& [id, recs] : segments) {
            for (const auto& r : recs) {
                if (!r.embedding) continue;
                if (r.embedding->size() != table.dim) {
                    fail(ErrorCode::Format, "inline embedding of view " + std::to_string(id) + " has dimension " +
                                                std::to_string(r.embedding->size()) + ", provider has " +
                                                std::to_string(table.dim));
                }
                auto e = *r.embedding;
                seg::normalize_in_place(e);
                table.insert({id, r.level, r.segment_id}, std::move(e));
            }
        }
    }
    const auto features = view_features(views, segments, table);
    const auto store = fusion::fuse_embeddings_chunked(points, features, c.visibility, c.chunk_size);
    write_feature_store(store, *c.store);
    if (c.embeddings) seg::write_embeddings(table, *c.embeddings);

    json observed = json::array();
    for (std::size_t l = 0; l < store.levels(); ++l) {
        std::size_t n = 0;
        for (auto count : store.level_counts(l)) n += count > 0;
        observed.push_back(n);
    }
    json doc{{"points", store.size()},
             {"views", views.size()},
             {"levels", store.levels()},
             {"dim", store.dim()},
             {"observed", observed},
             {"store", c.store->string()}};
    return {doc.dump(2) + "\n", "fused " + std::to_string(views.size()) + " views into " +
                                    std::to_string(store.size()) + " points"};
}

CommandOutput run_query(const PipelineConfig& c) {
    const auto store = read_feature_store(*c.store);
    const auto grid = config_grid(c, store);
    auto doc = grid_to_json(grid);
    doc["query"] = json::parse(query::query_spec_to_json(*c.query));
    return {doc.dump() + "\n", "grid " + std::to_string(grid.interpolated.width) + "x" +
                                   std::to_string(grid.interpolated.height) + ", " +
                                   std::to_string(grid.field.observed_count()) + " observed points"};
}

CommandOutput run_calibrate(const PipelineConfig& c) {
    const auto store = read_feature_store(*c.store);
    const auto grid = config_grid(c, store);
    const auto labels = analytics::read_point_labels_csv(*c.gt_points, *c.geo);
    const auto s = sample_labels(grid.interpolated, labels);
    if (s.scores.empty()) fail(ErrorCode::InvalidArgument, "no labelled point falls inside the score grid");
    const auto map = analytics::fit_quantile_map(s.scores, s.truth, c.quantiles);
    const auto predicted = analytics::apply_quantile_map(map, s.scores);
    json doc{{"k", map.k},
             {"k_reduced", map.k_reduced},
             {"score_edges", map.score_edges},
             {"target_means", map.target_means},
             {"unit", s.unit},
             {"samples", s.scores.size()},
             {"dropped", s.dropped},
             {"in_sample_mae", eval::mae(predicted, s.truth)},
             {"in_sample_rmse", eval::rmse(predicted, s.truth)}};
    return {doc.dump(2) + "\n", "calibrated " + std::to_string(map.k) + " bins on " +
                                    std::to_string(s.scores.size()) + " labels"};
}

CommandOutput run_knn(const PipelineConfig& c) {
    const auto store = read_feature_store(*c.store);
    const auto districts = analytics::read_districts_geojson(*c.gt_districts, *c.geo);
    districts.validate();
    if (c.knn_level >= store.levels()) {
        invalid_argument("knn.level " + std::to_string(c.knn_level) + " exceeds the store's " +
                         std::to_string(store.levels()) + " levels");
    }
    const auto emb = analytics::district_average_embeddings(store, districts, c.knn_level);
    eval::BenchmarkTask task;
    task.name = "districts";
    task.kind = eval::TaskKind::Continuous;
    task.mode = eval::BenchmarkMode::Knn;
    task.quantiles = c.quantiles;
    task.knn_k = c.knn_k;
    task.dim = store.dim();
    std::size_t skipped = 0;
    for (std::size_t i = 0; i < districts.size(); ++i) {
        if (emb.empty[i]) {
            ++skipped;
            continue;
        }
        if (task.unit.empty()) task.unit = districts.districts[i].unit;
        task.truth.push_back(districts.districts[i].value);
        task.features.insert(task.features.end(), emb.means[i].begin(), emb.means[i].end());
    }
    auto split = c.split;
    split.seed = c.seed;
    auto report = eval::run_benchmark({task}, split);
    if (skipped) {
        report.tasks[0].notes.push_back(std::to_string(skipped) + " districts without observed points excluded");
    }
    return {eval::report_to_json(report), eval::report_to_table(report)};
}

CommandOutput run_evaluate(const PipelineConfig& c) {
    std::vector<eval::BenchmarkTask> tasks;
    if (c.synthetic_benchmark) tasks = synth::synthetic_benchmark_tasks(c.seed);

    std::optional<GridResult> grid;
    const auto scene_grid = [&]() -> const GridResult& {
        if (!grid) grid = config_grid(c, read_feature_store(*c.store));
        return *grid;
    };
    for (const auto& source : c.tasks) {
        if (source.source == "table") {
            tasks.push_back(read_table_task(source));
            continue;
        }
        eval::BenchmarkTask t;
        t.name = source.name;
        t.kind = source.kind;
        t.mode = source.mode;
        t.unit = source.unit;
        t.quantiles = source.quantiles;
        t.knn_k = source.k;
        if (source.mode == eval::BenchmarkMode::Knn) {
            invalid_argument("task '" + source.name + "': knn mode needs a table with feature columns");
        }
        const auto& g = scene_grid().interpolated;
        if (source.source == "footprints") {
            const auto fp = analytics::read_districts_geojson(*c.gt_footprints, *c.geo);
            const auto labels = analytics::footprint_cell_labels(fp, g.origin, g.cell_size, g.width, g.height);
            for (std::size_t i = 0; i < g.cell_count(); ++i) {
                if (!std::isfinite(g.values[i])) continue;
                t.scores.push_back(g.values[i]);
                t.truth.push_back(labels[i]);
            }
        } else {
            const auto s = sample_labels(g, analytics::read_point_labels_csv(*c.gt_points, *c.geo));
            t.scores = s.scores;
            t.truth = s.truth;
            if (t.unit.empty()) t.unit = s.unit;
        }
        tasks.push_back(std::move(t));
    }
    auto split = c.split;
    split.seed = c.seed;
    const auto report = eval::run_benchmark(tasks, split);
    return {eval::report_to_json(report), eval::report_to_table(report)};
}

CommandOutput run_command(Command command, const PipelineConfig& config) {
    validate_config(config, command);
    switch (command) {
        case Command::RenderViews: return run_render_views(config);
        case Command::Fuse: return run_fuse(config);
        case Command::Query: return run_query(config);
        case Command::Calibrate: return run_calibrate(config);
        case Command::Knn: return run_knn(config);
        case Command::Evaluate: return run_evaluate(config);
        case Command::Serve: break;
    }
    invalid_argument("serve is not a batch command");
}

json write_synthetic_fixture(const fs::path& dir, const FixtureOptions& o) {
    fs::create_directories(dir);
    SeededRng rng(o.seed, "synthetic-city");
    const auto city = synth::generate_city(o.city, rng);
    auto point_rng = rng.derive("points");
    const auto points = synth::sample_surface_points(city, o.point_count, point_rng);
    write_mesh(city.mesh, dir / "mesh.oc3m");
    synth::write_labels(city.labels, dir / "labels.oc3l");
    write_point_cloud(points, dir / "points.oc3p");
    const auto gt = GeoTransform::about(o.lat, o.lon);
    write_text(dir / "footprints.geojson", analytics::districts_to_geojson(city.footprints, gt));

    const Bounds2 b = o.view_bounds.value_or(city.bounds);
    json views{{"dir", "views"},
               {"grid_spacing", o.grid_spacing},
               {"width", o.image_size},
               {"height", o.image_size},
               {"fov_deg", 90.0}};
    if (o.loose_view_filter) {
        views["min_closest_depth"] = 1e-3;
        views["max_infinite_fraction"] = 1.0;
    }
    json config{{"seed", o.seed},
                {"provider", "stub"},
                {"scene",
                 {{"mesh", "mesh.oc3m"},
                  {"points", "points.oc3p"},
                  {"labels", "labels.oc3l"},
                  {"bounds", {b.min.x, b.min.y, b.max.x, b.max.y}},
                  {"geo_origin", {{"lat", o.lat}, {"lon", o.lon}}}}},
                {"views", views},
                {"fusion", {{"store", "store.oc3d"}, {"embeddings", "embeddings.oc3e"}}},
                {"grid", {{"cell_size", 10.0}}},
                {"query", {{"positive", "blue"}, {"negatives", {"gray", "green", "white"}}, {"level_mode", "max"}}},
                {"ground_truth", {{"footprints", "footprints.geojson"}}},
                {"benchmark",
                 {{"tasks",
                   {{{"name", "building_footprint"}, {"source", "footprints"}, {"kind", "binary"}, {"mode", "zero_shot"}}}}}}};
    write_text(dir / "config.json", config.dump(2) + "\n");
    return json{{"dir", dir.string()},
                {"triangles", city.mesh.triangles.size()},
                {"buildings", city.footprints.size()},
                {"points", points.size()},
                {"config", (dir / "config.json").string()}};
}

}  // namespace urbanfield::pipeline
