// urbanfield command-line driver over the C API.

#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "urbanfield/urbanfield.h"

namespace {

struct Failure {
    uf_status status;
    std::string message;
};

void check(uf_status s) {
    if (s != UF_OK) throw Failure{s, uf_last_error()};
}

std::string one_line(std::string s) {
    for (auto& c : s) {
        if (c == '\n' || c == '\r') c = ' ';
    }
    return s;
}

struct OwnedString {
    char* p = nullptr;
    ~OwnedString() { uf_string_free(p); }
    std::string str() const { return p ? p : ""; }
};

struct ConfigHandle {
    uf_config* p = nullptr;
    ~ConfigHandle() { uf_config_free(p); }
};

struct Common {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> provider;
    std::optional<double> cell_size;
    std::string out;
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
    cmd->add_option("--config", c.config, "Pipeline config (JSON)")->required()->check(CLI::ExistingFile);
    cmd->add_option("--seed", c.seed, "Override the config seed");
    cmd->add_option("--provider", c.provider, "stub or cmd:<argv>");
    cmd->add_option("--cell-size", c.cell_size, "Grid cell size in meters");
    if (with_out) cmd->add_option("--out", c.out, "Write the JSON output here instead of stdout");
}

void load(ConfigHandle& h, const Common& c) {
    check(uf_config_load(c.config.c_str(), &h.p));
    if (c.seed) check(uf_config_set(h.p, "seed", std::to_string(*c.seed).c_str()));
    if (c.provider) check(uf_config_set(h.p, "provider", c.provider->c_str()));
    if (c.cell_size) check(uf_config_set(h.p, "cell_size", CLI::detail::to_string(*c.cell_size).c_str()));
}

void write_file(const std::string& path, const std::string& text) {
    const std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary);
    out << text;
    if (!out) throw Failure{UF_ERR_IO, "cannot write " + path};
}

void run_batch(const char* command, ConfigHandle& h, const Common& c) {
    OwnedString doc, summary;
    check(uf_run_command(h.p, command, &doc.p, &summary.p));
    if (c.out.empty()) {
        std::cout << doc.str();
    } else {
        write_file(c.out, doc.str());
        std::cout << summary.str();
        if (!summary.str().empty() && summary.str().back() != '\n') std::cout << '\n';
    }
}

int serve(ConfigHandle& h, const std::optional<std::string>& listen) {
    if (listen) check(uf_config_set(h.p, "listen", listen->c_str()));
    uf_session* session = nullptr;
    check(uf_session_open(h.p, &session));
    std::unique_ptr<uf_session, void (*)(uf_session*)> session_guard(session, uf_session_free);

    // Signals are taken synchronously by a watcher thread.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    OwnedString address;
    check(uf_config_get(h.p, "listen", &address.p));
    uf_server* server = nullptr;
    int port = 0;
    check(uf_server_create(session, address.p, &server, &port));
    std::unique_ptr<uf_server, void (*)(uf_server*)> server_guard(server, uf_server_free);
    std::cout << "listening on port " << port << std::endl;
    std::thread watcher([&] {
        int sig = 0;
        sigwait(&signals, &sig);
        uf_server_stop(server);
    });
    const auto status = uf_server_run(server);
    if (watcher.joinable()) {
        pthread_kill(watcher.native_handle(), SIGTERM);
        watcher.join();
    }
    check(status);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"urbanfield: open-vocabulary queries over fused city point clouds"};
    app.require_subcommand(1);
    app.set_version_flag("--version", uf_version());

    Common render_opts, fuse_opts, query_opts, cal_opts, knn_opts, eval_opts, serve_opts;
    auto* render = app.add_subcommand("render-views", "Sample poses, rasterize views and write masks when labels exist");
    add_common(render, render_opts);
    auto* fuse = app.add_subcommand("fuse", "Embed segments and fuse them onto the point cloud");
    add_common(fuse, fuse_opts);

    auto* query = app.add_subcommand("query", "Score a prompt against the fused store and emit the grid");
    add_common(query, query_opts);
    std::optional<std::string> positive, level_mode;
    std::vector<std::string> negatives;
    bool no_negatives = false;
    query->add_option("--positive", positive, "Positive prompt (overrides the config query)");
    query->add_option("--negative", negatives, "Negative prompt; repeatable")->take_all()->allow_extra_args(false);
    query->add_flag("--no-negatives", no_negatives, "Use an empty negative set");
    query->add_option("--level-mode", level_mode, "max or a level 0..3");

    auto* cal = app.add_subcommand("calibrate", "Fit a quantile map from query scores to labelled points");
    add_common(cal, cal_opts);
    auto* knn = app.add_subcommand("knn", "KNN regression from district-averaged embeddings");
    add_common(knn, knn_opts);
    auto* evaluate = app.add_subcommand("evaluate", "Run the benchmark protocol and write the metric report");
    add_common(evaluate, eval_opts);
    bool synthetic = false;
    evaluate->add_flag("--synthetic", synthetic, "Include the seeded synthetic benchmark tasks");

    auto* serve_cmd = app.add_subcommand("serve", "Serve the HTTP API over a fused store");
    add_common(serve_cmd, serve_opts, false);
    std::optional<std::string> listen;
    serve_cmd->add_option("--listen", listen, "host:port (port 0 picks a free port)");

    auto* synth = app.add_subcommand("synth", "Write a synthetic city fixture and its config");
    std::string synth_dir;
    nlohmann::json synth_options = nlohmann::json::object();
    std::optional<std::uint64_t> synth_seed, synth_points;
    std::optional<double> synth_spacing, synth_red;
    std::optional<int> synth_image;
    std::vector<double> synth_bounds;
    bool synth_loose = false;
    synth->add_option("dir", synth_dir, "Output directory")->required();
    synth->add_option("--seed", synth_seed, "City seed");
    synth->add_option("--points", synth_points, "Surface point count");
    synth->add_option("--spacing", synth_spacing, "View pose grid spacing in meters");
    synth->add_option("--image-size", synth_image, "View width and height in pixels");
    synth->add_option("--red-fraction", synth_red, "Fraction of red buildings");
    synth->add_option("--view-bounds", synth_bounds, "x0 y0 x1 y1 of the pose grid")->expected(4);
    synth->add_flag("--keep-all-views", synth_loose, "Disable the view filter");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        ConfigHandle h;
        if (render->parsed()) {
            load(h, render_opts);
            run_batch("render-views", h, render_opts);
        } else if (fuse->parsed()) {
            load(h, fuse_opts);
            run_batch("fuse", h, fuse_opts);
        } else if (query->parsed()) {
            load(h, query_opts);
            if (positive || !negatives.empty() || no_negatives || level_mode) {
                if (!positive) throw Failure{UF_ERR_INVALID_ARGUMENT, "--negative and --level-mode need --positive"};
                nlohmann::json q{{"positive", *positive}, {"negatives", negatives}};
                if (level_mode) {
                    if (*level_mode == "max") {
                        q["level_mode"] = "max";
                    } else {
                        try {
                            q["level_mode"] = std::stoul(*level_mode);
                        } catch (const std::exception&) {
                            throw Failure{UF_ERR_INVALID_ARGUMENT, "--level-mode must be max or 0..3"};
                        }
                    }
                }
                check(uf_config_set(h.p, "query", q.dump().c_str()));
            }
            run_batch("query", h, query_opts);
        } else if (cal->parsed()) {
            load(h, cal_opts);
            run_batch("calibrate", h, cal_opts);
        } else if (knn->parsed()) {
            load(h, knn_opts);
            run_batch("knn", h, knn_opts);
        } else if (evaluate->parsed()) {
            load(h, eval_opts);
            if (synthetic) check(uf_config_set(h.p, "synthetic_benchmark", "true"));
            run_batch("evaluate", h, eval_opts);
        } else if (serve_cmd->parsed()) {
            load(h, serve_opts);
            return serve(h, listen);
        } else if (synth->parsed()) {
            if (synth_seed) synth_options["seed"] = *synth_seed;
            if (synth_points) synth_options["point_count"] = *synth_points;
            if (synth_spacing) synth_options["grid_spacing"] = *synth_spacing;
            if (synth_image) synth_options["image_size"] = *synth_image;
            if (synth_red) synth_options["red_building_fraction"] = *synth_red;
            if (!synth_bounds.empty()) synth_options["view_bounds"] = synth_bounds;
            if (synth_loose) synth_options["loose_view_filter"] = true;
            OwnedString summary;
            check(uf_fixture_write(synth_dir.c_str(), synth_options.dump().c_str(), &summary.p));
            std::cout << summary.str() << '\n';
        }
    } catch (const Failure& f) {
        std::cerr << "urbanfield: " << uf_status_name(f.status) << ": " << one_line(f.message) << std::endl;
        return f.status == UF_ERR_CONFIG ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "urbanfield: internal_error: " << one_line(e.what()) << std::endl;
        return 1;
    }
    return 0;
}
