#include "urbanfield/urbanfield.h"

#include <cstring>
#include <memory>
#include <string>

#include <json.hpp>

#include "core/errors.hpp"
#include "core/store_io.hpp"
#include "eval/metrics.hpp"
#include "pipeline/commands.hpp"
#include "pipeline/config.hpp"
#include "service/service.hpp"

struct uf_config {
    urbanfield::pipeline::PipelineConfig config;
};

struct uf_store {
    urbanfield::FeatureStore store;
};

struct uf_provider {
    std::unique_ptr<urbanfield::seg::Provider> provider;
};

struct uf_session {
    std::unique_ptr<urbanfield::service::ApiSession> session;
};

struct uf_server {
    std::unique_ptr<urbanfield::service::HttpServer> server;
};

namespace {

using namespace urbanfield;
using nlohmann::json;

thread_local std::string t_last_error;

uf_status status_of(ErrorCode code) {
    switch (code) {
        case ErrorCode::InvalidArgument: return UF_ERR_INVALID_ARGUMENT;
        case ErrorCode::Format: return UF_ERR_FORMAT;
        case ErrorCode::Io: return UF_ERR_IO;
        case ErrorCode::Provider: return UF_ERR_PROVIDER;
        case ErrorCode::UndefinedMetric: return UF_ERR_UNDEFINED_METRIC;
        case ErrorCode::Config: return UF_ERR_CONFIG;
        case ErrorCode::Internal: return UF_ERR_INTERNAL;
    }
    return UF_ERR_INTERNAL;
}

template <typename Fn>
uf_status guarded(Fn&& fn) {
    try {
        fn();
        t_last_error.clear();
        return UF_OK;
    } catch (const Error& e) {
        t_last_error = e.what();
        return status_of(e.code());
    } catch (const json::exception& e) {
        t_last_error = e.what();
        return UF_ERR_FORMAT;
    } catch (const std::bad_alloc&) {
        t_last_error = "out of memory";
        return UF_ERR_INTERNAL;
    } catch (const std::exception& e) {
        t_last_error = e.what();
        return UF_ERR_INTERNAL;
    }
}

void require(const void* p, const char* what) {
    if (!p) invalid_argument(std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
    auto* out = static_cast<char*>(std::malloc(s.size() + 1));
    if (!out) throw std::bad_alloc();
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

void set_out(char** out, const std::string& s) {
    if (out) *out = dup_string(s);
}

pipeline::Command command_of(const char* name) {
    require(name, "command");
    const auto c = pipeline::parse_command(name);
    if (!c) invalid_argument(std::string("unknown command '") + name + "'");
    return *c;
}

std::uint64_t parse_u64(const std::string& s, const char* what) {
    std::size_t used = 0;
    unsigned long long v = 0;
    try {
        if (!s.empty() && s[0] != '-') v = std::stoull(s, &used, 10);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size()) invalid_argument(std::string(what) + " must be an unsigned integer, got '" + s + "'");
    return v;
}

double parse_positive(const std::string& s, const char* what) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size() || !(v > 0.0)) {
        invalid_argument(std::string(what) + " must be a positive number, got '" + s + "'");
    }
    return v;
}

}  // namespace

extern "C" {

const char* uf_version(void) { return "0.3.0"; }

const char* uf_status_name(uf_status status) {
    switch (status) {
        case UF_OK: return "ok";
        case UF_ERR_INVALID_ARGUMENT: return error_code_name(ErrorCode::InvalidArgument);
        case UF_ERR_FORMAT: return error_code_name(ErrorCode::Format);
        case UF_ERR_IO: return error_code_name(ErrorCode::Io);
        case UF_ERR_PROVIDER: return error_code_name(ErrorCode::Provider);
        case UF_ERR_UNDEFINED_METRIC: return error_code_name(ErrorCode::UndefinedMetric);
        case UF_ERR_CONFIG: return error_code_name(ErrorCode::Config);
        case UF_ERR_INTERNAL: return error_code_name(ErrorCode::Internal);
    }
    return "unknown";
}

const char* uf_last_error(void) { return t_last_error.c_str(); }

void uf_string_free(char* s) { std::free(s); }

uf_status uf_config_load(const char* path, uf_config** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new uf_config{pipeline::load_config(path)};
    });
}

uf_status uf_config_parse(const char* text, const char* base_dir, uf_config** out) {
    return guarded([&] {
        require(text, "json");
        require(out, "out");
        *out = new uf_config{pipeline::parse_config(text, base_dir ? base_dir : ".")};
    });
}

void uf_config_free(uf_config* config) { delete config; }

uf_status uf_config_set(uf_config* config, const char* key, const char* value) {
    return guarded([&] {
        require(config, "config");
        require(key, "key");
        require(value, "value");
        auto& c = config->config;
        const std::string k = key, v = value;
        if (k == "seed") {
            c.seed = parse_u64(v, "seed");
        } else if (k == "provider") {
            if (v != "stub" && v.rfind("cmd:", 0) != 0) invalid_argument("provider must be 'stub' or 'cmd:<argv>'");
            c.provider = v;
        } else if (k == "cell_size") {
            c.cell_size = parse_positive(v, "cell_size");
        } else if (k == "query") {
            c.query = query::parse_query_spec(v);
        } else if (k == "listen") {
            service::parse_listen_address(v);
            c.listen = v;
        } else if (k == "synthetic_benchmark") {
            if (v != "true" && v != "false") invalid_argument("synthetic_benchmark must be true or false");
            c.synthetic_benchmark = v == "true";
        } else {
            invalid_argument("unknown config key '" + k + "'");
        }
    });
}

uf_status uf_config_get(const uf_config* config, const char* key, char** value) {
    return guarded([&] {
        require(config, "config");
        require(key, "key");
        require(value, "value");
        const auto& c = config->config;
        const std::string k = key;
        std::string v;
        if (k == "seed") {
            v = std::to_string(c.seed);
        } else if (k == "provider") {
            v = c.provider;
        } else if (k == "cell_size") {
            v = json(c.cell_size).dump();
        } else if (k == "query") {
            v = c.query ? query::query_spec_to_json(*c.query) : "null";
        } else if (k == "listen") {
            v = c.listen;
        } else if (k == "synthetic_benchmark") {
            v = c.synthetic_benchmark ? "true" : "false";
        } else {
            invalid_argument("unknown config key '" + k + "'");
        }
        *value = dup_string(v);
    });
}

uf_status uf_config_validate(const uf_config* config, const char* command) {
    return guarded([&] {
        require(config, "config");
        pipeline::validate_config(config->config, command_of(command));
    });
}

uf_status uf_run_command(const uf_config* config, const char* command, char** document, char** summary) {
    return guarded([&] {
        require(config, "config");
        const auto out = pipeline::run_command(command_of(command), config->config);
        char* doc = document ? dup_string(out.document) : nullptr;
        try {
            set_out(summary, out.summary);
        } catch (...) {
            std::free(doc);
            throw;
        }
        if (document) *document = doc;
    });
}

uf_status uf_fixture_write(const char* dir, const char* options_json, char** summary) {
    return guarded([&] {
        require(dir, "dir");
        pipeline::FixtureOptions o;
        if (options_json) {
            const auto j = json::parse(options_json);
            if (!j.is_object()) invalid_argument("fixture options must be a JSON object");
            for (const auto& [key, value] : j.items()) {
                if (key == "seed") {
                    o.seed = value.get<std::uint64_t>();
                } else if (key == "point_count") {
                    o.point_count = value.get<std::size_t>();
                } else if (key == "grid_spacing") {
                    o.grid_spacing = value.get<double>();
                } else if (key == "image_size") {
                    o.image_size = value.get<int>();
                } else if (key == "view_bounds") {
                    const auto b = value.get<std::vector<double>>();
                    if (b.size() != 4) invalid_argument("view_bounds must be [x0, y0, x1, y1]");
                    o.view_bounds = Bounds2{{b[0], b[1]}, {b[2], b[3]}};
                } else if (key == "loose_view_filter") {
                    o.loose_view_filter = value.get<bool>();
                } else if (key == "red_building_fraction") {
                    o.city.red_building_fraction = value.get<double>();
                } else {
                    invalid_argument("unknown fixture option '" + key + "'");
                }
            }
        }
        set_out(summary, pipeline::write_synthetic_fixture(dir, o).dump());
    });
}

uf_status uf_store_open(const char* path, uf_store** out) {
    return guarded([&] {
        require(path, "path");
        require(out, "out");
        *out = new uf_store{read_feature_store(path)};
    });
}

void uf_store_free(uf_store* store) { delete store; }

uf_status uf_store_info(const uf_store* store, uint64_t* points, uint32_t* levels, uint32_t* dim) {
    return guarded([&] {
        require(store, "store");
        if (points) *points = store->store.size();
        if (levels) *levels = static_cast<uint32_t>(store->store.levels());
        if (dim) *dim = static_cast<uint32_t>(store->store.dim());
    });
}

uf_status uf_provider_open(const char* spec, uf_provider** out) {
    return guarded([&] {
        require(spec, "spec");
        require(out, "out");
        *out = new uf_provider{seg::open_provider(spec)};
    });
}

void uf_provider_free(uf_provider* provider) { delete provider; }

uf_status uf_provider_dim(const uf_provider* provider, size_t* dim) {
    return guarded([&] {
        require(provider, "provider");
        require(dim, "dim");
        *dim = provider->provider->dim();
    });
}

uf_status uf_provider_embed_text(uf_provider* provider, const char* text, float* out, size_t capacity, size_t* dim) {
    return guarded([&] {
        require(provider, "provider");
        require(text, "text");
        const auto e = provider->provider->embed_text(text);
        if (dim) *dim = e.size();
        if (out) std::memcpy(out, e.data(), std::min(capacity, e.size()) * sizeof(float));
    });
}

uf_status uf_query_scores(const uf_store* store, uf_provider* provider, const char* query_json, double* scores,
                          uint8_t* observed, size_t n) {
    return guarded([&] {
        require(store, "store");
        require(provider, "provider");
        require(query_json, "query");
        if (n != store->store.size()) {
            invalid_argument("output arrays hold " + std::to_string(n) + " entries, store has " +
                             std::to_string(store->store.size()) + " points");
        }
        const auto field = query::score_field(store->store, query::parse_query_spec(query_json), *provider->provider);
        if (scores) std::memcpy(scores, field.values.data(), n * sizeof(double));
        if (observed) std::memcpy(observed, field.observed.data(), n);
    });
}

uf_status uf_query_grid(const uf_store* store, uf_provider* provider, const char* query_json, double cell_size,
                        int include_scores, char** grid_json) {
    return guarded([&] {
        require(store, "store");
        require(provider, "provider");
        require(query_json, "query");
        require(grid_json, "grid_json");
        const auto grid = pipeline::query_grid(store->store, query::parse_query_spec(query_json), *provider->provider,
                                               cell_size);
        *grid_json = dup_string(pipeline::grid_to_json(grid, include_scores != 0).dump());
    });
}

uf_status uf_roc_auc(const double* scores, const int* labels, size_t n, double* out) {
    return guarded([&] {
        require(out, "out");
        if (n && (!scores || !labels)) invalid_argument("scores and labels must not be null");
        *out = eval::roc_auc(std::span<const double>(scores, n), std::span<const int>(labels, n));
    });
}

uf_status uf_spearman(const double* a, const double* b, size_t n, double* out) {
    return guarded([&] {
        require(out, "out");
        if (n && (!a || !b)) invalid_argument("inputs must not be null");
        *out = eval::spearman(std::span<const double>(a, n), std::span<const double>(b, n));
    });
}

uf_status uf_session_create(const uf_store* store, uf_provider* provider, double cell_size, uf_session** out) {
    return guarded([&] {
        require(store, "store");
        require(provider, "provider");
        require(out, "out");
        auto session = std::make_unique<service::ApiSession>(store->store, std::move(provider->provider), cell_size);
        *out = new uf_session{std::move(session)};
        delete provider;
    });
}

uf_status uf_session_open(const uf_config* config, uf_session** out) {
    return guarded([&] {
        require(config, "config");
        require(out, "out");
        const auto& c = config->config;
        pipeline::validate_config(c, pipeline::Command::Serve);
        *out = new uf_session{std::make_unique<service::ApiSession>(read_feature_store(*c.store),
                                                                    seg::open_provider(c.provider), c.cell_size)};
    });
}

void uf_session_free(uf_session* session) { delete session; }

uf_status uf_session_handle(uf_session* session, const char* method, const char* target, const char* body,
                            int* http_status, char** response) {
    return guarded([&] {
        require(session, "session");
        require(method, "method");
        require(target, "target");
        const auto r = session->session->handle(method, target, body ? body : "");
        if (http_status) *http_status = r.status;
        set_out(response, r.body);
    });
}

uf_status uf_server_create(uf_session* session, const char* listen, uf_server** out, int* port) {
    return guarded([&] {
        require(session, "session");
        require(listen, "listen");
        require(out, "out");
        const auto [host, requested] = service::parse_listen_address(listen);
        auto server = std::make_unique<service::HttpServer>(*session->session);
        const int bound = server->bind(host, requested);
        if (port) *port = bound;
        *out = new uf_server{std::move(server)};
    });
}

uf_status uf_server_run(uf_server* server) {
    return guarded([&] {
        require(server, "server");
        server->server->listen();
    });
}

void uf_server_stop(uf_server* server) {
    if (server) server->server->stop();
}

void uf_server_free(uf_server* server) { delete server; }

}  // extern "C"
