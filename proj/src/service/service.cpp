#include "service/service.hpp"

#include <charconv>
#include <mutex>

#include <httplib.h>
#include <json.hpp>

#include "core/errors.hpp"
#include "core/rng.hpp"
#include "core/sampling.hpp"
#include "pipeline/commands.hpp"
#include "pipeline/pipeline.hpp"

namespace urbanfield::service {

using nlohmann::json;

namespace {

int status_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::Provider: return 503;
        case ErrorCode::Io:
        case ErrorCode::Internal: return 500;
        default: return 400;
    }
}

ApiResponse ok(const json& doc) { return {200, doc.dump()}; }

std::optional<std::string> query_param(const std::string& query_string, const std::string& key) {
    std::size_t pos = 0;
    while (pos <= query_string.size()) {
        const auto end = std::min(query_string.find('&', pos), query_string.size());
        const auto item = query_string.substr(pos, end - pos);
        const auto eq = item.find('=');
        if (item.substr(0, eq) == key) return eq == std::string::npos ? std::string() : item.substr(eq + 1);
        pos = end + 1;
    }
    return std::nullopt;
}

}  // namespace

ApiResponse error_response(int status, const std::string& code, const std::string& message) {
    return {status, json{{"error", {{"code", code}, {"message", message}}}}.dump()};
}

ApiSession::ApiSession(FeatureStore store, std::unique_ptr<seg::Provider> provider, double default_cell_size)
    : store_(std::move(store)), provider_(std::move(provider)), default_cell_size_(default_cell_size) {
    if (!provider_) invalid_argument("session needs a provider");
    if (!(default_cell_size_ > 0.0)) invalid_argument("cell size must be positive");
    if (store_.size() > 0 && store_.dim() != provider_->dim()) {
        fail(ErrorCode::Provider, "store dimension " + std::to_string(store_.dim()) + " does not match provider dimension " +
                                      std::to_string(provider_->dim()));
    }
}

ApiResponse ApiSession::handle(const std::string& method, const std::string& target, const std::string& body) {
    const auto qmark = target.find('?');
    const auto path = target.substr(0, qmark);
    const auto query_string = qmark == std::string::npos ? std::string() : target.substr(qmark + 1);
    try {
        if (path == "/api/scene") {
            if (method != "GET") return error_response(405, "method_not_allowed", "use GET for /api/scene");
            return scene();
        }
        if (path == "/api/query") {
            if (method != "POST") return error_response(405, "method_not_allowed", "use POST for /api/query");
            return query(body);
        }
        if (path == "/api/points") {
            if (method != "GET") return error_response(405, "method_not_allowed", "use GET for /api/points");
            return points(query_string);
        }
        return error_response(404, "not_found", "no endpoint " + path);
    } catch (const Error& e) {
        return error_response(status_for(e.code()), error_code_name(e.code()), e.what());
    } catch (const std::exception& e) {
        return error_response(500, "internal_error", e.what());
    }
}

ApiResponse ApiSession::scene() const {
    const auto b = store_.points().bounds_xy();
    return ok({{"bounds", {{"min", {b.min.x, b.min.y}}, {"max", {b.max.x, b.max.y}}}},
               {"point_count", store_.size()},
               {"levels", store_.levels()},
               {"dim", store_.dim()}});
}

ApiResponse ApiSession::query(const std::string& body) {
    auto j = json::parse(body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        return error_response(400, "malformed_request", "request body is not a JSON object");
    }
    double cell_size = default_cell_size_;
    if (j.contains("cell_size")) {
        if (!j["cell_size"].is_number() || !(j["cell_size"].get<double>() > 0.0)) {
            return error_response(400, "invalid_argument", "\"cell_size\" must be a positive number");
        }
        cell_size = j["cell_size"].get<double>();
        j.erase("cell_size");
    }
    bool include_scores = false;
    if (j.contains("include_scores")) {
        if (!j["include_scores"].is_boolean()) {
            return error_response(400, "invalid_argument", "\"include_scores\" must be true or false");
        }
        include_scores = j["include_scores"].get<bool>();
        j.erase("include_scores");
    }
    for (const auto& [key, value] : j.items()) {
        if (key != "positive" && key != "negatives" && key != "level_mode") {
            return error_response(400, "invalid_argument", "unknown field \"" + key + "\"");
        }
    }
    const auto spec = query::parse_query_spec(j.dump());
    if (spec.level_mode.single && *spec.level_mode.single >= store_.levels()) {
        invalid_argument("level " + std::to_string(*spec.level_mode.single) + " is not in the store");
    }
    auto grid = pipeline::query_grid(store_, spec, *provider_, cell_size, &cache_);
    auto doc = pipeline::grid_to_json(grid, include_scores);
    doc["query"] = json::parse(query::query_spec_to_json(spec));
    {
        std::unique_lock lock(last_mutex_);
        last_query_ = query::query_spec_to_json(spec);
        last_scores_ = std::make_shared<const ScoreField>(std::move(grid.field));
    }
    return ok(doc);
}

ApiResponse ApiSession::points(const std::string& query_string) const {
    std::size_t max_points = 10000;
    if (const auto v = query_param(query_string, "max")) {
        std::size_t parsed = 0;
        const auto [end, ec] = std::from_chars(v->data(), v->data() + v->size(), parsed);
        if (ec != std::errc() || end != v->data() + v->size()) {
            return error_response(400, "invalid_argument", "max must be a non-negative integer");
        }
        max_points = parsed;
    }
    std::shared_ptr<const ScoreField> scores;
    std::optional<std::string> last;
    {
        std::shared_lock lock(last_mutex_);
        scores = last_scores_;
        last = last_query_;
    }
    // Fixed stream: the same N always returns the same subset.
    SeededRng rng(0, "api/points");
    const auto idx = sample_indices(store_.size(), max_points, rng);
    json positions = json::array(), values = json::array();
    for (auto i : idx) {
        const auto& p = store_.points()[i];
        positions.push_back({p.x, p.y, p.z});
        if (scores) values.push_back(scores->is_observed(i) ? json(scores->values[i]) : json(nullptr));
    }
    json doc{{"total", store_.size()},
             {"count", idx.size()},
             {"indices", idx},
             {"positions", std::move(positions)},
             {"scores", scores ? std::move(values) : json(nullptr)},
             {"query", last ? json::parse(*last) : json(nullptr)}};
    return ok(doc);
}

struct HttpServer::Impl {
    Impl(ApiSession& s, std::size_t threshold) : session(s), stream_threshold(threshold) {}
    ApiSession& session;
    std::size_t stream_threshold;
    httplib::Server server;
};

HttpServer::HttpServer(ApiSession& session, std::size_t stream_threshold)
    : impl_(std::make_unique<Impl>(session, stream_threshold)) {
    auto route = [this](const httplib::Request& req, httplib::Response& res) {
        std::string target = req.path;
        if (!req.params.empty()) {
            std::string qs;
            for (const auto& [k, v] : req.params) qs += (qs.empty() ? "" : "&") + k + "=" + v;
            target += "?" + qs;
        }
        auto r = impl_->session.handle(req.method, target, req.body);
        res.status = r.status;
        if (r.body.size() <= impl_->stream_threshold) {
            res.set_content(r.body, "application/json");
            return;
        }
        auto body = std::make_shared<std::string>(std::move(r.body));
        const std::size_t piece = impl_->stream_threshold;
        res.set_chunked_content_provider("application/json", [body, piece](std::size_t offset, httplib::DataSink& sink) {
            if (offset >= body->size()) {
                sink.done();
                return true;
            }
            const auto n = std::min(piece, body->size() - offset);
            return sink.write(body->data() + offset, n);
        });
    };
    const char* pattern = "/.*";
    impl_->server.Get(pattern, route);
    impl_->server.Post(pattern, route);
    impl_->server.Put(pattern, route);
    impl_->server.Delete(pattern, route);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) fail(ErrorCode::Io, "cannot bind " + host);
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) fail(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
    return port;
}

void HttpServer::listen() { impl_->server.listen_after_bind(); }

void HttpServer::stop() {
    if (impl_) impl_->server.stop();
}

std::pair<std::string, int> parse_listen_address(const std::string& text) {
    const auto colon = text.rfind(':');
    if (colon == std::string::npos) invalid_argument("listen address must be host:port, got '" + text + "'");
    std::string host = text.substr(0, colon);
    if (host.empty()) host = "127.0.0.1";
    const auto port_text = text.substr(colon + 1);
    int port = -1;
    const auto [end, ec] = std::from_chars(port_text.data(), port_text.data() + port_text.size(), port);
    if (ec != std::errc() || end != port_text.data() + port_text.size() || port < 0 || port > 65535) {
        invalid_argument("invalid port in listen address '" + text + "'");
    }
    return {host, port};
}

}  // namespace urbanfield::service
