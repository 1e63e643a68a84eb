#pragma once

#include <atomic>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "core/types.hpp"
#include "query/query.hpp"
#include "segment/provider.hpp"

namespace urbanfield::service {

struct ApiResponse {
    int status = 200;
    std::string body;  // JSON
};

// Read-only session over one fused store. Thread safe: the store is never
// modified, the prompt cache has its own lock and the last query's scores are
// swapped under a shared mutex.
class ApiSession {
public:
    ApiSession(FeatureStore store, std::unique_ptr<seg::Provider> provider, double default_cell_size = 10.0);

    // Routes one request. `target` may carry a query string.
    ApiResponse handle(const std::string& method, const std::string& target, const std::string& body);

    const FeatureStore& store() const { return store_; }

private:
    ApiResponse scene() const;
    ApiResponse query(const std::string& body);
    ApiResponse points(const std::string& query_string) const;

    const FeatureStore store_;
    std::unique_ptr<seg::Provider> provider_;
    double default_cell_size_;
    query::PromptCache cache_;

    mutable std::shared_mutex last_mutex_;
    std::optional<std::string> last_query_;
    std::shared_ptr<const ScoreField> last_scores_;
};

// {"error": {"code": "...", "message": "..."}}
ApiResponse error_response(int status, const std::string& code, const std::string& message);

// HTTP front end. Bodies above `stream_threshold` bytes are sent chunked.
class HttpServer {
public:
    explicit HttpServer(ApiSession& session, std::size_t stream_threshold = 1 << 20);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    // Binds host:port (port 0 picks a free one) and returns the bound port.
    int bind(const std::string& host, int port);
    // Blocks until stop() is called.
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

// "host:port" or ":port"; host defaults to 127.0.0.1.
std::pair<std::string, int> parse_listen_address(const std::string& text);

}  // namespace urbanfield::service
