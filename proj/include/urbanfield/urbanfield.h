#ifndef URBANFIELD_H
#define URBANFIELD_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define UF_API __declspec(dllexport)
#else
#define UF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum uf_status {
    UF_OK = 0,
    UF_ERR_INVALID_ARGUMENT = 1,
    UF_ERR_FORMAT = 2,
    UF_ERR_IO = 3,
    UF_ERR_PROVIDER = 4,
    UF_ERR_UNDEFINED_METRIC = 5,
    UF_ERR_CONFIG = 6,
    UF_ERR_INTERNAL = 7
} uf_status;

typedef struct uf_config uf_config;
typedef struct uf_store uf_store;
typedef struct uf_provider uf_provider;
typedef struct uf_session uf_session;
typedef struct uf_server uf_server;

UF_API const char* uf_version(void);
/* Stable lowercase name, e.g. "config_error". */
UF_API const char* uf_status_name(uf_status status);
/* Message of the last failing call on this thread; "" after success. */
UF_API const char* uf_last_error(void);
/* Frees strings returned through char** out-parameters. NULL is ignored. */
UF_API void uf_string_free(char* s);

/* Pipeline configuration (JSON). Relative paths resolve against the config
 * file's directory, or `base_dir` for uf_config_parse. */
UF_API uf_status uf_config_load(const char* path, uf_config** out);
UF_API uf_status uf_config_parse(const char* json, const char* base_dir, uf_config** out);
UF_API void uf_config_free(uf_config* config);
/* Overrides one setting. Keys: "seed" (u64), "provider" ("stub" or
 * "cmd:<argv>"), "cell_size" (meters), "query" (JSON spec), "listen"
 * ("host:port"), "synthetic_benchmark" ("true"/"false"). */
UF_API uf_status uf_config_set(uf_config* config, const char* key, const char* value);
/* Current value of a key accepted by uf_config_set, as text. */
UF_API uf_status uf_config_get(const uf_config* config, const char* key, char** value);
/* Checks that `command` can run; the error lists every problem. */
UF_API uf_status uf_config_validate(const uf_config* config, const char* command);

/* Runs render-views, fuse, query, calibrate, knn or evaluate. `document`
 * receives the JSON output and `summary` a short text; either may be NULL. */
UF_API uf_status uf_run_command(const uf_config* config, const char* command, char** document, char** summary);

/* Writes a synthetic city (mesh, labels, points, footprints) and a matching
 * config.json into `dir`. Options JSON may set seed, point_count,
 * grid_spacing, image_size, view_bounds [x0, y0, x1, y1], loose_view_filter
 * and red_building_fraction; NULL uses defaults. */
UF_API uf_status uf_fixture_write(const char* dir, const char* options_json, char** summary);

UF_API uf_status uf_store_open(const char* path, uf_store** out);
UF_API void uf_store_free(uf_store* store);
UF_API uf_status uf_store_info(const uf_store* store, uint64_t* points, uint32_t* levels, uint32_t* dim);

/* "stub" or "cmd:<argv>". */
UF_API uf_status uf_provider_open(const char* spec, uf_provider** out);
UF_API void uf_provider_free(uf_provider* provider);
UF_API uf_status uf_provider_dim(const uf_provider* provider, size_t* dim);
/* Writes up to `capacity` floats; `dim` receives the embedding size. */
UF_API uf_status uf_provider_embed_text(uf_provider* provider, const char* text, float* out, size_t capacity,
                                        size_t* dim);

/* Per-point normalized scores for a JSON query spec. Arrays hold one entry per
 * store point; observed[i] is 0 for points no view saw. */
UF_API uf_status uf_query_scores(const uf_store* store, uf_provider* provider, const char* query_json,
                                 double* scores, uint8_t* observed, size_t n);
/* Grid JSON {origin, cell_size, width, height, values, missing_mask, ...}. */
UF_API uf_status uf_query_grid(const uf_store* store, uf_provider* provider, const char* query_json,
                               double cell_size, int include_scores, char** grid_json);

/* Metric helpers; labels are 0/1. */
UF_API uf_status uf_roc_auc(const double* scores, const int* labels, size_t n, double* out);
UF_API uf_status uf_spearman(const double* a, const double* b, size_t n, double* out);

/* HTTP API session over a store (copied) and a provider (ownership taken on
 * success). */
UF_API uf_status uf_session_create(const uf_store* store, uf_provider* provider, double cell_size,
                                   uf_session** out);
/* Loads the store and provider named by a config. */
UF_API uf_status uf_session_open(const uf_config* config, uf_session** out);
UF_API void uf_session_free(uf_session* session);
/* Handles one request without a socket. `target` may include "?max=N". */
UF_API uf_status uf_session_handle(uf_session* session, const char* method, const char* target, const char* body,
                                   int* http_status, char** response);

/* Binds "host:port" (port 0 picks one). The session must outlive the server. */
UF_API uf_status uf_server_create(uf_session* session, const char* listen, uf_server** out, int* port);
/* Blocks until uf_server_stop is called from another thread. */
UF_API uf_status uf_server_run(uf_server* server);
UF_API void uf_server_stop(uf_server* server);
UF_API void uf_server_free(uf_server* server);

#ifdef __cplusplus
}
#endif

#endif
