#include "core/errors.hpp"

namespace urbanfield {

const char* error_code_name(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "invalid_argument";
        case ErrorCode::Format: return "format_error";
        case ErrorCode::Io: return "io_error";
        case ErrorCode::Provider: return "provider_error";
        case ErrorCode::UndefinedMetric: return "undefined_metric";
        case ErrorCode::Config: return "config_error";
        case ErrorCode::Internal: return "internal_error";
    }
    return "unknown";
}

}  // namespace urbanfield
