#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fmprune {

// Every error class carries a fixed process exit code; see README.
enum class ErrorCode : int {
    invalid_argument = 3,
    missing_file = 10,
    io_failure = 11,
    malformed_header = 12,
    unsupported_dtype = 13,
    truncated_data = 14,
    shape_mismatch = 15,
    manifest_invalid = 16,
    schema_error = 20,
    channel_mismatch = 21,
    cycle_detected = 22,
    group_inconsistency = 23,
    dangling_layer = 24,
    plan_invalid = 25,
    degenerate_spatial = 30,
    k_too_large = 31,
    empty_pool = 32,
    missing_activations = 33,
    missing_weights = 40,
    bundle_mismatch = 41,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }
    int exit_code() const noexcept { return static_cast<int>(code_); }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw Error(code, message);
}

}  // namespace fmprune
