#include "fmprune/error.hpp"

namespace fmprune {

std::string_view error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::invalid_argument: return "InvalidArgument";
        case ErrorCode::missing_file: return "MissingFile";
        case ErrorCode::io_failure: return "IoFailure";
        case ErrorCode::malformed_header: return "MalformedHeader";
        case ErrorCode::unsupported_dtype: return "UnsupportedDtype";
        case ErrorCode::truncated_data: return "TruncatedData";
        case ErrorCode::shape_mismatch: return "ShapeMismatch";
        case ErrorCode::manifest_invalid: return "ManifestInvalid";
        case ErrorCode::schema_error: return "SchemaError";
        case ErrorCode::channel_mismatch: return "ChannelMismatch";
        case ErrorCode::cycle_detected: return "CycleDetected";
        case ErrorCode::group_inconsistency: return "GroupInconsistency";
        case ErrorCode::dangling_layer: return "DanglingLayer";
        case ErrorCode::plan_invalid: return "PlanInvalid";
        case ErrorCode::degenerate_spatial: return "DegenerateSpatial";
        case ErrorCode::k_too_large: return "KTooLarge";
        case ErrorCode::empty_pool: return "EmptyPool";
        case ErrorCode::missing_activations: return "MissingActivations";
        case ErrorCode::missing_weights: return "MissingWeights";
        case ErrorCode::bundle_mismatch: return "BundleMismatch";
    }
    return "Unknown";
}

}  // namespace fmprune
