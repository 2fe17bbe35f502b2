#include "emlaw/error.hpp"

namespace emlaw {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::InvalidTokenizer: return "InvalidTokenizer";
        case ErrorCode::UnknownToken: return "UnknownToken";
        case ErrorCode::EmptyAnswer: return "EmptyAnswer";
        case ErrorCode::EmptySequence: return "EmptySequence";
        case ErrorCode::EmptyDistribution: return "EmptyDistribution";
        case ErrorCode::InconsistentLength: return "InconsistentLength";
        case ErrorCode::MissingDistance: return "MissingDistance";
        case ErrorCode::InsufficientData: return "InsufficientData";
        case ErrorCode::DegenerateAbscissa: return "DegenerateAbscissa";
        case ErrorCode::DegenerateVariance: return "DegenerateVariance";
        case ErrorCode::BackendUnavailable: return "BackendUnavailable";
        case ErrorCode::BackendRejected: return "BackendRejected";
        case ErrorCode::ProtocolError: return "ProtocolError";
        case ErrorCode::NoEligibleDocuments: return "NoEligibleDocuments";
        case ErrorCode::SamplingStalled: return "SamplingStalled";
        case ErrorCode::InsufficientLevelSets: return "InsufficientLevelSets";
        case ErrorCode::UnknownLabel: return "UnknownLabel";
        case ErrorCode::InsufficientSuspectData: return "InsufficientSuspectData";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Parse: return "Parse";
    }
    return "Unknown";
}

}  // namespace emlaw
