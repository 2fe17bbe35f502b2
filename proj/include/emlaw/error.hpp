#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace emlaw {

enum class ErrorCode {
    InvalidArgument,
    InvalidTokenizer,
    UnknownToken,
    EmptyAnswer,
    EmptySequence,
    EmptyDistribution,
    InconsistentLength,
    MissingDistance,
    InsufficientData,
    DegenerateAbscissa,
    DegenerateVariance,
    BackendUnavailable,
    BackendRejected,
    ProtocolError,
    NoEligibleDocuments,
    SamplingStalled,
    InsufficientLevelSets,
    UnknownLabel,
    InsufficientSuspectData,
    Io,
    Parse,
};

std::string_view to_string(ErrorCode code) noexcept;

// All domain failures surface as this exception; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

    bool retryable() const noexcept { return code_ == ErrorCode::BackendUnavailable; }

private:
    ErrorCode code_;
};

// Non-2xx response from a completion server.
class BackendRejected : public Error {
public:
    BackendRejected(int status, std::string body_excerpt)
        : Error(ErrorCode::BackendRejected,
                "HTTP " + std::to_string(status) + ": " + body_excerpt),
          status_(status), body_(std::move(body_excerpt)) {}

    int status() const noexcept { return status_; }
    const std::string& body_excerpt() const noexcept { return body_; }

private:
    int status_;
    std::string body_;
};

}  // namespace emlaw
