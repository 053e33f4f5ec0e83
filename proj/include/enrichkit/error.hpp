#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace enrichkit {

enum class ErrorCode {
    MalformedRecord,
    DuplicateId,
    UnknownQuery,
    UnknownMethodTag,
    UnknownDocument,
    EmptyView,
    EmptyQueryAfterStemming,
    MissingEmbedding,
    DimensionMismatch,
    InsufficientRelevant,
    NoEligiblePartner,
    ArityMismatch,
    NoRelevantDocs,
    LengthMismatch,
    DegenerateCategories,
    TooManyPassages,
    NoMatch,
    MissingProvenance,
    InvalidArgument,
    Io,
    Timeout,
    ProtocolError,
    BackendError,
    NliBackendError,
    DimensionDrift,
    ScriptedTableMiss,
    Config,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& detail)
        : std::runtime_error(std::string(to_string(code)) + ": " + detail), code_(code), detail_(detail) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

    /// True for failures caused by the model backend rather than the inputs.
    bool is_backend() const noexcept {
        return code_ == ErrorCode::Timeout || code_ == ErrorCode::ProtocolError ||
               code_ == ErrorCode::BackendError || code_ == ErrorCode::NliBackendError ||
               code_ == ErrorCode::DimensionDrift;
    }

private:
    ErrorCode code_;
    std::string detail_;
};

}  // namespace enrichkit
