#include "enrichkit/error.hpp"

namespace enrichkit {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::MalformedRecord: return "MalformedRecord";
        case ErrorCode::DuplicateId: return "DuplicateId";
        case ErrorCode::UnknownQuery: return "UnknownQuery";
        case ErrorCode::UnknownMethodTag: return "UnknownMethodTag";
        case ErrorCode::UnknownDocument: return "UnknownDocument";
        case ErrorCode::EmptyView: return "EmptyView";
        case ErrorCode::EmptyQueryAfterStemming: return "EmptyQueryAfterStemming";
        case ErrorCode::MissingEmbedding: return "MissingEmbedding";
        case ErrorCode::DimensionMismatch: return "DimensionMismatch";
        case ErrorCode::InsufficientRelevant: return "InsufficientRelevant";
        case ErrorCode::NoEligiblePartner: return "NoEligiblePartner";
        case ErrorCode::ArityMismatch: return "ArityMismatch";
        case ErrorCode::NoRelevantDocs: return "NoRelevantDocs";
        case ErrorCode::LengthMismatch: return "LengthMismatch";
        case ErrorCode::DegenerateCategories: return "DegenerateCategories";
        case ErrorCode::TooManyPassages: return "TooManyPassages";
        case ErrorCode::NoMatch: return "NoMatch";
        case ErrorCode::MissingProvenance: return "MissingProvenance";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Timeout: return "Timeout";
        case ErrorCode::ProtocolError: return "ProtocolError";
        case ErrorCode::BackendError: return "BackendError";
        case ErrorCode::NliBackendError: return "NliBackendError";
        case ErrorCode::DimensionDrift: return "DimensionDrift";
        case ErrorCode::ScriptedTableMiss: return "ScriptedTableMiss";
        case ErrorCode::Config: return "Config";
    }
    return "Unknown";
}

}  // namespace enrichkit
