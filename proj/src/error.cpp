#include "smeta/error.hpp"

namespace smeta {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SampleCountTooSmall: return "SampleCountTooSmall";
    case ErrorCode::InvalidTargetLength: return "InvalidTargetLength";
    case ErrorCode::EmptySignal: return "EmptySignal";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::VariantMismatch: return "VariantMismatch";
    case ErrorCode::EmptyTask: return "EmptyTask";
    case ErrorCode::InsufficientSubjects: return "InsufficientSubjects";
    case ErrorCode::InsufficientSignals: return "InsufficientSignals";
    case ErrorCode::MissingSideLabel: return "MissingSideLabel";
    case ErrorCode::EmptySubject: return "EmptySubject";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::SingleClassInput: return "SingleClassInput";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InconsistentWidth: return "InconsistentWidth";
    case ErrorCode::BadEnum: return "BadEnum";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::SchemaMismatch: return "SchemaMismatch";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

}  // namespace smeta
