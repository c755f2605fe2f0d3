#include "pelvseg/error.hpp"

namespace pelvseg {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidClass: return "InvalidClass";
    case ErrorCode::UnmappedLabel: return "UnmappedLabel";
    case ErrorCode::InvalidVolume: return "InvalidVolume";
    case ErrorCode::NotNifti: return "NotNifti";
    case ErrorCode::UnsupportedDatatype: return "UnsupportedDatatype";
    case ErrorCode::UnsupportedShape: return "UnsupportedShape";
    case ErrorCode::NonIntegralLabels: return "NonIntegralLabels";
    case ErrorCode::ScaledLabels: return "ScaledLabels";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::FullMask: return "FullMask";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::TooFewCases: return "TooFewCases";
    case ErrorCode::SpecOutOfBounds: return "SpecOutOfBounds";
    case ErrorCode::UnsatisfiableGap: return "UnsatisfiableGap";
    case ErrorCode::RaggedMatrix: return "RaggedMatrix";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::UsageError: return "UsageError";
    }
    return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

} // namespace pelvseg
