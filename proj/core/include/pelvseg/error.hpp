#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pelvseg {

enum class ErrorCode {
    InvalidClass,
    UnmappedLabel,
    InvalidVolume,
    NotNifti,
    UnsupportedDatatype,
    UnsupportedShape,
    NonIntegralLabels,
    ScaledLabels,
    LabelOutOfRange,
    IoError,
    EmptyMask,
    FullMask,
    DimMismatch,
    EmptyInput,
    TooFewCases,
    SpecOutOfBounds,
    UnsatisfiableGap,
    RaggedMatrix,
    ParseError,
    UsageError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Single exception type for the library; callers branch on code().
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message);

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

} // namespace pelvseg
