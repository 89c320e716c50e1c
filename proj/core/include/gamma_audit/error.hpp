#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gamma_audit {

enum class ErrorCode {
    InvalidArgument,
    OutOfBounds,
    RoiTooSmall,
    EmptyMask,
    GeometryMismatch,
    EmptyMap,
    ZeroMass,
    EmptyFactor,
    UnbalancedDesign,
    SingularFit,
    NonFiniteResponse,
    ZeroVariance,
    ConstantInput,
    LengthMismatch,
    TooFewSamples,
    MisalignedDesigns,
    FormatError,
    IoError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every library failure carries one of the codes above.
class AuditError : public std::runtime_error {
public:
    AuditError(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
    throw AuditError(code, message);
}

}  // namespace gamma_audit
