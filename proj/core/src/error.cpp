#include "gamma_audit/error.hpp"

namespace gamma_audit {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::RoiTooSmall: return "RoiTooSmall";
    case ErrorCode::EmptyMask: return "EmptyMask";
    case ErrorCode::GeometryMismatch: return "GeometryMismatch";
    case ErrorCode::EmptyMap: return "EmptyMap";
    case ErrorCode::ZeroMass: return "ZeroMass";
    case ErrorCode::EmptyFactor: return "EmptyFactor";
    case ErrorCode::UnbalancedDesign: return "UnbalancedDesign";
    case ErrorCode::SingularFit: return "SingularFit";
    case ErrorCode::NonFiniteResponse: return "NonFiniteResponse";
    case ErrorCode::ZeroVariance: return "ZeroVariance";
    case ErrorCode::ConstantInput: return "ConstantInput";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::TooFewSamples: return "TooFewSamples";
    case ErrorCode::MisalignedDesigns: return "MisalignedDesigns";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::IoError: return "IoError";
    }
    return "Unknown";
}

}  // namespace gamma_audit
