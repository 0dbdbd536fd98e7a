#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace forge {

enum class ErrorCode {
    InvalidArgument,
    MalformedHeader,
    NonFiniteSample,
    DimensionOverflow,
    DimensionMismatch,
    IoFailure,
    UnsupportedBitDepth,
    OutOfRange,
    DegenerateBox,
    BBoxOutOfFrame,
    EmptyMask,
    TooFewInstances,
    InpaintFailure,
    InstanceMissing,
    ShapeMismatch,
    BackendUnavailable,
    Timeout,
    NoForeground,
    UnparsableInstruction,
    InvalidBundle,
    MalformedResponse,
    SchemaViolation,
    PortInUse,
};

std::string_view to_string(ErrorCode code) noexcept;
/// Inverse of to_string; unknown names map to nullopt.
std::optional<ErrorCode> parse_error_code(std::string_view name) noexcept;

// All recoverable failures in the toolkit surface as this type; the code is
// stable and is what the service maps onto its JSON error body.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

    ErrorCode code() const noexcept { return code_; }
    const std::string& message() const noexcept { return message_; }

private:
    ErrorCode code_;
    std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace forge
