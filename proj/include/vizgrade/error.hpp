#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vizgrade {

enum class Errc {
    // wire-driver
    ConnectionFailed,
    SessionNotCreated,
    StaleSession,
    NavigationTimeout,
    ScriptError,
    InvalidSequence,
    DriverError,
    DecodeError,
    // harness
    MissingFiles,
    PathEscape,
    BindFailure,
    // scene
    SchemaError,
    SelectorParseError,
    TransformParseError,
    NoGeometry,
    ColorParseError,
    // deconstruct
    AnchorNotFound,
    AmbiguousKey,
    NoFit,
    InsufficientData,
    // rubric
    DuplicateCheckId,
    PointsMismatch,
    UnboundName,
    DivisionByZero,
    TypeMismatch,
    ExpressionSyntax,
    ParameterUnresolvable,
    // interact
    TargetNotFound,
    // report-cli
    FatalEnvironment,
};

constexpr std::string_view errc_name(Errc code) noexcept
{
    switch (code) {
    case Errc::ConnectionFailed: return "ConnectionFailed";
    case Errc::SessionNotCreated: return "SessionNotCreated";
    case Errc::StaleSession: return "StaleSession";
    case Errc::NavigationTimeout: return "NavigationTimeout";
    case Errc::ScriptError: return "ScriptError";
    case Errc::InvalidSequence: return "InvalidSequence";
    case Errc::DriverError: return "DriverError";
    case Errc::DecodeError: return "DecodeError";
    case Errc::MissingFiles: return "MissingFiles";
    case Errc::PathEscape: return "PathEscape";
    case Errc::BindFailure: return "BindFailure";
    case Errc::SchemaError: return "SchemaError";
    case Errc::SelectorParseError: return "SelectorParseError";
    case Errc::TransformParseError: return "TransformParseError";
    case Errc::NoGeometry: return "NoGeometry";
    case Errc::ColorParseError: return "ColorParseError";
    case Errc::AnchorNotFound: return "AnchorNotFound";
    case Errc::AmbiguousKey: return "AmbiguousKey";
    case Errc::NoFit: return "NoFit";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::DuplicateCheckId: return "DuplicateCheckId";
    case Errc::PointsMismatch: return "PointsMismatch";
    case Errc::UnboundName: return "UnboundName";
    case Errc::DivisionByZero: return "DivisionByZero";
    case Errc::TypeMismatch: return "TypeMismatch";
    case Errc::ExpressionSyntax: return "ExpressionSyntax";
    case Errc::ParameterUnresolvable: return "ParameterUnresolvable";
    case Errc::TargetNotFound: return "TargetNotFound";
    case Errc::FatalEnvironment: return "FatalEnvironment";
    }
    return "Unknown";
}

/// Every failure raised by the library carries one of the codes above; the
/// message is the human-readable detail shown in feedback.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what)
        , code_(code)
        , detail_(what)
    {
    }

    Errc code() const noexcept { return code_; }
    const std::string& detail() const noexcept { return detail_; }

private:
    Errc code_;
    std::string detail_;
};

} // namespace vizgrade
