#pragma once

#include <stdexcept>
#include <string>

namespace fecsynth {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid arguments caught before any side effect (no network call is made).
struct ValidationError : Error {
    using Error::Error;
};

struct GatewayError : Error {
    using Error::Error;
};

/// Retries exhausted or the transport layer failed outright.
struct TransportError : GatewayError {
    using GatewayError::GatewayError;
};

/// Credential rejected; never retried.
struct AuthError : GatewayError {
    using GatewayError::GatewayError;
};

/// Backend answered but produced empty or filtered output.
struct BackendRefusal : GatewayError {
    using GatewayError::GatewayError;
};

/// Mock backend has no fixture for the request key.
struct FixtureMiss : GatewayError {
    using GatewayError::GatewayError;
};

struct PlannerUnparseable : Error {
    using Error::Error;
};

struct InjectionParseError : Error {
    using Error::Error;
};

struct NotAJsonArray : InjectionParseError {
    using InjectionParseError::InjectionParseError;
};

struct NonStringElement : InjectionParseError {
    using InjectionParseError::InjectionParseError;
};

struct EmptyInjection : Error {
    using Error::Error;
};

struct JudgeUnparseable : Error {
    using Error::Error;
};

struct EmptyReferenceList : Error {
    using Error::Error;
};

struct IdMismatch : Error {
    using Error::Error;
};

struct CorruptManifest : Error {
    using Error::Error;
};

struct DuplicateId : Error {
    using Error::Error;
};

struct UnknownDoc : Error {
    using Error::Error;
};

struct UnreadableFile : Error {
    using Error::Error;
};

struct UnknownDatasetKind : Error {
    using Error::Error;
};

struct MissingBinding : Error {
    using Error::Error;
};

} // namespace fecsynth
