#pragma once

#include <stdexcept>
#include <string>

namespace vieval {

/// Base class for every error raised by the harness. Catching this at the
/// CLI boundary is enough to turn any failure into a diagnostic + exit code.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input data: bad JSONL records, missing required fields,
/// out-of-range labels, unknown scenario names.
class SchemaError : public Error {
public:
    explicit SchemaError(const std::string& msg) : Error(msg) {}
};

/// Prompt assembly failures: unknown placeholder, missing sample field,
/// more choices than available option letters.
class RenderError : public Error {
public:
    explicit RenderError(const std::string& msg) : Error(msg) {}
};

/// Transport-level endpoint failure after retries are exhausted
/// (connection refused, 5xx, malformed response body).
class EndpointError : public Error {
public:
    explicit EndpointError(const std::string& msg) : Error(msg) {}
};

/// The endpoint answered but does not implement the requested capability
/// (e.g. no scoring route). Callers degrade gracefully instead of aborting.
class CapabilityError : public EndpointError {
public:
    explicit CapabilityError(const std::string& msg) : EndpointError(msg) {}
};

/// A metric was asked to evaluate inputs on which it has no defined value
/// (e.g. AUC with a single class present, BLEU with empty references).
class UndefinedMetricError : public Error {
public:
    explicit UndefinedMetricError(const std::string& msg) : Error(msg) {}
};

/// Violation of the wire protocol by a remote model server: missing fields,
/// token/logprob count mismatches, non-JSON payloads.
class ProtocolError : public Error {
public:
    explicit ProtocolError(const std::string& msg) : Error(msg) {}
};

}  // namespace vieval
