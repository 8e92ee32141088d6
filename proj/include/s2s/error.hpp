#pragma once

#include <stdexcept>
#include <string>

namespace s2s {

// Base of every error raised by the library. Callers that only need a
// message can catch std::runtime_error.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Tensor or image extents disagree.
class DimensionError : public Error {
public:
    using Error::Error;
};

// A documented precondition was violated by the caller.
class ContractError : public Error {
public:
    using Error::Error;
};

// Malformed input text/bytes. Carries the line (text formats) or byte
// offset (binary formats) where parsing stopped, -1 when not applicable.
class ParseError : public Error {
public:
    ParseError(const std::string& what, long location = -1)
        : Error(what), location_(location) {}
    long location() const noexcept { return location_; }

private:
    long location_;
};

// File-level format problems: bad magic, version, truncation, unknown type.
class FormatError : public Error {
public:
    using Error::Error;
};

// Inconsistent training or service configuration.
class ConfigError : public Error {
public:
    using Error::Error;
};

// A discriminator patch size outside the supported family.
class UnsupportedPatchSize : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// Training produced a non-finite loss; the message names the term.
class TrainingDiverged : public Error {
public:
    using Error::Error;
};

} // namespace s2s
