#pragma once
#include <stdexcept>
#include <string>

namespace vab {

// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Tensor/layer shape mismatch. Message names both shapes.
struct DimensionError : Error {
    using Error::Error;
};

// Invalid argument value (e.g. non-positive temperature).
struct ParameterError : Error {
    using Error::Error;
};

// Invalid input to a metric or fitting routine.
struct InputError : Error {
    using Error::Error;
};

// Malformed file contents (IDX container, checkpoint, code file).
struct FormatError : Error {
    using Error::Error;
};

// Payload shorter than the header promises.
struct TruncationError : FormatError {
    using FormatError::FormatError;
};

// Non-finite value encountered during training; message names the
// offending term or parameter group.
struct TrainingError : Error {
    using Error::Error;
};

// Bad key or value in a configuration file.
struct ConfigError : Error {
    using Error::Error;
};

} // namespace vab
