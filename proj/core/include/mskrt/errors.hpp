#pragma once

#include <stdexcept>
#include <string>

namespace mskrt {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input text (model, session, config, calibration, CSV).
class ParseError : public Error {
public:
    using Error::Error;
};

/// Well-formed input that violates a structural invariant. `entity()` names
/// the offending segment, joint, coordinate, muscle or frame.
class ValidationError : public Error {
public:
    ValidationError(std::string entity, const std::string& what)
        : Error(entity + ": " + what), entity_(std::move(entity)) {}

    const std::string& entity() const noexcept { return entity_; }

private:
    std::string entity_;
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace mskrt
