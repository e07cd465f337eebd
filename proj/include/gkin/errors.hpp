#pragma once

#include <stdexcept>
#include <string>

namespace gkin {

/// Argument outside the admissible set of an operation.
class InvalidParameter : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed or out-of-range configuration; carries the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// NaN/Inf or another unrecoverable state in a running simulation.
class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Post-processing could not produce a result (e.g. too few tail bins).
class AnalysisUnavailable : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace gkin
