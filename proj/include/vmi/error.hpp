#pragma once

#include <stdexcept>
#include <string>

namespace vmi {

// Base of every error raised by the library. The CLI maps the concrete
// subclasses onto process exit codes (see tools/vmi.cpp).
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input data problems.
class DataError : public Error {
public:
    using Error::Error;
};

class FormatError : public DataError {
public:
    using DataError::DataError;
};

class CorruptionError : public DataError {
public:
    using DataError::DataError;
};

class RangeError : public DataError {
public:
    using DataError::DataError;
};

class EmptyInputError : public DataError {
public:
    using DataError::DataError;
};

class ShapeError : public DataError {
public:
    using DataError::DataError;
};

class DegenerateInputError : public DataError {
public:
    using DataError::DataError;
};

class StratificationError : public DataError {
public:
    using DataError::DataError;
};

// Numerical failures (singular systems, diverging training).
class NumericError : public Error {
public:
    using Error::Error;
};

class DivergenceError : public NumericError {
public:
    DivergenceError(const std::string& what, int epoch) : NumericError(what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

// Configuration problems. key() names the offending config key.
class ConfigError : public Error {
public:
    explicit ConfigError(std::string key, const std::string& detail = {})
        : Error(detail.empty() ? key : key + ": " + detail), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

}  // namespace vmi
