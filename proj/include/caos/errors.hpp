#pragma once

#include <stdexcept>
#include <string>

namespace caos {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class UnsupportedOrder : public Error {
public:
    using Error::Error;
};

/// Carrier or sample counts per bit are not whole numbers.
class TimingError : public Error {
public:
    using Error::Error;
};

class NyquistError : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

/// A stream was decoded against a plan with different W, F or sample rate.
class PlanMismatch : public Error {
public:
    using Error::Error;
};

class LayoutError : public Error {
public:
    using Error::Error;
};

class EmptyRegion : public Error {
public:
    using Error::Error;
};

/// Malformed configuration or file content. `line` is 0 when unknown.
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what, int line = 0)
        : Error(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}
    int line() const noexcept { return line_; }

private:
    int line_;
};

}  // namespace caos
