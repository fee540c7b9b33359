#pragma once

#include <stdexcept>
#include <string>

namespace law {

// Base for all errors raised by the library. The CLI maps these to exit 1.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid user-facing configuration or arguments. The CLI maps these to exit 2.
class ConfigError : public Error {
public:
    using Error::Error;
};

// File read/write failures, malformed or truncated artifacts.
class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace law
