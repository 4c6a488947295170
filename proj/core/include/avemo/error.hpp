#pragma once

#include <stdexcept>
#include <string>

namespace avemo {

// Malformed or missing input data: bad files, out-of-range labels, wrong shapes on disk.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid parameters or configuration supplied by the caller.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Non-finite values or failed numerical checks.
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace avemo
