#pragma once

#include <stdexcept>
#include <string>

namespace avseg {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual const char* kind() const { return "error"; }
};

/// Bad configuration or argument values (wrong shapes, invalid ranges).
struct ConfigError : Error {
    using Error::Error;
    const char* kind() const override { return "config"; }
};

/// Malformed or missing data (dataset trees, waveforms, masks).
struct DataError : Error {
    using Error::Error;
    const char* kind() const override { return "data"; }
};

/// Filesystem / codec failures.
struct IoError : Error {
    using Error::Error;
    const char* kind() const override { return "io"; }
};

/// Runtime failures of the training loop (NaN loss, checkpoint mismatch).
struct TrainError : Error {
    using Error::Error;
    const char* kind() const override { return "train"; }
};

}  // namespace avseg
