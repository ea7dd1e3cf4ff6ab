#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace comfort {

// Base class for all toolkit errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration values (negative deviations, empty schemas, rate >= 1, ...).
// CLI exit code 1.
struct ConfigError : Error {
    using Error::Error;
};

// Data that fails schema validation (bad CSV cells, out-of-scale labels, ...).
// CLI exit code 1.
struct ValidationError : Error {
    using Error::Error;
};

// Filesystem and network failures. CLI exit code 2.
struct IoError : Error {
    using Error::Error;
};

// Model file that exists but cannot be trusted: version mismatch, truncation,
// checksum failure, inconsistent shapes. CLI exit code 2.
struct ModelLoadError : Error {
    using Error::Error;
};

// Non-finite loss or gradient during training. CLI exit code 3.
struct DivergenceError : Error {
    DivergenceError(const std::string& what, std::size_t epoch)
        : Error(what), epoch(epoch) {}
    std::size_t epoch = 0;
};

// Stable exit-code contract for CI.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitIo = 2,
    kExitDivergence = 3,
};

}  // namespace comfort
