#pragma once

#include <stdexcept>
#include <string>

namespace bose {

/// Bad arguments or incompatible flag/kind combinations.
class UsageError : public std::runtime_error {
public:
    explicit UsageError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed or invariant-violating data (benchmark files, store files, payloads).
class DataError : public std::runtime_error {
public:
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Transport, protocol, or capability failures of an inference backend.
class BackendError : public std::runtime_error {
public:
    explicit BackendError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem-level failures.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace bose
