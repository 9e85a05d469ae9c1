// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace avflow {

// Exit codes used by the CLI: 0 ok, 2 usage, 3 config, 4 numeric, 5 I/O.

/// Bad configuration value, unknown preset, malformed config file.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-finite values, failed numerical contracts.
class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

/// File missing, truncated, or malformed on disk.
class IoError : public std::runtime_error {
public:
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// An operation was called with arguments violating its contract
/// (shape mismatch, wrong modality, out-of-range argument).
class ContractError : public NumericError {
public:
    explicit ContractError(const std::string& msg) : NumericError(msg) {}
};

inline void check_contract(bool ok, const std::string& msg) {
    if (!ok) throw ContractError(msg);
}

}  // namespace avflow
