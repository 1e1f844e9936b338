// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace subgeo {

/// Dimension or precondition violation on an operation's inputs.
class DimError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// An iterative routine failed to converge, or a run diverged.
class NumericalError : public std::runtime_error {
public:
    explicit NumericalError(const std::string& what, long iterations = -1)
        : std::runtime_error(what), iterations_(iterations) {}
    long iterations() const noexcept { return iterations_; }

private:
    long iterations_;
};

/// Invalid experiment configuration; carries the offending key.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what, std::string key = "")
        : std::runtime_error(what), key_(std::move(key)) {}
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace subgeo
