#pragma once

#include <stdexcept>
#include <string>

namespace agentsearch {

/// Invalid run configuration. The message names the offending key.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string key, const std::string& what)
        : std::runtime_error(key + ": " + what), key_(std::move(key)) {}

    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

/// Event log or snapshot that cannot be trusted (sequence gaps, schema mismatch).
class CorruptionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace agentsearch
