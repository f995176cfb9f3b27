#pragma once

#include <stdexcept>
#include <cstdint>
#include <string>

namespace cmarl {

// Bad configuration: wrong shapes, invalid bounds, unknown names.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A caller broke a precondition at runtime (illegal action, empty mask).
class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// API misuse, e.g. backward on a non-scalar node.
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

// Corrupt or truncated persisted data.
class IntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class VersionMismatch : public std::runtime_error {
public:
    VersionMismatch(std::uint32_t expected, std::uint32_t found)
        : std::runtime_error("version mismatch: expected " + std::to_string(expected) +
                             ", found " + std::to_string(found)),
          expected_{expected}, found_{found} {}

    std::uint32_t expected() const noexcept { return expected_; }
    std::uint32_t found() const noexcept { return found_; }

private:
    std::uint32_t expected_;
    std::uint32_t found_;
};

// Input file does not have the expected layout.
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace cmarl
