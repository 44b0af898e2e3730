#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace pinr {

/// Invalid configuration: mismatched shapes, out-of-range options, bad masks.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid input data (non-finite coordinates, wrong image range, ...).
class InputError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// API misuse, e.g. replaying a tape twice.
class UsageError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// File or codec failure.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Numerical failure during optimization. Carries the step where it happened.
class TrainingError : public std::runtime_error {
public:
    TrainingError(const std::string& what, std::int64_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::int64_t step() const noexcept { return step_; }

private:
    std::int64_t step_;
};

}  // namespace pinr
