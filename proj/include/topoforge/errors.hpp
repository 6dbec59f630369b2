#pragma once

#include <stdexcept>

namespace topoforge {

// File or stream level failure (unreadable, unwritable, bad magic bytes).
struct IoError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Content that parsed but violates a documented invariant.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad configuration file or option combination.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace topoforge
