#pragma once

#include <stdexcept>
#include <string>

namespace antman {

/// Raised when vector or matrix extents do not line up.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A configuration violates a divisibility or finiteness constraint.
/// `constraint()` names the failing rule, e.g. "g must divide m".
class ConfigError : public std::invalid_argument {
public:
    explicit ConfigError(std::string constraint)
        : std::invalid_argument(constraint), constraint_(std::move(constraint)) {}

    const std::string& constraint() const noexcept { return constraint_; }

private:
    std::string constraint_;
};

inline void require_shape(bool ok, const char* what) {
    if (!ok) throw ShapeError(what);
}

}  // namespace antman
