#pragma once

#include <stdexcept>
#include <string>

namespace ruq {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A precondition on arguments or shapes was violated.
class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A numerical procedure failed (non-convergence, divergence, bad embedding).
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Malformed or unreadable persisted data.
class FormatError : public Error {
public:
    enum class Kind { bad_magic, truncated, dim_overflow, degenerate_shape, io };

    FormatError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}

    Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

} // namespace ruq
