#pragma once

#include <stdexcept>
#include <string>

namespace tabaudit {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Unreadable, malformed or inconsistent input files.
class InputError : public Error {
public:
    using Error::Error;
};

/// A precondition on arguments was violated (sizes, bounds, schema mismatch).
class DomainError : public Error {
public:
    using Error::Error;
};

} // namespace tabaudit
