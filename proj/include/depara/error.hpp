#pragma once

#include <stdexcept>
#include <string>

namespace depara {

// Base for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Caller supplied something that violates a documented precondition.
class ValidationError : public Error {
public:
    using Error::Error;
};

// A DEPB/DEPN byte stream is malformed, truncated or corrupt.
class FormatError : public Error {
public:
    using Error::Error;
};

// The underlying sink or source failed.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace depara
