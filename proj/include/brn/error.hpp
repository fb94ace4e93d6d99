#pragma once

#include <stdexcept>
#include <string>

namespace brn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
   using std::runtime_error::runtime_error;
};

/// A distance fell below the far-field floor of the path-loss law.
class FarFieldError : public Error {
public:
   using Error::Error;
};

/// An input violated a documented precondition.
class InvalidArgument : public Error {
public:
   using Error::Error;
};

} // namespace brn
