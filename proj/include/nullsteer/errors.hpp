#pragma once

#include <stdexcept>
#include <string>

namespace nullsteer {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Coincident points, zero-length baselines and similar singular configurations.
class DegenerateGeometryError : public Error {
public:
    using Error::Error;
};

// Arguments outside an operation's domain (negative gain, unordered samples, ...).
class InputError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

} // namespace nullsteer
