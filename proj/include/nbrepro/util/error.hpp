#pragma once

#include <stdexcept>
#include <string>

namespace nbrepro {

// Root of every exception the library throws on purpose.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Failure that may succeed on retry (network timeouts, flaky clones).
class TransientError : public Error {
public:
    using Error::Error;
};

// A subcommand was invoked before the state it consumes exists.
class PrerequisiteError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace nbrepro
