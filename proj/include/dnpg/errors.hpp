#pragma once

#include <stdexcept>
#include <string>

namespace dnpg {

// Exit-code families used by the CLI: config -> 2, numerical -> 3, io -> 4.

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace dnpg
