#pragma once

#include <stdexcept>
#include <string>

namespace ram {

// Base of every error the library raises. `exit_code` is the CLI contract:
// 1 usage/config, 2 data, 3 numeric.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what, int exit_code)
        : std::runtime_error(what), exit_code_(exit_code) {}
    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(what, 1) {}
};

// Shape, extent or channel-count violations.
class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& what) : Error(what, 1) {}
};

// Tape misuse (second backward, foreign tensors, ...).
class StateError : public Error {
public:
    explicit StateError(const std::string& what) : Error(what, 1) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& what) : Error(what, 2) {}
};

// Checkpoint / manifest parse failures.
class FormatError : public Error {
public:
    explicit FormatError(const std::string& what) : Error(what, 2) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(what, 3) {}
};

}  // namespace ram
