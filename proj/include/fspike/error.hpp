#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fspike {

// Failure classes surfaced to callers. Precondition violations use
// std::invalid_argument; everything detected while computing uses Error.
enum class ErrorKind { usage, numerical, io, format };

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

// Non-finite state or right-hand side. `layer` is -1 when the failing
// system is not a network.
class DivergenceError : public Error {
public:
    DivergenceError(int step, int layer, const std::string& what)
        : Error(ErrorKind::numerical, what), step_(step), layer_(layer) {}
    int step() const noexcept { return step_; }
    int layer() const noexcept { return layer_; }

private:
    int step_;
    int layer_;
};

class PrecisionError : public Error {
public:
    explicit PrecisionError(const std::string& what) : Error(ErrorKind::numerical, what) {}
};

class FormatError : public Error {
public:
    FormatError(std::size_t offset, const std::string& what)
        : Error(ErrorKind::format, what + " (byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::io, what) {}
};

// Process exit code for the command line: 1 usage, 2 numerical, 3 I/O.
constexpr int exit_code_for(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::usage: return 1;
    case ErrorKind::numerical: return 2;
    case ErrorKind::io:
    case ErrorKind::format: return 3;
    }
    return 1;
}

const char* to_string(ErrorKind kind);

} // namespace fspike
