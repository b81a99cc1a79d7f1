#pragma once

#include <stdexcept>
#include <string>

namespace evsum {

/// Broad failure classes. The CLI maps them onto exit codes 1 and 2.
enum class ErrorKind {
    kValidation,
    kIo,
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline Error validation_error(const std::string& what) {
    return Error(ErrorKind::kValidation, what);
}

inline Error io_error(const std::string& what) {
    return Error(ErrorKind::kIo, what);
}

/// A pipeline failure tagged with the stage that raised it.
class StageError : public Error {
public:
    StageError(std::string stage, const Error& cause)
        : Error(cause.kind(), "stage '" + stage + "': " + cause.what()),
          stage_(std::move(stage)) {}

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

}  // namespace evsum
