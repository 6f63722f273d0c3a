#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace imet {

enum class ErrorKind {
    invalid_shape,
    invalid_config,
    invalid_label,
    invalid_batch,
    invalid_input,
    state,
    degenerate_class,
    insufficient_class_data,
    insufficient_data,
    malformed_archive,
    inconsistent_archive,
    undefined_curve,
    io,
};

/// Stable kebab-case name used in machine-readable error lines.
std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

} // namespace imet
