#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace multiface {

/// Base for all library errors. `code()` is a stable machine-readable tag
/// used by the CLI's one-line error output.
class Error : public std::runtime_error {
public:
    Error(std::string code, const std::string& message)
        : std::runtime_error(message), code_(std::move(code)) {}

    const std::string& code() const noexcept { return code_; }

private:
    std::string code_;
};

class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& message) : Error("shape_mismatch", message) {}
};

class ValueError : public Error {
public:
    explicit ValueError(const std::string& message) : Error("invalid_value", message) {}
    ValueError(std::string code, const std::string& message) : Error(std::move(code), message) {}
};

class FormatError : public Error {
public:
    FormatError(std::string code, const std::string& message) : Error(std::move(code), message) {}
};

class NumericError : public Error {
public:
    NumericError(std::string code, const std::string& message) : Error(std::move(code), message) {}
};

}  // namespace multiface
