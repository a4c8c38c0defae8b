#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>

namespace evoact {

// Base of every error raised by the library; the CLI maps these to a nonzero exit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Overflow or NaN anywhere inside an activation evaluation.
class NonFinite : public Error {
public:
    NonFinite() : Error("non-finite value in activation evaluation") {}
    explicit NonFinite(const std::string& what) : Error(what) {}
};

class ParseError : public Error {
public:
    ParseError(std::size_t position, std::string expected, const std::string& found)
        : Error("parse error at position " + std::to_string(position) + ": expected " + expected +
                ", found " + found),
          position_(position),
          expected_(std::move(expected)) {}

    [[nodiscard]] std::size_t position() const noexcept { return position_; }
    [[nodiscard]] const std::string& expected() const noexcept { return expected_; }

private:
    std::size_t position_;
    std::string expected_;
};

class UnknownScheme : public Error {
public:
    explicit UnknownScheme(const std::string& name) : Error("unknown weight initialization scheme '" + name + "'") {}
};

class MissingClass : public Error {
public:
    explicit MissingClass(std::size_t cls)
        : Error("class " + std::to_string(cls) + " has no samples"), cls_(cls) {}
    [[nodiscard]] std::size_t missing_class() const noexcept { return cls_; }

private:
    std::size_t cls_;
};

class DataError : public Error {
public:
    enum class Kind { missing_column, non_numeric_cell, empty_file, missing_value, malformed };

    DataError(Kind kind, const std::string& what) : Error(what), kind_(kind) {}
    [[nodiscard]] Kind kind() const noexcept { return kind_; }

private:
    Kind kind_;
};

class TooSmall : public Error {
public:
    using Error::Error;
};

// Configuration rejected before any compute; `field` is the dotted path of the offending key.
class ConfigError : public Error {
public:
    ConfigError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}
    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

class MismatchedMetrics : public Error {
public:
    using Error::Error;
};

} // namespace evoact
