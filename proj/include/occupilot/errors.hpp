#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace occupilot {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    enum class Kind { MalformedRow, NonMonotonicTimestamp, MissingColumn };

    ParseError(Kind kind, std::size_t line_no, std::string column, const std::string& what)
        : Error(what), kind_(kind), line_no_(line_no), column_(std::move(column)) {}

    static ParseError malformed_row(std::size_t line_no, const std::string& detail) {
        return {Kind::MalformedRow, line_no, {},
                "malformed row at line " + std::to_string(line_no) + ": " + detail};
    }
    static ParseError non_monotonic(std::size_t line_no) {
        return {Kind::NonMonotonicTimestamp, line_no, {},
                "non-monotonic timestamp at line " + std::to_string(line_no)};
    }
    static ParseError missing_column(const std::string& name) {
        return {Kind::MissingColumn, 0, name, "missing column '" + name + "'"};
    }

    Kind kind() const noexcept { return kind_; }
    std::size_t line_no() const noexcept { return line_no_; }
    const std::string& column() const noexcept { return column_; }

private:
    Kind kind_;
    std::size_t line_no_;
    std::string column_;
};

class PeriodMismatch : public Error {
public:
    using Error::Error;
};

class SingleClass : public Error {
public:
    SingleClass() : Error("only one class present") {}
};

class DimensionMismatch : public Error {
public:
    DimensionMismatch(std::size_t expected, std::size_t got)
        : Error("dimension mismatch: expected " + std::to_string(expected) + ", got " +
                std::to_string(got)) {}
};

class NonFiniteLoss : public Error {
public:
    explicit NonFiniteLoss(std::size_t epoch)
        : Error("non-finite loss at epoch " + std::to_string(epoch)), epoch_(epoch) {}
    std::size_t epoch() const noexcept { return epoch_; }

private:
    std::size_t epoch_;
};

class UncalibratedModel : public Error {
public:
    UncalibratedModel() : Error("autoencoder threshold has not been calibrated") {}
};

class LengthMismatch : public Error {
public:
    using Error::Error;
};

class EmptyEvaluation : public Error {
public:
    EmptyEvaluation() : Error("no rows to evaluate") {}
};

class PerplexityInfeasible : public Error {
public:
    using Error::Error;
};

class TimelineMismatch : public Error {
public:
    using Error::Error;
};

class TooFewHouseholds : public Error {
public:
    explicit TooFewHouseholds(std::size_t n)
        : Error("cohort report needs at least 4 households, got " + std::to_string(n)) {}
};

/// Invalid configuration or precondition violation.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace occupilot
