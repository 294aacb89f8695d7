#pragma once

#include <stdexcept>
#include <string>

namespace infovol {

/// Broad failure categories. The CLI maps each to a distinct exit code.
enum class ErrorKind {
    Argument,  // precondition on arguments violated
    Config,    // configuration or validation problem
    Data,      // input data unusable (empty, malformed, degenerate)
    Numeric,   // non-finite recursion, non-convergence, unreliable result
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

struct ArgumentError : Error {
    explicit ArgumentError(const std::string& what) : Error(ErrorKind::Argument, what) {}
};

struct ConfigError : Error {
    explicit ConfigError(const std::string& what) : Error(ErrorKind::Config, what) {}
};

/// Two series that should be aligned have different lengths.
struct AlignmentError : Error {
    AlignmentError(const std::string& what, std::size_t lhs, std::size_t rhs)
        : Error(ErrorKind::Config, what + " (lengths " + std::to_string(lhs) + " and " +
                                       std::to_string(rhs) + ")"),
          lhs_len(lhs), rhs_len(rhs) {}
    std::size_t lhs_len;
    std::size_t rhs_len;
};

struct EmptyInputError : Error {
    explicit EmptyInputError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct IngestionError : Error {
    IngestionError(const std::string& what, std::size_t row_number)
        : Error(ErrorKind::Data, what + " (row " + std::to_string(row_number) + ")"), row(row_number) {}
    std::size_t row;
};

/// Input is mathematically degenerate for the requested statistic (zero variance, singular design).
struct DegenerateError : Error {
    explicit DegenerateError(const std::string& what) : Error(ErrorKind::Data, what) {}
};

struct DomainError : Error {
    explicit DomainError(const std::string& what) : Error(ErrorKind::Argument, what) {}
};

/// Recursion produced a non-finite or non-positive value at index `t`.
struct NumericError : Error {
    NumericError(const std::string& what, std::size_t index)
        : Error(ErrorKind::Numeric, what + " at t=" + std::to_string(index)), t(index) {}
    std::size_t t;
};

struct ReliabilityError : Error {
    explicit ReliabilityError(const std::string& what) : Error(ErrorKind::Numeric, what) {}
};

}  // namespace infovol
