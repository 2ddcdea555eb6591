#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace csc {

// Shape mismatch between two inputs that must agree.
struct DimensionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Input shape the procedure does not define (e.g. T not divisible by T_*).
struct UnsupportedShapeError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct InvalidWindowError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct MissingControlsError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct MissingCovariatesError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

class RankDeficiencyError : public std::runtime_error {
public:
    RankDeficiencyError(const std::string& what, double condition_number)
        : std::runtime_error(what + " (condition number " + std::to_string(condition_number) + ")"),
          condition_number_(condition_number) {}

    [[nodiscard]] double condition_number() const noexcept { return condition_number_; }

private:
    double condition_number_;
};

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    // 1-based; 0 when the error is not attached to a line.
    [[nodiscard]] std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace csc
