#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cpd {

// Base for detection-domain failures (bad input data, untabulated critical
// values, not enough training data). Precondition violations on arguments
// throw std::invalid_argument instead.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t row, std::size_t column)
        : Error(what), row_(row), column_(column) {}

    std::size_t row() const noexcept { return row_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t row_;
    std::size_t column_;
};

class NotTabulated : public Error {
public:
    using Error::Error;
};

class InsufficientTraining : public Error {
public:
    InsufficientTraining(const std::string& what, std::size_t last_cp)
        : Error(what), last_cp_(last_cp) {}

    /// Last change point found in the history (1-based, 0 when none).
    std::size_t last_cp() const noexcept { return last_cp_; }

private:
    std::size_t last_cp_;
};

}  // namespace cpd
