#ifndef SCCDGA_ERROR_HPP
#define SCCDGA_ERROR_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

/**
 * @file error.hpp
 *
 * @brief Exception types shared by all modules.
 */

namespace sccdga {

/**
 * Malformed input file. `line()` is 1-based, or 0 when the error is not tied to a line.
 */
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line = 0)
        : std::runtime_error(line ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/**
 * Input that parses but violates a precondition of the operation.
 */
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/**
 * Incompatible matrix shapes in a numeric kernel.
 */
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/**
 * NaN or Inf produced during a forward/backward pass or optimizer step.
 */
class NumericError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}

#endif
