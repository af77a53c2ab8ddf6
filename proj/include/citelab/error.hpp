#pragma once

#include <stdexcept>
#include <string>

namespace citelab {

// Argument outside the mathematical domain of an operation (negative time,
// negative fitness).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Invalid parameters or malformed input data.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IntegrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InversionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SampleSizeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, std::size_t line)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}

    std::size_t line() const noexcept { return line_; }

private:
    std::size_t line_;
};

}  // namespace citelab
