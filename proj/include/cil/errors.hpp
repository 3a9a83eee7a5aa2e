#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cil {

// Violated precondition on shapes, ranges or configuration.
class ContractError : public std::invalid_argument {
 public:
    using std::invalid_argument::invalid_argument;
};

// NaN/Inf appeared in a value or gradient.
class NumericError : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

// Malformed input file; carries the byte offset where decoding failed.
class ParseError : public std::runtime_error {
 public:
    ParseError(const std::string& what, std::size_t offset)
        : std::runtime_error(what + " (at byte offset " + std::to_string(offset) + ")"),
          offset_(offset) {}

    std::size_t offset() const noexcept { return offset_; }

 private:
    std::size_t offset_;
};

}  // namespace cil
