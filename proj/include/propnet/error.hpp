#pragma once

#include <stdexcept>
#include <string>

namespace propnet {

// Caller passed something that violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A text record does not have the expected number of fields.
class MalformedRecord : public std::runtime_error {
 public:
  MalformedRecord(std::size_t expected, std::size_t found)
      : std::runtime_error("malformed record: expected " + std::to_string(expected) +
                           " fields, found " + std::to_string(found)),
        expected_(expected),
        found_(found) {}

  std::size_t expected() const { return expected_; }
  std::size_t found() const { return found_; }

 private:
  std::size_t expected_;
  std::size_t found_;
};

// A field could not be converted to the required type.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t field_index, const std::string& what)
      : std::runtime_error("parse error at field " + std::to_string(field_index) + ": " + what),
        field_index_(field_index) {}

  std::size_t field_index() const { return field_index_; }

 private:
  std::size_t field_index_;
};

// Binary container is corrupt, truncated, or has the wrong magic.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Weights, schemes or specs that do not fit together.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Normalization distance is zero for a sample.
class DegenerateSample : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace propnet
