#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace contrail {

// Base for every error the library raises. Callers that only want a
// diagnostic can catch this and print what().
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed input text or binary container. byte_offset points at the
// first offending byte when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::size_t byte_offset)
        : Error(what), byte_offset_(byte_offset) {}

    [[nodiscard]] std::size_t byte_offset() const noexcept { return byte_offset_; }

private:
    std::size_t byte_offset_;
};

// Well-formed input that violates a schema or invariant.
class ValidationError : public Error {
public:
    ValidationError(const std::string& what, std::size_t record_index, std::string field)
        : Error(what), record_index_(record_index), field_(std::move(field)) {}

    [[nodiscard]] std::size_t record_index() const noexcept { return record_index_; }
    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    std::size_t record_index_;
    std::string field_;
};

// Mismatched grid or tensor dimensions.
class ShapeError : public Error {
public:
    using Error::Error;
};

}  // namespace contrail
