#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace scatex {

/// Invalid or inconsistent configuration (bad parameters, degenerate labels).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Input data violates a precondition (length mismatch, non-finite values).
class InputError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A data file could be read but its contents are malformed. Row numbers are
/// 1-based and count the header line.
class MalformedFileError : public std::runtime_error {
public:
    MalformedFileError(const std::string& path, std::size_t row, const std::string& field,
                       const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(row) + " [" + field + "]: " + what),
          row_(row), field_(field)
    {
    }

    std::size_t row() const { return row_; }
    const std::string& field() const { return field_; }

private:
    std::size_t row_;
    std::string field_;
};

/// Artifact content does not match the hash recorded by the stage that wrote it.
class IntegrityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace scatex
