// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the wbpref Project.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

namespace wbpref {

/// Coarse failure class; the CLI maps it onto its exit codes.
enum class ErrorCategory { Usage, Data, Numeric };

class Error : public std::runtime_error {
public:
    Error(ErrorCategory category, const std::string& what)
        : std::runtime_error(what), category_(category) {}

    ErrorCategory category() const noexcept { return category_; }

private:
    ErrorCategory category_;
};

/// Mathematically undefined input, e.g. a zero-norm vector.
class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

/// Caller broke an API contract (mismatched spaces, bad arguments).
class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorCategory::Usage, what) {}
};

/// Invalid configuration values (equal calibration CCTs, epochs = 0, ...).
class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& what) : Error(ErrorCategory::Usage, what) {}
};

/// Singular matrices, non-finite intermediates.
class NumericError : public Error {
public:
    explicit NumericError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

/// Chromaticity outside the Robertson table's coverage.
class OutOfGamutError : public Error {
public:
    explicit OutOfGamutError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

/// Least-squares fit could not be solved (rank deficiency, too few pairs).
class FitError : public Error {
public:
    explicit FitError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

/// Synthetic generator gave up (rejection sampling exhausted, bad vectors).
class GenerationError : public Error {
public:
    explicit GenerationError(const std::string& what) : Error(ErrorCategory::Numeric, what) {}
};

/// Filesystem failures and truncated payloads.
class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorCategory::Data, what) {}
};

/// Text or binary document that does not follow its format. Carries the line
/// (1-based) and/or byte offset when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, std::optional<std::size_t> line = std::nullopt,
               std::optional<std::size_t> byte_offset = std::nullopt)
        : Error(ErrorCategory::Data, decorate(what, line, byte_offset)),
          line_(line),
          byte_offset_(byte_offset) {}

    std::optional<std::size_t> line() const noexcept { return line_; }
    std::optional<std::size_t> byte_offset() const noexcept { return byte_offset_; }

private:
    static std::string decorate(const std::string& what, std::optional<std::size_t> line,
                                std::optional<std::size_t> offset) {
        std::string out = what;
        if (line) out += " (line " + std::to_string(*line) + ")";
        if (offset) out += " (byte offset " + std::to_string(*offset) + ")";
        return out;
    }

    std::optional<std::size_t> line_;
    std::optional<std::size_t> byte_offset_;
};

/// Rethrows `e` with `context` prepended, keeping its category.
[[noreturn]] inline void rethrow_with_context(const Error& e, const std::string& context) {
    const std::string msg = context + ": " + e.what();
    switch (e.category()) {
        case ErrorCategory::Usage: throw UsageError(msg);
        case ErrorCategory::Data: throw ParseError(msg);
        case ErrorCategory::Numeric: break;
    }
    throw NumericError(msg);
}

}  // namespace wbpref
