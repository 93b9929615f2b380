#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace reident {

/// Base class for all errors raised by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input data violates a documented invariant (overlapping spans,
/// duplicate ids, malformed record shapes, ...).
class ValidationError : public Error {
public:
    using Error::Error;
};

/// A file could not be parsed. Carries file and line when known.
class ParseError : public Error {
public:
    ParseError(std::string file, std::size_t line, const std::string& detail)
        : Error(file + ":" + std::to_string(line) + ": " + detail),
          file_(std::move(file)),
          line_(line) {}

    explicit ParseError(const std::string& detail) : Error(detail), line_(0) {}

    const std::string& file() const { return file_; }
    std::size_t line() const { return line_; }

private:
    std::string file_;
    std::size_t line_;
};

/// An LLM completion did not contain a usable answer. Carries the raw
/// completion text so callers can decide whether to retry or skip.
class ParseFailure : public Error {
public:
    explicit ParseFailure(std::string raw, const std::string& detail = "no parseable answer in completion")
        : Error(detail), raw_(std::move(raw)) {}

    const std::string& raw() const { return raw_; }

private:
    std::string raw_;
};

/// Transport or protocol failure while talking to an embedding or LLM backend.
class BackendError : public Error {
public:
    using Error::Error;
};

/// Invalid pipeline configuration. Carries every failure found, not just
/// the first, so a user can fix the whole file in one pass.
class ConfigError : public Error {
public:
    explicit ConfigError(std::vector<std::string> issues)
        : Error(join(issues)), issues_(std::move(issues)) {}

    const std::vector<std::string>& issues() const { return issues_; }

private:
    static std::string join(const std::vector<std::string>& issues) {
        std::string out = "invalid configuration:";
        for (const auto& m : issues) {
            out += "\n  - " + m;
        }
        return out;
    }

    std::vector<std::string> issues_;
};

}  // namespace reident
