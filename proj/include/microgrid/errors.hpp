#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace microgrid {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed input document. Carries the 1-based line number when known.
class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0, std::string field = {})
        : Error(format(what, line, field)), line_(line), field_(std::move(field)) {}

    [[nodiscard]] int line() const noexcept { return line_; }
    [[nodiscard]] const std::string& field() const noexcept { return field_; }

private:
    static std::string format(const std::string& what, int line, const std::string& field) {
        std::string msg = "parse error";
        if (line > 0) msg += " at line " + std::to_string(line);
        if (!field.empty()) msg += " (field '" + field + "')";
        return msg + ": " + what;
    }

    int line_;
    std::string field_;
};

/// Machine-readable code plus human message for one broken model invariant.
struct Violation {
    std::string code;
    std::string message;

    bool operator==(const Violation&) const = default;
};

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Violation> violations)
        : Error(format(violations)), violations_(std::move(violations)) {}

    ValidationError(std::string code, std::string message)
        : ValidationError(std::vector<Violation>{{std::move(code), std::move(message)}}) {}

    [[nodiscard]] const std::vector<Violation>& violations() const noexcept { return violations_; }

    [[nodiscard]] bool has(const std::string& code) const {
        for (const auto& v : violations_)
            if (v.code == code) return true;
        return false;
    }

private:
    static std::string format(const std::vector<Violation>& vs) {
        std::string msg = "validation failed";
        for (const auto& v : vs) msg += "\n  [" + v.code + "] " + v.message;
        return msg;
    }

    std::vector<Violation> violations_;
};

/// Eigensolver, factorization or root-bracketing failure.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// A mathematical guarantee was observed to fail; indicates a bug, not bad input.
class ConsistencyError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace microgrid
