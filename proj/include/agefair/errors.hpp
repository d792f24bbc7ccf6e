#pragma once

#include <stdexcept>
#include <string>

namespace agefair {

// Error taxonomy used across the library. The CLI maps each class to a
// categorized error line and a nonzero exit code.
class Error : public std::runtime_error {
public:
    Error(std::string kind, const std::string& msg)
        : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
    const std::string& kind() const { return kind_; }

private:
    std::string kind_;
};

class InputError : public Error {
public:
    explicit InputError(const std::string& msg) : Error("input", msg) {}
};

class DimensionError : public Error {
public:
    explicit DimensionError(const std::string& msg) : Error("dimension", msg) {}
};

class StateError : public Error {
public:
    explicit StateError(const std::string& msg) : Error("state", msg) {}
};

class FormatError : public Error {
public:
    explicit FormatError(const std::string& msg) : Error("format", msg) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error("numeric", msg) {}
};

// A fairness group with no positives or no negatives: the metric refuses
// rather than silently dropping the group.
class DegenerateGroupError : public Error {
public:
    explicit DegenerateGroupError(const std::string& msg) : Error("degenerate-group", msg) {}
};

}  // namespace agefair
