#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pmatch {

// Every recoverable failure maps to one of these classes, and the CLI turns
// the class into its process exit code.  Plain std::domain_error is reserved
// for caller bugs (arguments outside a documented domain), which the CLI
// reports under the generic code.
enum class ErrorClass : int {
    generic = 1,
    parse = 2,
    insufficient_matched = 3,
    degenerate = 4,
    unequal_arms = 5,
    missing_grid_entry = 6,
};

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
    virtual ErrorClass error_class() const noexcept { return ErrorClass::generic; }
};

// Malformed input file: bad header, bad field count, unparsable value/phase.
class ParseError : public Error {
public:
    ParseError(const std::string& msg, std::size_t line)
        : Error(msg + " (line " + std::to_string(line) + ")"), line_(line) {}
    explicit ParseError(const std::string& msg) : Error(msg), line_(0) {}
    // 1-based line number in the input, 0 when not tied to a line.
    std::size_t line() const noexcept { return line_; }
    ErrorClass error_class() const noexcept override { return ErrorClass::parse; }

private:
    std::size_t line_;
};

// Fewer matched pairs than the requested method can support.
class InsufficientMatchedSamples : public Error {
public:
    using Error::Error;
    ErrorClass error_class() const noexcept override { return ErrorClass::insufficient_matched; }
};

// Data that defeats the arithmetic: zero variance, |r| = 1, and similar.
class DegenerateData : public Error {
public:
    using Error::Error;
    ErrorClass error_class() const noexcept override { return ErrorClass::degenerate; }
};

// Too few observations overall (distinct from too few *matched* pairs).
class InsufficientData : public DegenerateData {
public:
    using DegenerateData::DegenerateData;
};

// Sample correlation hit +/-1, so the variance shrinkage is undefined.
class DegenerateCorrelation : public DegenerateData {
public:
    using DegenerateData::DegenerateData;
};

// A simulation where every single run failed to produce an estimate.
class EmptyResult : public DegenerateData {
public:
    using DegenerateData::DegenerateData;
};

// Iterative fit (logistic regression) failed to converge, e.g. under
// perfect separation.
class NonConvergence : public DegenerateData {
public:
    using DegenerateData::DegenerateData;
};

// Survey arms of different sizes where equal sizes are required.
class UnequalArms : public Error {
public:
    using Error::Error;
    ErrorClass error_class() const noexcept override { return ErrorClass::unequal_arms; }
};

// Calibration grid has no usable entry for the requested design.
class MissingGridEntry : public Error {
public:
    using Error::Error;
    ErrorClass error_class() const noexcept override { return ErrorClass::missing_grid_entry; }
};

} // namespace pmatch
