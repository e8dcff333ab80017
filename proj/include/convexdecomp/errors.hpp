#pragma once

#include <stdexcept>

namespace convexdecomp {

/// Input files or function descriptions that do not form a valid convex
/// function (malformed JSON, missing fields, dimension clashes, non-PSD
/// quadratic matrices). The CLI maps this to exit code 2.
struct ParseError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A value/subgradient oracle returned data inconsistent with the convexity
/// or subgradient inequalities, or two independent characterizations of the
/// same object disagreed beyond tolerance. CLI exit code 4.
struct OracleError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An operation was invoked on input that violates its stated precondition
/// (e.g. a coercivizing witness requested for a function that is constant on
/// some line). CLI exit code 5.
struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

} // namespace convexdecomp
