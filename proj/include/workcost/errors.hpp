#pragma once

#include <stdexcept>
#include <string>

namespace workcost {

// Input could not be parsed (malformed JSON, wrong schema). CLI exit code 2.
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

// A documented precondition of an operation is violated (support leak,
// non-Hermitian input, dimension mismatch, parameter out of range).
// CLI exit code 3.
struct PreconditionError : std::runtime_error {
    explicit PreconditionError(const std::string& what) : std::runtime_error(what) {}
};

// The SDP solver failed to produce a usable certificate. CLI exit code 4.
struct SolverError : std::runtime_error {
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace workcost
