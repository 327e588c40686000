#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace lideval {

/// Bad input to an operation: out-of-range parameter, malformed series, etc.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// One or more problems found while checking a project configuration.
/// Every issue carries the config path it was found at (e.g. "scenarios[2].placements[0]").
class ConfigError : public ValidationError {
public:
    struct Issue {
        std::string where;
        std::string message;
    };

    explicit ConfigError(std::vector<Issue> issues);

    const std::vector<Issue>& issues() const noexcept { return issues_; }

private:
    std::vector<Issue> issues_;
};

/// Numerical failure during a computation (non-convergence, degenerate data).
class ComputationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failure inside a pipeline stage; the stage name is kept for reporting.
class StageError : public std::runtime_error {
public:
    StageError(std::string stage, const std::string& what);

    const std::string& stage() const noexcept { return stage_; }

private:
    std::string stage_;
};

} // namespace lideval
