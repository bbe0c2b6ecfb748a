#pragma once

#include <stdexcept>
#include <string>

namespace portopt {

/// Configuration file problems: unknown keys, bad values, unresolvable paths.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Market-data problems: missing files, malformed rows, unknown tickers,
/// degenerate series.
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Optimization problems: infeasible bounds, non-finite inputs, degenerate
/// portfolios.
class SolverError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Failures writing artifacts to disk.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Process exit codes used by the CLI.
enum class ExitCode : int {
    ok = 0,
    failure = 1,
    config = 2,
    data = 3,
    solver = 4,
    io = 5,
};

} // namespace portopt
