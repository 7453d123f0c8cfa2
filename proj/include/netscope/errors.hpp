// SPDX-License-Identifier: Apache-2.0
#ifndef NETSCOPE_ERRORS_HPP
#define NETSCOPE_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace netscope {

/// Lookup of an entity (link, node, model shape, ...) that does not exist.
class NotFoundError : public std::runtime_error {
public:
    explicit NotFoundError(const std::string& what) : std::runtime_error(what) {}
};

/// A queuing-delay request at or beyond 100% time stalled.
class SaturationError : public std::runtime_error {
public:
    explicit SaturationError(const std::string& what) : std::runtime_error(what) {}
};

/// Regression could not be fit (degenerate features, too few samples).
class FitError : public std::runtime_error {
public:
    explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed input file; carries the 1-based line number when known.
class ParseError : public std::runtime_error {
public:
    ParseError(const std::string& what, size_t line)
        : std::runtime_error(what + " (line " + std::to_string(line) + ")"), line_(line) {}
    explicit ParseError(const std::string& what) : std::runtime_error(what), line_(0) {}
    size_t line() const { return line_; }

private:
    size_t line_;
};

/// Invalid experiment configuration, detected before any simulation starts.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace netscope

#endif // NETSCOPE_ERRORS_HPP
