// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace adamatch {

/// Raised when an input file (schema, mapping, process, config, ...) cannot
/// be parsed. CLI maps this to exit code 2.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when parsed input is structurally invalid (duplicate ids, dangling
/// references, cycles, arity violations on user-supplied processes).
/// CLI maps this to exit code 2.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised for internal engine failures (broken process graphs produced at
/// runtime, impossible states). CLI maps this to exit code 3.
class EngineError : public std::runtime_error {
public:
    explicit EngineError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace adamatch
