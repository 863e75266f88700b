// Copyright (c) 2026 mtkd contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace mtkd {

// Error taxonomy shared by the library and the CLI exit codes:
// config=1, data=2, numeric=3, everything else=4.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
public:
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

class DataError : public Error {
public:
    explicit DataError(const std::string& msg) : Error(msg) {}
};

class NumericError : public Error {
public:
    explicit NumericError(const std::string& msg) : Error(msg) {}
};

// Shape/contract violations between tensors. Mapped to the internal exit code.
class ShapeError : public Error {
public:
    explicit ShapeError(const std::string& msg) : Error(msg) {}
};

class InternalError : public Error {
public:
    explicit InternalError(const std::string& msg) : Error(msg) {}
};

} // namespace mtkd
