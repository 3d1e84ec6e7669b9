#pragma once

#include <stdexcept>
#include <string>

namespace adir {

struct ParameterError : std::runtime_error {
    explicit ParameterError(const std::string& msg) : std::runtime_error("parameter error: " + msg) {}
};

struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

struct DegenerateStepError : std::runtime_error {
    explicit DegenerateStepError(const std::string& msg) : std::runtime_error("degenerate step: " + msg) {}
};

struct FormatError : std::runtime_error {
    explicit FormatError(const std::string& msg) : std::runtime_error("format error: " + msg) {}
};

struct DivergenceError : std::runtime_error {
    explicit DivergenceError(const std::string& msg) : std::runtime_error("divergence: " + msg) {}
};

struct InstabilityError : std::runtime_error {
    explicit InstabilityError(const std::string& msg) : std::runtime_error("numerical instability: " + msg) {}
};

struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error("io error: " + msg) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

} // namespace adir
