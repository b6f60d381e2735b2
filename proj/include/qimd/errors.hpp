#pragma once

#include <stdexcept>
#include <string>

namespace qimd {

// Rejected input or physically degenerate configuration (CLI exit code 2).
struct InvalidInput : std::invalid_argument {
    explicit InvalidInput(const std::string& what) : std::invalid_argument(what) {}
};

// Internal numeric or cross-check inconsistency (CLI exit code 3).
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace qimd
