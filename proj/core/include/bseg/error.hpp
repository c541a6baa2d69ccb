#pragma once

#include <stdexcept>
#include <string>

namespace bseg {

// Shape/dimension disagreements between tensors or against an operation's contract.
struct ShapeError : std::runtime_error {
    explicit ShapeError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid values handed to an operation (labels outside {0,1}, empty ensembles, non-PD
// covariances, out-of-range hyperparameters, ...).
struct InputError : std::runtime_error {
    explicit InputError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or otherwise numerically broken state detected at run time.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed file contents (netpbm headers, config files, checkpoints).
struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem failures; message carries the offending path.
struct IoError : std::runtime_error {
    explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace bseg
