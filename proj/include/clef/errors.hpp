#ifndef CLEF_ERRORS_HPP
#define CLEF_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace clef {

// Error hierarchy shared by the library and the CLI. The CLI maps each
// category to a distinct process exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Tensor/matrix dimension mismatches.
struct ShapeError : Error {
    using Error::Error;
};

// Invalid configs, specs, labels, or file contents.
struct ValidationError : Error {
    using Error::Error;
};

// API contract violations (non-scalar loss, unmasked input, ...).
struct ContractError : Error {
    using Error::Error;
};

// Filesystem / serialization failures.
struct IoError : Error {
    using Error::Error;
};

// Non-finite values produced during training.
struct DivergenceError : Error {
    using Error::Error;
};

}  // namespace clef

#endif  // CLEF_ERRORS_HPP
