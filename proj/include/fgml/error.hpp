#pragma once

#include <stdexcept>
#include <string>

namespace fgml {

// Error taxonomy used across the engine. The CLI maps kinds onto exit codes:
// config/usage -> 1, data/format -> 2, numeric -> 3.
enum class ErrorKind {
    Dimension,   // shape mismatch between tensors
    Parameter,   // invalid hyperparameter or argument value
    Degenerate,  // numerically degenerate input (e.g. near-zero vector)
    Label,       // class index out of range
    Format,      // malformed file contents
    Data,        // dataset-level problem (missing split, empty class, ...)
    Numeric,     // NaN/Inf detected or a numeric check failed
    Version,     // unsupported file format version
    Config,      // bad configuration file or unknown key
    Io,          // filesystem failure
};

class Error : public std::runtime_error {
  public:
    Error(ErrorKind kind, const std::string& message)
        : std::runtime_error(message), kind_(kind) {}

    ErrorKind kind() const { return kind_; }

  private:
    ErrorKind kind_;
};

[[noreturn]] inline void raise(ErrorKind kind, const std::string& message) {
    throw Error(kind, message);
}

}  // namespace fgml
