#pragma once

#include <stdexcept>
#include <string>

namespace bds {

class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// A field evaluated non-finite, or an argument left an operation's domain.
class EvaluationError : public Error {
    using Error::Error;
};

// Configuration text failed strict parsing.
class ConfigError : public Error {
    using Error::Error;
};

// An iterative solver missed its tolerance, or a computed decomposition
// failed validation.
class SolverError : public Error {
    using Error::Error;
};

} // namespace bds
