#pragma once

#include <stdexcept>
#include <string>

namespace pico {

// Root of every error the library throws. Subclasses map onto the failure
// categories callers are expected to distinguish.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class InputError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class EstimationError : public Error {
public:
    using Error::Error;
};

class TrainingError : public Error {
public:
    using Error::Error;
};

class TrainingDivergenceError : public TrainingError {
public:
    TrainingDivergenceError(int epoch, const std::string& what)
        : TrainingError("training diverged at epoch " + std::to_string(epoch) + ": " + what),
          epoch_(epoch) {}
    int epoch() const { return epoch_; }

private:
    int epoch_;
};

class EvaluationError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

// Service-level failures.
class ConflictError : public Error {
public:
    using Error::Error;
};

class ValidationError : public Error {
public:
    using Error::Error;
};

class NotFoundError : public Error {
public:
    using Error::Error;
};

class EndOfSession : public Error {
public:
    using Error::Error;
};

}  // namespace pico
