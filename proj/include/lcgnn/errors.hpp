#pragma once

#include <stdexcept>
#include <string>

namespace lcgnn {

/// Base class for every error thrown by this library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Incompatible matrix dimensions or a missing/ill-shaped parameter.
class ShapeMismatch : public Error {
public:
    using Error::Error;
};

/// A block operation's estimated memory footprint exceeds the device budget.
class BudgetExceeded : public Error {
public:
    using Error::Error;
};

/// The budget model admits no block count satisfying its constraint.
class Infeasible : public Error {
public:
    using Error::Error;
};

/// Coefficient calibration could not produce a trustworthy linear fit.
class CalibrationUnstable : public Error {
public:
    using Error::Error;
};

/// A required aggregated feature matrix is absent from the precomputed set.
class MissingPower : public Error {
public:
    explicit MissingPower(int power)
        : Error("missing precomputed feature power " + std::to_string(power)),
          power_(power) {}
    int power() const { return power_; }

private:
    int power_;
};

class NonFiniteGradient : public Error {
public:
    using Error::Error;
};

class EmptyMask : public Error {
public:
    using Error::Error;
};

/// Invalid configuration value; the message names the offending field.
class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace lcgnn
