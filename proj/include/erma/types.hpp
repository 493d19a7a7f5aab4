#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>

namespace erma {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Bad user input: unknown names, malformed files, inconsistent shapes.
class ConfigError : public Error {
public:
    using Error::Error;
};

class DimensionError : public ConfigError {
public:
    using ConfigError::ConfigError;
};

// A computation was asked for outside its domain (non-PD matrix, alpha of 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

class ConvergenceError : public Error {
public:
    using Error::Error;
};

inline void require_dim(bool ok, const std::string& what) {
    if (!ok) throw DimensionError("dimension mismatch: " + what);
}

}  // namespace erma
