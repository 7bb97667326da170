#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace iprior {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Bad input: wrong shapes, out-of-range parameters, malformed files.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// A computation that cannot be completed in floating point (indefinite
/// matrix after jitter, non-finite kernel value, singular information).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace iprior
