#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace imjet {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Bad arguments: dimension mismatch, out-of-range index, malformed data.
struct InputError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Request beyond what the implementation supports (order caps, truncation too small).
struct CapabilityError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A documented precondition on the mathematical setting does not hold.
struct PreconditionError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// Query outside the region where a model or construction is defined.
struct DomainError : std::domain_error {
    using std::domain_error::domain_error;
};

/// Numerical solver failure (divergence, stiffness cascade, non-convergence).
struct SolverError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Spectral ladder cannot be realised within the truncation.
struct InfeasibleLadder : CapabilityError {
    using CapabilityError::CapabilityError;
};

} // namespace imjet
