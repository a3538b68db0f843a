#pragma once

#include <functional>

#include <Eigen/Dense>

namespace qmem::lsq
{

// r(params) -> residual vector of fixed length.
using ResidualFn = std::function<void(const Eigen::VectorXd &params, Eigen::VectorXd &residuals)>;

struct Options
{
    int max_evaluations = 40000;
    double ftol = 1e-15;
    double xtol = 1e-15;
};

struct Result
{
    Eigen::VectorXd params;
    Eigen::VectorXd residuals;
    double residual_norm = 0.0;    // ||r||_2 at the solution
    Eigen::MatrixXd covariance;    // (J^T J)^-1, unscaled
    int evaluations = 0;
};

// Central-difference Jacobian with steps relative to each parameter.
Eigen::MatrixXd numeric_jacobian(const ResidualFn &fn, const Eigen::VectorXd &x, int n_residuals);

// Throws Error(degenerate_jacobian) when the column-scaled Jacobian is rank deficient.
void check_identifiable(const Eigen::MatrixXd &jacobian);

// Levenberg-Marquardt (MINPACK lmdif via Eigen). Deterministic given x0.
// Throws Error(fit_did_not_converge) when the evaluation budget runs out or
// the result is not finite, Error(degenerate_jacobian) for unidentifiable
// parameterisations.
Result minimize(const ResidualFn &fn, int n_residuals, Eigen::VectorXd x0, const Options &options = {});

} // namespace qmem::lsq
