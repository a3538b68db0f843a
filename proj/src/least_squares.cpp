#include "qmem/least_squares.hpp"

#include <cmath>
#include <limits>

#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "qmem/errors.hpp"

namespace qmem::lsq
{

namespace
{

struct Functor
{
    using Scalar = double;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;

    const ResidualFn *fn;
    int n_params;
    int n_residuals;

    int inputs() const { return n_params; }
    int values() const { return n_residuals; }

    int operator()(const Eigen::VectorXd &x, Eigen::VectorXd &r) const
    {
        (*fn)(x, r);
        return 0;
    }
};

bool all_finite(const Eigen::VectorXd &v) { return v.allFinite(); }

} // namespace

Eigen::MatrixXd numeric_jacobian(const ResidualFn &fn, const Eigen::VectorXd &x, int n_residuals)
{
    const double step_scale = std::cbrt(std::numeric_limits<double>::epsilon());
    Eigen::MatrixXd jac(n_residuals, x.size());
    Eigen::VectorXd rp(n_residuals), rm(n_residuals);
    for (Eigen::Index j = 0; j < x.size(); ++j) {
        const double h = step_scale * std::max(std::abs(x[j]), 1e-8);
        Eigen::VectorXd xp = x, xm = x;
        xp[j] += h;
        xm[j] -= h;
        fn(xp, rp);
        fn(xm, rm);
        jac.col(j) = (rp - rm) / (2.0 * h);
    }
    return jac;
}

void check_identifiable(const Eigen::MatrixXd &jacobian)
{
    if (!jacobian.allFinite())
        throw Error(Errc::degenerate_jacobian, "Jacobian has non-finite entries");
    Eigen::MatrixXd scaled = jacobian;
    for (Eigen::Index j = 0; j < scaled.cols(); ++j) {
        const double norm = scaled.col(j).norm();
        if (norm == 0.0)
            throw Error(Errc::degenerate_jacobian, "parameter " + std::to_string(j) + " does not affect the residuals");
        scaled.col(j) /= norm;
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(scaled);
    const auto &s = svd.singularValues();
    if (s[s.size() - 1] < 1e-10 * s[0])
        throw Error(Errc::degenerate_jacobian, "parameters are not separately identifiable");
}

Result minimize(const ResidualFn &fn, int n_residuals, Eigen::VectorXd x0, const Options &options)
{
    const int n_params = static_cast<int>(x0.size());
    require(n_residuals >= n_params, "fewer residuals than parameters");

    check_identifiable(numeric_jacobian(fn, x0, n_residuals));

    Functor functor{&fn, n_params, n_residuals};
    Eigen::NumericalDiff<Functor, Eigen::Central> numdiff(functor);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<Functor, Eigen::Central>> lm(numdiff);
    lm.parameters.maxfev = options.max_evaluations;
    lm.parameters.ftol = options.ftol;
    lm.parameters.xtol = options.xtol;

    Eigen::VectorXd x = x0;
    const auto status = lm.minimize(x);
    using Space = Eigen::LevenbergMarquardtSpace::Status;
    if (status == Space::TooManyFunctionEvaluation || status == Space::ImproperInputParameters || !all_finite(x))
        throw Error(Errc::fit_did_not_converge, "Levenberg-Marquardt stopped with status " + std::to_string(static_cast<int>(status)));

    Result result;
    result.params = x;
    result.residuals.resize(n_residuals);
    fn(x, result.residuals);
    if (!all_finite(result.residuals))
        throw Error(Errc::fit_did_not_converge, "non-finite residuals at solution");
    result.residual_norm = result.residuals.norm();
    result.evaluations = static_cast<int>(lm.nfev);

    const Eigen::MatrixXd jac = numeric_jacobian(fn, x, n_residuals);
    check_identifiable(jac);
    const Eigen::MatrixXd normal = jac.transpose() * jac;
    result.covariance = normal.completeOrthogonalDecomposition().pseudoInverse();
    return result;
}

} // namespace qmem::lsq
