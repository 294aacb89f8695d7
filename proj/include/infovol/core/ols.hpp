#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "infovol/core/error.hpp"

namespace infovol {

struct OlsFit {
    Eigen::VectorXd coef;
    Eigen::VectorXd std_err;
    double rss = 0.0;
    std::size_t nobs = 0;
};

/// Least squares via the normal equations. Throws DegenerateError for a rank-deficient design.
inline OlsFit ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    const auto n = static_cast<std::size_t>(x.rows());
    const auto k = static_cast<std::size_t>(x.cols());
    if (n <= k) throw DegenerateError("ols: not enough observations");
    const Eigen::MatrixXd xtx = x.transpose() * x;
    // equilibrate to a unit diagonal so the rank check does not depend on column scales
    const Eigen::VectorXd scale = xtx.diagonal().cwiseSqrt();
    if (!(scale.minCoeff() > 0.0) || !scale.allFinite()) throw DegenerateError("ols: singular design");
    const Eigen::VectorXd inv_scale = scale.cwiseInverse();
    const Eigen::MatrixXd scaled = inv_scale.asDiagonal() * xtx * inv_scale.asDiagonal();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(scaled);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw DegenerateError("ols: singular design");
    // reject near-singular designs (e.g. a constant regressor next to the intercept)
    if (ldlt.vectorD().minCoeff() <= 1e-12) throw DegenerateError("ols: singular design");

    OlsFit fit;
    fit.nobs = n;
    fit.coef = inv_scale.asDiagonal() * ldlt.solve(inv_scale.asDiagonal() * (x.transpose() * y));
    const Eigen::VectorXd resid = y - x * fit.coef;
    fit.rss = resid.squaredNorm();
    const double s2 = fit.rss / static_cast<double>(n - k);
    const Eigen::MatrixXd inv = ldlt.solve(Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(k),
                                                                      static_cast<Eigen::Index>(k)));
    fit.std_err = (s2 * inv.diagonal().array()).sqrt() * inv_scale.array();
    return fit;
}

}  // namespace infovol
