#pragma once

#include <Eigen/Dense>
#include <span>
#include <stdexcept>
#include <vector>

namespace mv {

// Least squares with a rank check. Throws on rank-deficient designs so
// callers can skip the offending candidate.
inline Eigen::VectorXd least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y) {
    if (design.rows() <= design.cols())
        throw std::runtime_error("least squares: need more rows than columns");
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
    qr.setThreshold(1e-10);
    if (qr.rank() < design.cols())
        throw std::runtime_error("least squares: rank-deficient design matrix");
    return qr.solve(y);
}

struct OlsFit {
    Eigen::VectorXd coeffs;  // feature coefficients then (optionally) intercept
    double r2 = 0.0;
    double adjusted_r2 = 0.0;
};

// Ordinary least squares with intercept; reports plain and adjusted R^2.
// k in the adjustment counts features only, not the intercept.
inline OlsFit ols_fit(const Eigen::MatrixXd& design_no_intercept, const Eigen::VectorXd& y) {
    const auto n = design_no_intercept.rows();
    const auto k = design_no_intercept.cols();
    if (n < k + 2) throw std::runtime_error("least squares: too few rows for adjusted R^2");
    Eigen::MatrixXd x(n, k + 1);
    x.leftCols(k) = design_no_intercept;
    x.col(k).setOnes();
    OlsFit fit;
    fit.coeffs = least_squares(x, y);
    Eigen::VectorXd resid = y - x * fit.coeffs;
    double ss_res = resid.squaredNorm();
    double y_mean = y.mean();
    double ss_tot = (y.array() - y_mean).square().sum();
    if (ss_tot == 0.0) throw std::runtime_error("least squares: dependent has zero variance");
    fit.r2 = 1.0 - ss_res / ss_tot;
    fit.adjusted_r2 =
        1.0 - (1.0 - fit.r2) * (static_cast<double>(n - 1) / static_cast<double>(n - k - 1));
    return fit;
}

}  // namespace mv
