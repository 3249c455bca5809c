#pragma once

#include <Eigen/Dense>

#include "mv/linreg.hpp"
#include "mv/matrix.hpp"
#include "mv/model.hpp"

namespace mv {

namespace detail {

inline void matrix_to_eigen(const FeatureMatrix& m, Eigen::MatrixXd& x, Eigen::VectorXd& y) {
    const std::size_t n = m.rows();
    const std::size_t k = m.col_count() - 1;
    x.resize(n, k);
    y.resize(n);
    for (std::size_t c = 0; c < k; ++c)
        for (std::size_t r = 0; r < n; ++r) x(r, c) = m.columns[c][r];
    const auto& dep = m.dependent();
    for (std::size_t r = 0; r < n; ++r) y(r) = dep[r];
}

}  // namespace detail

// Least-squares coefficients on a standardised training matrix. With
// intercept=false the fit passes through the origin of standardised space.
inline OlsState fit_ols_state(const FeatureMatrix& train, bool intercept) {
    Eigen::MatrixXd x;
    Eigen::VectorXd y;
    detail::matrix_to_eigen(train, x, y);
    OlsState s;
    s.intercept = intercept;
    if (intercept) {
        Eigen::MatrixXd design(x.rows(), x.cols() + 1);
        design.leftCols(x.cols()) = x;
        design.col(x.cols()).setOnes();
        Eigen::VectorXd beta = least_squares(design, y);
        s.coeffs.assign(beta.data(), beta.data() + x.cols());
        s.intercept_value = beta(x.cols());
    } else {
        Eigen::VectorXd beta = least_squares(x, y);
        s.coeffs.assign(beta.data(), beta.data() + x.cols());
        s.intercept_value = 0.0;
    }
    return s;
}

}  // namespace mv
