#pragma once

#include <boost/math/distributions/students_t.hpp>
#include <stdexcept>

namespace mv {

// Two-sided t-statistic: the value t such that P(|T_df| <= t) = confidence.
inline double t_quantile_two_sided(double confidence, double df) {
    if (!(confidence > 0.0 && confidence < 1.0))
        throw std::invalid_argument("confidence must be in (0,1)");
    if (df < 1.0) throw std::invalid_argument("degrees of freedom must be >= 1");
    boost::math::students_t_distribution<double> dist(df);
    return boost::math::quantile(dist, 0.5 + confidence / 2.0);
}

}  // namespace mv
