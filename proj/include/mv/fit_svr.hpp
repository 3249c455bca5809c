#pragma once

#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "mv/common.hpp"
#include "mv/matrix.hpp"
#include "mv/model.hpp"

namespace mv {

struct SvrOptions {
    double cost = 1.0;
    double epsilon = 0.1;  // tube half-width in standardised units, fixed
    int max_sweeps = 5000;
    // stop when the summed projected-gradient violation falls below rel_tol
    // times its initial value, or the largest single violation below inf_tol
    double rel_tol = 1e-3;
    double inf_tol = 1e-9;
};

// Linear epsilon-insensitive support vector regression solved by dual
// coordinate descent. The bias rides along as an implicit all-ones feature,
// so the dual is box-constrained only: minimise
//   1/2 b'Qb - y'b + eps*|b|_1,  b_i in [-C, C],  Q_ij = x_i.x_j + 1.
// Primal weights are maintained incrementally (one O(dims) update per
// coordinate step); sweeps visit coordinates in a fixed pseudo-random
// permutation, which avoids the ping-pong patterns cyclic order produces on
// correlated rows.
inline SvrState fit_svr_state(const FeatureMatrix& train, const SvrOptions& opt) {
    if (opt.cost <= 0.0) throw std::runtime_error("svr: cost must be positive");
    const std::size_t n = train.rows();
    if (n == 0) throw std::runtime_error("svr: empty training set");
    const std::size_t dims = train.col_count() - 1;

    std::vector<double> x(n * dims);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t f = 0; f < dims; ++f) x[r * dims + f] = train.columns[f][r];
    const std::vector<double>& y = train.dependent();

    std::vector<double> q_diag(n);
    for (std::size_t r = 0; r < n; ++r) {
        double s = 1.0;  // bias feature
        for (std::size_t f = 0; f < dims; ++f) s += x[r * dims + f] * x[r * dims + f];
        q_diag[r] = s;
    }

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng perm_rng(0x53765230u);
    perm_rng.shuffle(order);

    std::vector<double> beta(n, 0.0);
    std::vector<double> w(dims, 0.0);
    double b = 0.0;
    const double c_max = opt.cost;

    // active-set sweeps: coordinates with zero violation drop out until the
    // shrunk set meets the target, then a full pass verifies (and re-admits
    // anything that started violating while it was parked)
    std::vector<std::size_t> active, next;
    bool full_pass = true;
    int sweep = 0;
    double vsum = 0.0, vfirst = -1.0;
    for (; sweep < opt.max_sweeps; ++sweep) {
        const std::vector<std::size_t>& sweep_set = full_pass ? order : active;
        next.clear();
        vsum = 0.0;
        double vmax = 0.0;
        for (std::size_t i : sweep_set) {
            const double* xi = x.data() + i * dims;
            double f = b;
            for (std::size_t k = 0; k < dims; ++k) f += w[k] * xi[k];
            double g = f - y[i];  // d/dbeta_i of the smooth dual part

            double pg;  // projected-gradient violation at beta_i
            if (beta[i] == 0.0) {
                pg = std::max(0.0, std::fabs(g) - opt.epsilon);
            } else {
                pg = g + (beta[i] > 0.0 ? opt.epsilon : -opt.epsilon);
                if (beta[i] >= c_max && pg < 0.0) pg = 0.0;
                if (beta[i] <= -c_max && pg > 0.0) pg = 0.0;
            }
            if (pg == 0.0) continue;
            vsum += std::fabs(pg);
            vmax = std::max(vmax, std::fabs(pg));
            next.push_back(i);

            double v = beta[i] - g / q_diag[i];
            double shrink = opt.epsilon / q_diag[i];
            double t = 0.0;
            if (v > shrink) t = v - shrink;
            else if (v < -shrink) t = v + shrink;
            if (t > c_max) t = c_max;
            else if (t < -c_max) t = -c_max;
            double delta = t - beta[i];
            if (delta == 0.0) continue;
            beta[i] = t;
            b += delta;
            for (std::size_t k = 0; k < dims; ++k) w[k] += delta * xi[k];
        }
        bool target_met = vfirst >= 0.0 && (vsum <= opt.rel_tol * vfirst || vmax <= opt.inf_tol);
        if (full_pass) {
            if (vfirst < 0.0) {
                vfirst = vsum;
                target_met = vsum <= opt.inf_tol;  // trivially optimal input
            }
            if (target_met) break;
            active.swap(next);
            full_pass = false;
        } else if (target_met || next.empty()) {
            full_pass = true;  // verify against the full coordinate set
        } else {
            active.swap(next);
        }
    }
    if (sweep == opt.max_sweeps && vfirst > 0.0 && vsum > 0.05 * vfirst)
        throw std::runtime_error("svr: solver did not converge within the sweep cap");

    SvrState s;
    s.cost = opt.cost;
    s.epsilon = opt.epsilon;
    s.w = std::move(w);
    s.b = b;
    s.sweeps_run = sweep;
    return s;
}

}  // namespace mv
