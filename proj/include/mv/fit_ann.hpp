#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "mv/common.hpp"
#include "mv/matrix.hpp"
#include "mv/model.hpp"

namespace mv {

namespace detail {

// Parameter layout shared with AnnState: W1 (h x in), b1 (h), w2 (h), b2.
inline std::size_t ann_param_count(std::size_t in, std::size_t h) { return h * in + h + h + 1; }

struct AnnWork {
    Eigen::MatrixXd a, delta;
    Eigen::VectorXd yhat, err;
};

// Objective: (sum of squared errors + decay * sum of squared parameters)
// divided by 2n. Forward pass fills the work buffers the backward pass needs.
inline double ann_forward(const std::vector<double>& params, const Eigen::MatrixXd& x,
                          const Eigen::VectorXd& y, std::size_t h, double decay, AnnWork& work) {
    const std::size_t n = static_cast<std::size_t>(x.rows());
    const std::size_t in = static_cast<std::size_t>(x.cols());
    using MapM = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                Eigen::RowMajor>>;
    using MapV = Eigen::Map<const Eigen::VectorXd>;
    MapM w1(params.data(), h, in);
    MapV b1(params.data() + h * in, h);
    MapV w2(params.data() + h * in + h, h);
    const double b2 = params[h * in + 2 * h];

    work.a.noalias() = x * w1.transpose();
    work.a.rowwise() += b1.transpose();
    work.a = 1.0 / (1.0 + (-work.a.array()).exp());
    work.yhat.noalias() = work.a * w2;
    work.yhat.array() += b2;
    work.err = work.yhat - y;

    double sq = 0.0;
    for (double p : params) sq += p * p;
    return (work.err.squaredNorm() + decay * sq) / (2.0 * static_cast<double>(n));
}

// Backward pass for the parameters the work buffers were filled with.
inline void ann_backward(const std::vector<double>& params, const Eigen::MatrixXd& x,
                         std::size_t h, double decay, AnnWork& work, std::vector<double>& grad) {
    const std::size_t n = static_cast<std::size_t>(x.rows());
    const std::size_t in = static_cast<std::size_t>(x.cols());
    using MapV = Eigen::Map<const Eigen::VectorXd>;
    MapV w2(params.data() + h * in + h, h);

    grad.assign(params.size(), 0.0);
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> g_w1(
        grad.data(), h, in);
    Eigen::Map<Eigen::VectorXd> g_b1(grad.data() + h * in, h);
    Eigen::Map<Eigen::VectorXd> g_w2(grad.data() + h * in + h, h);
    double& g_b2 = grad[h * in + 2 * h];

    g_w2.noalias() = work.a.transpose() * work.err;
    g_b2 = work.err.sum();
    work.delta = (work.err * w2.transpose()).array() * work.a.array() * (1.0 - work.a.array());
    g_w1.noalias() = work.delta.transpose() * x;
    g_b1 = work.delta.colwise().sum();

    const double inv_n = 1.0 / static_cast<double>(n);
    for (std::size_t i = 0; i < params.size(); ++i)
        grad[i] = (grad[i] + decay * params[i]) * inv_n;
}

// Convenience wrapper (used by the finite-difference checks).
inline double ann_loss_grad(const std::vector<double>& params, const Eigen::MatrixXd& x,
                            const Eigen::VectorXd& y, std::size_t h, double decay,
                            std::vector<double>* grad, AnnWork& work) {
    double loss = ann_forward(params, x, y, h, decay, work);
    if (grad) ann_backward(params, x, h, decay, work, *grad);
    return loss;
}

}  // namespace detail

struct AnnOptions {
    int hidden_units = 5;
    int max_iter = 1000;
    double threshold = 0.01;  // stop when max |dE/dw| falls below this
    double decay = 0.1;
    std::uint64_t seed = 0;
};

// Single-hidden-layer network (sigmoid hidden units, linear output) trained
// by full-batch gradient descent. The step size adapts: grow on improvement,
// halve and retry on overshoot. Weights start uniform in [-0.5, 0.5] from
// the seed, so training is deterministic.
inline AnnState fit_ann_state(const FeatureMatrix& train, const AnnOptions& opt) {
    if (opt.hidden_units < 1) throw std::runtime_error("ann: hidden_units must be >= 1");
    const std::size_t n = train.rows();
    if (n == 0) throw std::runtime_error("ann: empty training set");
    const std::size_t in = train.col_count() - 1;
    const std::size_t h = static_cast<std::size_t>(opt.hidden_units);

    Eigen::MatrixXd x(n, in);
    Eigen::VectorXd y(n);
    for (std::size_t c = 0; c < in; ++c)
        for (std::size_t r = 0; r < n; ++r) x(r, c) = train.columns[c][r];
    for (std::size_t r = 0; r < n; ++r) y(r) = train.dependent()[r];

    std::vector<double> params(detail::ann_param_count(in, h));
    Rng rng(derive_seed(opt.seed, "ann-init"));
    for (double& p : params) p = rng.uniform(-0.5, 0.5);

    detail::AnnWork cur, probe;
    std::vector<double> grad, trial;
    double lr = 0.1;
    double loss = detail::ann_forward(params, x, y, h, opt.decay, cur);
    if (!std::isfinite(loss)) throw std::runtime_error("ann: non-finite loss at init");

    int iter = 0;
    for (; iter < opt.max_iter; ++iter) {
        detail::ann_backward(params, x, h, opt.decay, cur, grad);
        double gmax = 0.0;
        for (double g : grad) gmax = std::max(gmax, std::fabs(g));
        if (gmax <= opt.threshold) break;

        bool accepted = false;
        while (lr >= 1e-14) {
            trial = params;
            for (std::size_t i = 0; i < trial.size(); ++i) trial[i] -= lr * grad[i];
            double new_loss = detail::ann_forward(trial, x, y, h, opt.decay, probe);
            if (std::isfinite(new_loss) && new_loss <= loss) {
                params.swap(trial);
                loss = new_loss;
                std::swap(cur, probe);  // probe holds the accepted forward state
                lr *= 1.1;
                accepted = true;
                break;
            }
            lr *= 0.5;
        }
        if (!accepted) break;  // step size underflow: numerically stationary
    }
    if (!std::isfinite(loss)) throw std::runtime_error("ann: non-finite loss during training");

    AnnState s;
    s.hidden_units = opt.hidden_units;
    s.decay = opt.decay;
    s.dims = in;
    s.weights = std::move(params);
    s.iterations_run = iter;
    return s;
}

}  // namespace mv
