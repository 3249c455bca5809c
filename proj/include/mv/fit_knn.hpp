#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "mv/matrix.hpp"
#include "mv/model.hpp"

namespace mv {

inline KnnState fit_knn_state(const FeatureMatrix& train, int k, int minkowski_order) {
    if (train.rows() == 0) throw std::runtime_error("knn: empty training set");
    if (k < 1 || static_cast<std::size_t>(k) > train.rows())
        throw std::runtime_error("knn: k must be in [1, rows]");
    if (minkowski_order < 1) throw std::runtime_error("knn: distance order must be >= 1");
    KnnState s;
    s.k = k;
    s.minkowski_order = minkowski_order;
    s.rows = train.rows();
    s.dims = train.col_count() - 1;
    s.train_x.resize(s.rows * s.dims);
    for (std::size_t r = 0; r < s.rows; ++r)
        for (std::size_t f = 0; f < s.dims; ++f)
            s.train_x[r * s.dims + f] = train.columns[f][r];
    s.train_y = train.dependent();
    return s;
}

namespace detail {

// Scratch machinery for cross-validating many k values against one distance
// pass: one sweep over the training rows maintains the (k_max+1) nearest
// neighbours, then every k in 1..k_max is scored from that list. Predictions
// are arithmetic-identical to predict_knn.
struct KnnNeighbourList {
    struct Entry {
        double dp;  // distance^d, root deferred
        std::size_t idx;
    };
    std::vector<Entry> best;
    std::size_t keep = 0;

    void reset(std::size_t keep_count) {
        keep = keep_count;
        best.clear();
    }

    void offer(double dp, std::size_t idx) {
        if (best.size() == keep && dp >= best.back().dp) return;
        Entry e{dp, idx};
        auto pos = std::lower_bound(best.begin(), best.end(), e,
                                    [](const Entry& a, const Entry& b) {
                                        if (a.dp != b.dp) return a.dp < b.dp;
                                        return a.idx < b.idx;
                                    });
        best.insert(pos, e);
        if (best.size() > keep) best.pop_back();
    }

    // prediction using the first k entries, triangular kernel scaled by the
    // (k+1)-th neighbour distance (or the last kept entry when fewer exist)
    double predict(std::size_t k, int order, const std::vector<double>& y) const {
        std::size_t kk = std::min(k, best.size());
        if (kk == 1) return y[best.front().idx];
        std::size_t scale_at = std::min(kk, best.size() - 1);
        double scale = minkowski_root(best[scale_at].dp, order);
        double wsum = 0.0, ysum = 0.0;
        for (std::size_t i = 0; i < kk; ++i) {
            double dist = minkowski_root(best[i].dp, order);
            double w = scale > 0.0 ? std::max(0.0, 1.0 - dist / scale) : 0.0;
            wsum += w;
            ysum += w * y[best[i].idx];
        }
        if (wsum <= 0.0) {
            double t = 0.0;
            for (std::size_t i = 0; i < kk; ++i) t += y[best[i].idx];
            return t / static_cast<double>(kk);
        }
        return ysum / wsum;
    }
};

}  // namespace detail

}  // namespace mv
