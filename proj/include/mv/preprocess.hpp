#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "mv/common.hpp"
#include "mv/matrix.hpp"
#include "mv/stats.hpp"
#include "mv/time.hpp"

namespace mv {

struct FrequencyDataset {
    Frequency frequency = Frequency::min15;
    FeatureMatrix matrix;
};

// Mean-aggregates each column into left-closed right-open intervals labelled
// by their start. Intervals with no surviving source rows are absent; cells
// whose source values are all missing stay missing.
inline FrequencyDataset aggregate(const FeatureMatrix& matrix, Frequency frequency,
                                  std::int64_t native_step_seconds) {
    if (native_step_seconds <= 0)
        throw std::runtime_error("aggregate: unknown native step");
    if (step_seconds(frequency) < native_step_seconds)
        throw std::runtime_error("aggregate: target frequency " + to_string(frequency) +
                                 " is finer than the native data spacing");
    FrequencyDataset out;
    out.frequency = frequency;
    out.matrix.names = matrix.names;
    out.matrix.columns.resize(matrix.columns.size());

    const std::size_t ncols = matrix.columns.size();
    std::vector<double> sums(ncols, 0.0);
    std::vector<std::size_t> counts(ncols, 0);

    auto flush = [&](TimePoint bucket) {
        out.matrix.times.push_back(bucket);
        for (std::size_t c = 0; c < ncols; ++c) {
            out.matrix.columns[c].push_back(counts[c] == 0
                                                ? kMissing
                                                : sums[c] / static_cast<double>(counts[c]));
            sums[c] = 0.0;
            counts[c] = 0;
        }
    };

    bool open = false;
    TimePoint bucket = 0;
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        TimePoint b = floor_to(frequency, matrix.times[r]);
        if (!open) {
            bucket = b;
            open = true;
        } else if (b != bucket) {
            if (b < bucket) throw std::runtime_error("aggregate: rows not in time order");
            flush(bucket);
            bucket = b;
        }
        for (std::size_t c = 0; c < ncols; ++c) {
            double v = matrix.columns[c][r];
            if (is_missing(v)) continue;
            sums[c] += v;
            counts[c] += 1;
        }
    }
    if (open) flush(bucket);
    return out;
}

struct SplitDataset {
    FeatureMatrix train;  // rows stay in shuffled order (CV folds are blocks of it)
    FeatureMatrix test;   // rows restored to chronological order
    std::uint64_t seed = 0;
};

// Shuffled partition: round(ratio * rows) rows train, the rest test.
// Deterministic for a fixed seed.
inline SplitDataset split(const FeatureMatrix& matrix, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::runtime_error("split: ratio must be inside (0,1)");
    if (matrix.rows() < 10)
        throw std::runtime_error("split: need at least 10 rows, have " +
                                 std::to_string(matrix.rows()));
    const std::size_t n = matrix.rows();
    std::size_t n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(n)));
    if (n_train == 0) n_train = 1;
    if (n_train >= n) n_train = n - 1;

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "split"));
    rng.shuffle(order);

    std::vector<std::size_t> train_idx(order.begin(), order.begin() + n_train);
    std::vector<std::size_t> test_idx(order.begin() + n_train, order.end());
    std::sort(test_idx.begin(), test_idx.end());

    SplitDataset out;
    out.seed = seed;
    out.train = matrix.take_rows(train_idx);
    out.test = matrix.take_rows(test_idx);
    return out;
}

// Per-column mean and sample standard deviation captured on training data.
// These parameters are the only scaling ever applied downstream.
struct ScalingParams {
    std::vector<std::string> names;
    std::vector<double> means;
    std::vector<double> stds;

    std::size_t index_of(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return i;
        throw std::runtime_error("scaling params have no column '" + name + "'");
    }
    double mean(const std::string& name) const { return means[index_of(name)]; }
    double stddev(const std::string& name) const { return stds[index_of(name)]; }
};

inline ScalingParams fit_scaling(const FeatureMatrix& train) {
    ScalingParams p;
    for (std::size_t c = 0; c < train.col_count(); ++c) {
        for (double v : train.columns[c])
            if (is_missing(v))
                throw std::runtime_error("fit_scaling: column '" + train.names[c] +
                                         "' still contains missing values");
        double m = mean_of(train.columns[c]);
        double s = sample_std(train.columns[c]);
        if (s <= 0.0)
            throw std::runtime_error("fit_scaling: column '" + train.names[c] +
                                     "' has zero variance");
        p.names.push_back(train.names[c]);
        p.means.push_back(m);
        p.stds.push_back(s);
    }
    return p;
}

// x' = (x - mean)/std per column. Every column of the matrix must be covered
// by the params; the params themselves are never re-fit here.
inline FeatureMatrix transform(const FeatureMatrix& matrix, const ScalingParams& params) {
    FeatureMatrix out = matrix;
    for (std::size_t c = 0; c < out.col_count(); ++c) {
        double m = params.mean(out.names[c]);
        double s = params.stddev(out.names[c]);
        for (double& v : out.columns[c])
            if (!is_missing(v)) v = (v - m) / s;
    }
    return out;
}

inline std::vector<double> inverse_transform(const std::vector<double>& values,
                                             const ScalingParams& params,
                                             const std::string& column) {
    double m = params.mean(column);
    double s = params.stddev(column);
    std::vector<double> out;
    out.reserve(values.size());
    for (double v : values) out.push_back(is_missing(v) ? v : v * s + m);
    return out;
}

}  // namespace mv
