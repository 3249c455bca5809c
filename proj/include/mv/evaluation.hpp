#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mv/grid_search.hpp"
#include "mv/matrix.hpp"
#include "mv/model.hpp"
#include "mv/preprocess.hpp"

namespace mv {

// Coefficient of variation of RMSE, in percent:
//   100 * sqrt((1/n) sum (y_i - yhat_i)^2) / ybar.
inline double cv_rmse(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size() || actual.empty())
        throw std::invalid_argument("cv_rmse: length mismatch or empty input");
    double ss = 0.0, ysum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        double d = actual[i] - predicted[i];
        ss += d * d;
        ysum += actual[i];
    }
    double ybar = ysum / static_cast<double>(actual.size());
    if (ybar == 0.0) throw std::invalid_argument("cv_rmse: mean of actuals is zero");
    return 100.0 * std::sqrt(ss / static_cast<double>(actual.size())) / ybar;
}

// Normalised mean bias error, in percent:
//   100 * (1/n) sum (y_i - yhat_i) / ybar.
// Positive and negative errors cancel; reported for insight, never used for
// model selection.
inline double nmbe(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.size() != predicted.size() || actual.empty())
        throw std::invalid_argument("nmbe: length mismatch or empty input");
    double esum = 0.0, ysum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        esum += actual[i] - predicted[i];
        ysum += actual[i];
    }
    double ybar = ysum / static_cast<double>(actual.size());
    if (ybar == 0.0) throw std::invalid_argument("nmbe: mean of actuals is zero");
    return 100.0 * (esum / static_cast<double>(actual.size())) / ybar;
}

struct ModelScore {
    Frequency frequency = Frequency::hourly;
    ModelFamily family = ModelFamily::ols;
    double cv_rmse_pct = 0.0;
    double nmbe_pct = 0.0;
    double rmse_abs = 0.0;  // original units; the IPMVP standard error (SE)
    std::size_t n_test = 0;
    std::string hyper;
    double cv_score = 0.0;  // grid-search CV RMSE, standardised units
};

// Applies a model to held-out test rows: features are standardised with the
// model's own embedded params, predictions inverse-transformed, and both
// metrics computed in original units.
inline std::vector<double> predict_series(const TrainedModel& model,
                                          const FeatureMatrix& original_units) {
    std::vector<std::size_t> order;
    for (const auto& f : model.feature_names) {
        if (!original_units.has_column(f))
            throw std::runtime_error("matrix is missing model feature '" + f + "'");
        order.push_back(original_units.col_index(f));
    }
    std::vector<double> x(model.feature_names.size());
    std::vector<double> out;
    out.reserve(original_units.rows());
    for (std::size_t r = 0; r < original_units.rows(); ++r) {
        for (std::size_t j = 0; j < order.size(); ++j) {
            double v = original_units.columns[order[j]][r];
            if (is_missing(v))
                throw std::runtime_error("cannot predict: missing value in feature '" +
                                         model.feature_names[j] + "'");
            x[j] = (v - model.scaling.mean(model.feature_names[j])) /
                   model.scaling.stddev(model.feature_names[j]);
        }
        out.push_back(model.predict(x));
    }
    return inverse_transform(out, model.scaling, model.dependent_name);
}

inline ModelScore score_model(const TrainedModel& model, const FeatureMatrix& test_original) {
    std::vector<double> predicted = predict_series(model, test_original);
    const auto& actual = test_original.dependent();
    ModelScore s;
    s.frequency = model.frequency;
    s.family = model.family;
    s.cv_rmse_pct = cv_rmse(actual, predicted);
    s.nmbe_pct = nmbe(actual, predicted);
    double ss = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        double d = actual[i] - predicted[i];
        ss += d * d;
    }
    s.rmse_abs = std::sqrt(ss / static_cast<double>(actual.size()));
    s.n_test = actual.size();
    s.hyper = model.describe_hyper();
    s.cv_score = model.cv_score;
    return s;
}

// One score per model, computed on data never seen during fit or grid
// search. Each model is paired with the test matrix of its own frequency.
inline std::vector<ModelScore> evaluate_all(const std::vector<TrainedModel>& models,
                                            const std::vector<FrequencyBundle>& bundles) {
    std::vector<ModelScore> out;
    for (const auto& model : models) {
        const FrequencyBundle* bundle = nullptr;
        for (const auto& b : bundles)
            if (b.frequency == model.frequency) bundle = &b;
        if (!bundle)
            throw std::runtime_error("evaluate_all: no test data for frequency " +
                                     to_string(model.frequency));
        out.push_back(score_model(model, bundle->test_original));
    }
    return out;
}

namespace detail {

inline int family_order(ModelFamily f) {
    switch (f) {
        case ModelFamily::ols: return 0;
        case ModelFamily::knn: return 1;
        case ModelFamily::ann: return 2;
        case ModelFamily::svm: return 3;
    }
    return 4;
}

}  // namespace detail

// Lowest CV(RMSE) wins; exact ties break to the coarser frequency, then the
// OLS -> kNN -> ANN -> SVM family order.
inline const ModelScore& select_best(const std::vector<ModelScore>& scores) {
    if (scores.empty()) throw std::invalid_argument("select_best: no scores");
    const ModelScore* best = &scores[0];
    for (const auto& s : scores) {
        if (s.cv_rmse_pct < best->cv_rmse_pct) {
            best = &s;
        } else if (s.cv_rmse_pct == best->cv_rmse_pct) {
            bool coarser = step_seconds(s.frequency) > step_seconds(best->frequency);
            bool same_freq = s.frequency == best->frequency;
            if (coarser || (same_freq && detail::family_order(s.family) <
                                             detail::family_order(best->family)))
                best = &s;
        }
    }
    return *best;
}

struct CurvePoint {
    double fractional_savings = 0.0;
    double required_cvrmse_pct = 0.0;
};

// Maximum model CV(RMSE) that still satisfies the acceptability rule
// (savings larger than twice the standard error) for a given fractional
// savings F. With savings F*ybar*m over m reporting intervals and the error
// of the total growing as SE*sqrt(m), requiring F*ybar*m > 2*t*SE*sqrt(m)
// rearranges to CV(RMSE) < 50*F*sqrt(m)/t. Linear in F; n (baseline points)
// is echoed for context in emitted files but does not enter the relation.
inline std::vector<CurvePoint> required_cvrmse_curve(std::span<const double> fractions, double t,
                                                     std::size_t /*n*/, std::size_t m) {
    if (t <= 0.0) throw std::invalid_argument("required_cvrmse_curve: t must be positive");
    if (m == 0) throw std::invalid_argument("required_cvrmse_curve: m must be positive");
    std::vector<CurvePoint> out;
    for (double f : fractions) {
        if (!(f > 0.0 && f <= 1.0))
            throw std::invalid_argument("required_cvrmse_curve: fractions must be in (0,1]");
        out.push_back({f, 50.0 * f * std::sqrt(static_cast<double>(m)) / t});
    }
    return out;
}

}  // namespace mv
