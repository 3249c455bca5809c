#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mv/evaluation.hpp"
#include "mv/matrix.hpp"
#include "mv/model.hpp"
#include "mv/tdist.hpp"
#include "mv/time.hpp"

namespace mv {

// Reporting-period independent variables must stay within [90% of the
// training minimum, 110% of the training maximum], per feature. Violations
// never abort; they attach an advisory.
struct RangeGateFeature {
    std::string id;
    double observed_min = 0, observed_max = 0;
    double training_min = 0, training_max = 0;
    bool within_range = true;
};

struct RangeGateResult {
    std::vector<RangeGateFeature> features;
    std::vector<std::string> advisories;

    bool all_within() const {
        return std::all_of(features.begin(), features.end(),
                           [](const RangeGateFeature& f) { return f.within_range; });
    }
};

struct FeatureRange {
    std::string id;
    double min = 0, max = 0;
};

inline std::vector<FeatureRange> feature_ranges(const FeatureMatrix& training,
                                                const std::vector<std::string>& features) {
    std::vector<FeatureRange> out;
    for (const auto& id : features) {
        const auto& col = training.col(id);
        FeatureRange r{id, 0, 0};
        bool first = true;
        for (double v : col) {
            if (is_missing(v)) continue;
            if (first) {
                r.min = r.max = v;
                first = false;
            } else {
                r.min = std::min(r.min, v);
                r.max = std::max(r.max, v);
            }
        }
        if (first) throw std::runtime_error("feature '" + id + "' has no training values");
        out.push_back(r);
    }
    return out;
}

inline RangeGateResult gate_range(const FeatureMatrix& reporting,
                                  const std::vector<FeatureRange>& training_ranges) {
    RangeGateResult result;
    for (const auto& tr : training_ranges) {
        const auto& col = reporting.col(tr.id);
        RangeGateFeature f;
        f.id = tr.id;
        f.training_min = tr.min;
        f.training_max = tr.max;
        bool first = true;
        for (double v : col) {
            if (is_missing(v)) continue;
            if (first) {
                f.observed_min = f.observed_max = v;
                first = false;
            } else {
                f.observed_min = std::min(f.observed_min, v);
                f.observed_max = std::max(f.observed_max, v);
            }
        }
        if (first) {
            f.within_range = false;
            result.advisories.push_back("feature '" + tr.id +
                                        "' has no reporting-period values");
            result.features.push_back(f);
            continue;
        }
        // inclusive bounds: "no more than 110% of the maximum and no less
        // than 90% of the minimum" of the training data
        f.within_range = f.observed_max <= 1.10 * tr.max && f.observed_min >= 0.90 * tr.min;
        if (!f.within_range)
            result.advisories.push_back(
                "feature '" + tr.id +
                "' is beyond the range of applicability of the model (observed [" +
                format_double(f.observed_min) + ", " + format_double(f.observed_max) +
                "] vs training [" + format_double(tr.min) + ", " + format_double(tr.max) + "])");
        result.features.push_back(f);
    }
    return result;
}

inline RangeGateResult gate_range(const FeatureMatrix& reporting, const FeatureMatrix& training,
                                  const std::vector<std::string>& features) {
    return gate_range(reporting, feature_ranges(training, features));
}

// Per-interval predictions of the winning model on a reporting matrix that
// has already been aggregated to the model frequency; predictions come back
// inverse-transformed to original units.
inline std::vector<double> adjusted_baseline(const TrainedModel& model,
                                             const FeatureMatrix& reporting_original) {
    return predict_series(model, reporting_original);
}

// A stakeholder-agreed non-routine correction, applied multiplicatively to
// the adjusted baseline over its interval.
struct AdjustmentRecord {
    std::string name;
    DateInterval interval;
    double factor = 1.0;
    std::string justification;
    std::string stakeholders;
};

// Applies each record to the intervals it covers. Overlapping adjustments
// compose multiplicatively.
inline std::vector<double> apply_adjustments(const std::vector<double>& baseline,
                                             const std::vector<TimePoint>& times,
                                             const std::vector<AdjustmentRecord>& records) {
    if (baseline.size() != times.size())
        throw std::invalid_argument("apply_adjustments: series/time length mismatch");
    if (!times.empty()) {
        for (const auto& rec : records) {
            if (rec.factor <= 0.0)
                throw std::invalid_argument("adjustment '" + rec.name +
                                            "': factor must be positive");
            if (rec.interval.end <= times.front() || rec.interval.start > times.back())
                throw std::invalid_argument("adjustment '" + rec.name +
                                            "': interval lies outside the series span");
        }
    }
    std::vector<double> out = baseline;
    for (const auto& rec : records)
        for (std::size_t i = 0; i < out.size(); ++i)
            if (rec.interval.contains(times[i])) out[i] *= rec.factor;
    return out;
}

struct SavingsReport {
    std::vector<TimePoint> times;
    std::vector<double> measured;
    std::vector<double> adjusted_baseline;  // after non-routine adjustments
    double total_savings = 0.0;
    double se_total = 0.0;    // standard error scaled to the reporting total
    double rmse_abs = 0.0;    // per-interval SE from the held-out test set
    std::size_t n_test = 0;   // test points behind the SE estimate
    std::size_t m_intervals = 0;
    double t_value = 0.0;
    double confidence = 0.68;
    double uncertainty = 0.0;  // t * SE
    double range_low = 0.0, range_high = 0.0;
    bool acceptable = false;   // savings larger than twice the standard error
    Frequency frequency = Frequency::hourly;
    ModelFamily family = ModelFamily::ols;
    std::vector<std::string> advisories;
};

// Core uncertainty arithmetic from totals, shared by the series-level path
// and table reconstruction: U = t * SE with df = n_test - 1, acceptability
// when savings exceed twice the standard error.
inline SavingsReport quantify_from_totals(double total_savings, double se_total,
                                          std::size_t n_test, double confidence) {
    if (n_test < 2) throw std::invalid_argument("quantify: need n_test >= 2 for df = n_test - 1");
    SavingsReport r;
    r.total_savings = total_savings;
    r.se_total = se_total;
    r.n_test = n_test;
    r.confidence = confidence;
    r.t_value = t_quantile_two_sided(confidence, static_cast<double>(n_test - 1));
    r.uncertainty = r.t_value * se_total;
    r.range_low = total_savings - r.uncertainty;
    r.range_high = total_savings + r.uncertainty;
    r.acceptable = total_savings > 2.0 * se_total;
    return r;
}

// Savings = sum(adjusted baseline - measured). The per-interval SE from the
// test set is scaled to the reporting total as SE*sqrt(m), treating interval
// errors as independent (stated in every emitted report).
inline SavingsReport quantify(const std::vector<TimePoint>& times,
                              const std::vector<double>& measured,
                              const std::vector<double>& baseline, const ModelScore& score,
                              double confidence) {
    if (measured.size() != baseline.size() || measured.size() != times.size())
        throw std::invalid_argument("quantify: measured and baseline series are misaligned");
    if (measured.empty()) throw std::invalid_argument("quantify: empty series");
    double total = 0.0;
    for (std::size_t i = 0; i < measured.size(); ++i) total += baseline[i] - measured[i];
    double se_total = score.rmse_abs * std::sqrt(static_cast<double>(measured.size()));
    SavingsReport r = quantify_from_totals(total, se_total, score.n_test, confidence);
    r.times = times;
    r.measured = measured;
    r.adjusted_baseline = baseline;
    r.rmse_abs = score.rmse_abs;
    r.m_intervals = measured.size();
    r.frequency = score.frequency;
    r.family = score.family;
    return r;
}

// ASHRAE Guideline 14 uncertainty (comparison output only, never the
// acceptability verdict): U = t * (1.26 * CV(RMSE)/F) * sqrt((n+2)/(n*m)),
// returned as a fraction of the reported savings.
inline double ashrae_uncertainty(double cv_rmse_pct, double fractional_savings, std::size_t n,
                                 std::size_t m, double t) {
    if (cv_rmse_pct <= 0.0 || t <= 0.0 || n == 0 || m == 0)
        throw std::invalid_argument("ashrae_uncertainty: inputs must be positive");
    if (fractional_savings == 0.0)
        throw std::invalid_argument("ashrae_uncertainty: fractional savings must be non-zero");
    double cv = cv_rmse_pct / 100.0;
    double nn = static_cast<double>(n);
    double mm = static_cast<double>(m);
    return t * (1.26 * cv / fractional_savings) * std::sqrt((nn + 2.0) / (nn * mm));
}

struct AcceptabilityRow {
    Frequency frequency;
    ModelFamily family;
    double savings = 0.0;
    double se = 0.0;
    bool acceptable = false;
};

// Rows (frequency, algorithm, savings, SE, acceptable), one per model, in
// frequency blocks fine-to-coarse with OLS/kNN/ANN/SVM inside each block.
inline std::vector<AcceptabilityRow> acceptability_table(
    const std::vector<SavingsReport>& reports) {
    std::vector<AcceptabilityRow> rows;
    for (const auto& r : reports)
        rows.push_back({r.frequency, r.family, r.total_savings, r.se_total, r.acceptable});
    std::stable_sort(rows.begin(), rows.end(),
                     [](const AcceptabilityRow& a, const AcceptabilityRow& b) {
                         if (a.frequency != b.frequency)
                             return step_seconds(a.frequency) < step_seconds(b.frequency);
                         return detail::family_order(a.family) < detail::family_order(b.family);
                     });
    return rows;
}

}  // namespace mv
