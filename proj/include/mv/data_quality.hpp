#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mv/matrix.hpp"
#include "mv/stats.hpp"
#include "mv/time.hpp"

namespace mv {

// Summary statistics for one proposed model feature. Outlier fences follow
// the box-plot rule: outside [Q1 - 1.5*IQR, Q3 + 1.5*IQR].
struct FeatureStats {
    std::string id;
    double mean = 0, median = 0;
    std::size_t unique_count = 0;
    std::size_t missing_count = 0;
    double q1 = 0, q2 = 0, q3 = 0;
    double min = 0, max = 0;
    std::size_t outlier_count = 0;
    double poor_quality_fraction = 0;
    double lo_fence = 0, hi_fence = 0;
    std::vector<double> outlier_values;
};

struct AvailabilitySummary {
    std::size_t grid_rows = 0;
    std::vector<FeatureStats> features;

    const FeatureStats& feature(const std::string& id) const {
        for (const auto& f : features)
            if (f.id == id) return f;
        throw std::runtime_error("availability summary has no feature '" + id + "'");
    }
    bool has(const std::string& id) const {
        for (const auto& f : features)
            if (f.id == id) return true;
        return false;
    }
};

// High-level statistical availability assessment of the listed features.
inline AvailabilitySummary assess(const FeatureMatrix& matrix,
                                  const std::vector<std::string>& feature_ids) {
    AvailabilitySummary summary;
    summary.grid_rows = matrix.rows();
    for (const auto& id : feature_ids) {
        const auto& col = matrix.col(id);
        FeatureStats st;
        st.id = id;
        std::vector<double> present;
        present.reserve(col.size());
        for (double v : col) {
            if (is_missing(v)) ++st.missing_count;
            else present.push_back(v);
        }
        if (present.size() < 4)
            throw std::runtime_error("assess: feature '" + id +
                                     "' has fewer than 4 values; quartiles are unstable");
        st.mean = mean_of(present);
        std::vector<double> sorted = present;
        std::sort(sorted.begin(), sorted.end());
        st.min = sorted.front();
        st.max = sorted.back();
        st.q1 = quantile_sorted(sorted, 0.25);
        st.q2 = quantile_sorted(sorted, 0.5);
        st.q3 = quantile_sorted(sorted, 0.75);
        st.median = st.q2;
        st.unique_count = 1;
        for (std::size_t i = 1; i < sorted.size(); ++i)
            if (sorted[i] != sorted[i - 1]) ++st.unique_count;
        double iqr = st.q3 - st.q1;
        st.lo_fence = st.q1 - 1.5 * iqr;
        st.hi_fence = st.q3 + 1.5 * iqr;
        for (double v : present)
            if (v < st.lo_fence || v > st.hi_fence) {
                ++st.outlier_count;
                st.outlier_values.push_back(v);
            }
        st.poor_quality_fraction =
            static_cast<double>(st.missing_count + st.outlier_count) /
            static_cast<double>(summary.grid_rows);
        summary.features.push_back(std::move(st));
    }
    return summary;
}

// Features with strictly more than `threshold` poor-quality data. The caller
// must re-run feature selection with these removed.
inline std::vector<std::string> omit_poor_features(const AvailabilitySummary& summary,
                                                   double threshold = 0.05) {
    std::vector<std::string> out;
    for (const auto& f : summary.features)
        if (f.poor_quality_fraction > threshold) out.push_back(f.id);
    return out;
}

// Removes rows containing an outlier or missing value in any assessed
// feature or in the dependent column. Values are never altered or imputed;
// flags come from the summary so re-cleaning with the same summary is a
// no-op.
inline FeatureMatrix clean(const FeatureMatrix& matrix, const AvailabilitySummary& summary) {
    std::vector<char> keep(matrix.rows(), 1);
    for (const auto& st : summary.features) {
        if (!matrix.has_column(st.id)) continue;
        const auto& col = matrix.col(st.id);
        for (std::size_t r = 0; r < matrix.rows(); ++r) {
            double v = col[r];
            if (is_missing(v) || v < st.lo_fence || v > st.hi_fence) keep[r] = 0;
        }
    }
    const auto& dep = matrix.dependent();
    for (std::size_t r = 0; r < matrix.rows(); ++r)
        if (is_missing(dep[r])) keep[r] = 0;

    std::size_t kept = 0;
    for (char k : keep) kept += k;
    if (kept * 2 < matrix.rows())
        throw std::runtime_error(
            "clean: would drop more than 50% of rows; data is insufficient for modelling");
    return matrix.filter_rows(keep);
}

// The sole permitted substitution: a consistent missing block may be filled
// with same-calendar-period data from another year, and only through this
// explicit, logged record.
struct SubstitutionRecord {
    std::string channel;
    DateInterval target;
    int source_year_offset = 0;
    std::size_t cells_filled = 0;
    std::string note;
};

inline SubstitutionRecord substitute_missing_block(FeatureMatrix& matrix,
                                                   const std::string& channel,
                                                   const DateInterval& target,
                                                   int source_year_offset,
                                                   const std::string& note) {
    if (source_year_offset == 0)
        throw std::runtime_error("substitute_missing_block: source year must differ");
    SubstitutionRecord rec{channel, target, source_year_offset, 0, note};
    auto& col = matrix.columns[matrix.col_index(channel)];
    // calendar shift: same month/day/time in the source year
    std::map<TimePoint, double> by_time;
    for (std::size_t r = 0; r < matrix.rows(); ++r)
        if (!is_missing(col[r])) by_time[matrix.times[r]] = col[r];
    for (std::size_t r = 0; r < matrix.rows(); ++r) {
        TimePoint t = matrix.times[r];
        if (!target.contains(t) || !is_missing(col[r])) continue;
        std::int64_t days = t / 86400;
        std::int64_t rem = t % 86400;
        int y;
        unsigned mo, d;
        detail::civil_from_days(days, y, mo, d);
        if (mo == 2 && d == 29) continue;  // no counterpart in most years
        TimePoint src = detail::days_from_civil(y + source_year_offset, mo, d) * 86400 + rem;
        auto it = by_time.find(src);
        if (it == by_time.end()) continue;
        col[r] = it->second;
        ++rec.cells_filled;
    }
    return rec;
}

}  // namespace mv
