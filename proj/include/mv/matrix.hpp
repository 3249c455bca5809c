#pragma once

#include <algorithm>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mv/common.hpp"
#include "mv/series.hpp"
#include "mv/time.hpp"

namespace mv {

// Aligned observation table: timestamps x (predictors..., dependent).
// The dependent variable is by convention the LAST column. Cells may be
// missing (NaN) except in the dependent column of an aligned matrix.
struct FeatureMatrix {
    std::vector<TimePoint> times;
    std::vector<std::string> names;            // column names, dependent last
    std::vector<std::vector<double>> columns;  // column-major

    std::size_t rows() const { return times.size(); }
    std::size_t col_count() const { return names.size(); }
    std::size_t dependent_index() const {
        if (names.empty()) throw std::runtime_error("empty matrix has no dependent column");
        return names.size() - 1;
    }
    const std::string& dependent_name() const { return names[dependent_index()]; }
    const std::vector<double>& dependent() const { return columns[dependent_index()]; }

    std::size_t col_index(const std::string& name) const {
        for (std::size_t i = 0; i < names.size(); ++i)
            if (names[i] == name) return i;
        throw std::runtime_error("column not found: " + name);
    }
    bool has_column(const std::string& name) const {
        return std::find(names.begin(), names.end(), name) != names.end();
    }
    const std::vector<double>& col(const std::string& name) const {
        return columns[col_index(name)];
    }

    std::vector<std::string> predictor_names() const {
        return {names.begin(), names.end() - 1};
    }

    void check() const {
        for (const auto& c : columns)
            if (c.size() != times.size())
                throw std::runtime_error("matrix column length mismatch");
        if (columns.size() != names.size())
            throw std::runtime_error("matrix name/column count mismatch");
    }

    // Keeps `keep` predictors (in the given order) plus the dependent column.
    FeatureMatrix select(const std::vector<std::string>& keep) const {
        FeatureMatrix out;
        out.times = times;
        for (const auto& name : keep) {
            if (name == dependent_name())
                throw std::runtime_error("select: dependent column listed as predictor");
            out.names.push_back(name);
            out.columns.push_back(col(name));
        }
        out.names.push_back(dependent_name());
        out.columns.push_back(dependent());
        return out;
    }

    FeatureMatrix filter_rows(const std::vector<char>& keep) const {
        if (keep.size() != rows()) throw std::runtime_error("filter_rows: mask size mismatch");
        FeatureMatrix out;
        out.names = names;
        out.columns.resize(columns.size());
        for (std::size_t r = 0; r < rows(); ++r) {
            if (!keep[r]) continue;
            out.times.push_back(times[r]);
            for (std::size_t c = 0; c < columns.size(); ++c)
                out.columns[c].push_back(columns[c][r]);
        }
        return out;
    }

    FeatureMatrix take_rows(std::span<const std::size_t> idx) const {
        FeatureMatrix out;
        out.names = names;
        out.columns.resize(columns.size());
        for (std::size_t r : idx) {
            out.times.push_back(times[r]);
            for (std::size_t c = 0; c < columns.size(); ++c)
                out.columns[c].push_back(columns[c][r]);
        }
        return out;
    }

    // Rows where every listed column is present.
    std::vector<std::size_t> complete_rows(const std::vector<std::size_t>& cols_needed) const {
        std::vector<std::size_t> out;
        for (std::size_t r = 0; r < rows(); ++r) {
            bool ok = true;
            for (std::size_t c : cols_needed)
                if (is_missing(columns[c][r])) {
                    ok = false;
                    break;
                }
            if (ok) out.push_back(r);
        }
        return out;
    }
};

// Number of native-grid points inside the half-open period.
inline std::size_t grid_size(const DateInterval& period, std::int64_t step) {
    if (step <= 0) throw std::runtime_error("align: non-positive native step");
    TimePoint first = ((period.start + step - 1) / step) * step;
    if (first >= period.end) return 0;
    return static_cast<std::size_t>((period.end - 1 - first) / step + 1);
}

// Builds the observation matrix on the native-frequency grid restricted to
// the period. A row is kept only when the dependent value is present;
// missing predictor cells stay missing. Never invents values.
inline FeatureMatrix align(const RawDataset& dataset, const DateInterval& period,
                           const std::string& dependent_id) {
    if (!period.valid()) throw std::runtime_error("align: empty period");
    const TaggedChannel* dep = dataset.find(dependent_id);
    if (!dep) throw std::runtime_error("align: dependent channel '" + dependent_id + "' not found");

    const std::int64_t step = dataset.native_step_seconds;
    if (step <= 0)
        throw std::runtime_error("align: dataset has no usable native spacing");
    TimePoint first = ((period.start + step - 1) / step) * step;

    // dependent-driven row selection on the grid
    std::vector<TimePoint> grid_times;
    std::vector<double> dep_vals;
    for (std::size_t i = 0; i < dep->size(); ++i) {
        TimePoint t = dep->times[i];
        if (t < first || t >= period.end) continue;
        if ((t - first) % step != 0) continue;  // off-grid samples are not grid rows
        grid_times.push_back(t);
        dep_vals.push_back(dep->values[i]);
    }
    if (grid_times.empty())
        throw std::runtime_error("align: dependent channel '" + dependent_id +
                                 "' has no data in the period");

    FeatureMatrix m;
    m.times = grid_times;
    for (const auto& ch : dataset.channels) {
        if (ch.id == dependent_id) continue;
        std::vector<double> colv(grid_times.size(), kMissing);
        std::size_t j = 0;
        for (std::size_t r = 0; r < grid_times.size(); ++r) {
            while (j < ch.size() && ch.times[j] < grid_times[r]) ++j;
            if (j < ch.size() && ch.times[j] == grid_times[r]) colv[r] = ch.values[j];
        }
        m.names.push_back(ch.id);
        m.columns.push_back(std::move(colv));
    }
    m.names.push_back(dep->id);
    m.columns.push_back(std::move(dep_vals));
    return m;
}

}  // namespace mv
