#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mv/linreg.hpp"
#include "mv/matrix.hpp"
#include "mv/stats.hpp"

namespace mv {

// Spearman rank correlation. When all ranks are distinct integers the
// closed form 1 - 6*sum(d_i^2)/(m(m^2-1)) applies; with ties the coefficient
// is the Pearson correlation of the average-rank vectors.
inline double spearman_rho(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) throw std::invalid_argument("spearman_rho: length mismatch");
    const std::size_t m = x.size();
    if (m < 3) throw std::invalid_argument("spearman_rho: need at least 3 observations");
    for (std::size_t i = 0; i < m; ++i)
        if (is_missing(x[i]) || is_missing(y[i]))
            throw std::invalid_argument("spearman_rho: missing values not allowed");

    auto zero_var = [](std::span<const double> v) {
        for (std::size_t i = 1; i < v.size(); ++i)
            if (v[i] != v[0]) return false;
        return true;
    };
    if (zero_var(x) || zero_var(y))
        throw std::invalid_argument("spearman_rho: zero-variance input");

    std::vector<double> rx = average_ranks(x);
    std::vector<double> ry = average_ranks(y);

    // ranks are distinct integers exactly when the underlying values carry
    // no ties (a tie of odd size still averages to an integer rank)
    auto distinct_integers = [](std::span<const double> v) {
        std::vector<double> sorted(v.begin(), v.end());
        std::sort(sorted.begin(), sorted.end());
        return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
    };
    if (distinct_integers(x) && distinct_integers(y)) {
        double sum_d2 = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
            double d = rx[i] - ry[i];
            sum_d2 += d * d;
        }
        double md = static_cast<double>(m);
        return 1.0 - (6.0 * sum_d2) / (md * (md * md - 1.0));
    }
    return pearson(rx, ry);
}

struct CorrelationEntry {
    std::string id;
    double rho = 0.0;
    bool excluded = false;
    std::string exclusion_reason;
};

struct CorrelationReport {
    // one entry per predictor, sorted by decreasing |rho|; excluded entries
    // (zero variance, too few paired observations) sort last in input order
    std::vector<CorrelationEntry> entries;

    std::vector<std::string> ranked_ids() const {
        std::vector<std::string> out;
        for (const auto& e : entries)
            if (!e.excluded) out.push_back(e.id);
        return out;
    }
};

// Ranks every predictor against the dependent variable. Correlations are
// computed on rows where both the predictor and the dependent are present.
inline CorrelationReport rank_variables(const FeatureMatrix& matrix) {
    if (matrix.col_count() < 2)
        throw std::runtime_error("rank_variables: need at least one predictor");
    CorrelationReport report;
    const auto& dep = matrix.dependent();
    for (std::size_t c = 0; c + 1 < matrix.col_count(); ++c) {
        CorrelationEntry e;
        e.id = matrix.names[c];
        std::vector<double> xs, ys;
        for (std::size_t r = 0; r < matrix.rows(); ++r) {
            if (is_missing(matrix.columns[c][r]) || is_missing(dep[r])) continue;
            xs.push_back(matrix.columns[c][r]);
            ys.push_back(dep[r]);
        }
        try {
            e.rho = spearman_rho(xs, ys);
        } catch (const std::exception& ex) {
            e.excluded = true;
            e.exclusion_reason = ex.what();
        }
        report.entries.push_back(std::move(e));
    }
    std::stable_sort(report.entries.begin(), report.entries.end(),
                     [](const CorrelationEntry& a, const CorrelationEntry& b) {
                         if (a.excluded != b.excluded) return !a.excluded;
                         if (a.excluded) return false;
                         return std::fabs(a.rho) > std::fabs(b.rho);
                     });
    return report;
}

namespace detail {

// OLS fit over the rows where all requested columns plus the dependent are
// present. Throws on rank deficiency / too few rows.
inline OlsFit fit_subset(const FeatureMatrix& matrix, const std::vector<std::string>& features) {
    if (features.empty()) throw std::runtime_error("fit: empty feature list");
    std::vector<std::size_t> cols;
    for (const auto& f : features) cols.push_back(matrix.col_index(f));
    std::vector<std::size_t> needed = cols;
    needed.push_back(matrix.dependent_index());
    std::vector<std::size_t> rows = matrix.complete_rows(needed);
    if (rows.size() < features.size() + 2)
        throw std::runtime_error("fit: too few complete rows for " +
                                 std::to_string(features.size()) + " features");
    Eigen::MatrixXd x(rows.size(), features.size());
    Eigen::VectorXd y(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < cols.size(); ++j) x(i, j) = matrix.columns[cols[j]][rows[i]];
        y(i) = matrix.dependent()[rows[i]];
    }
    return ols_fit(x, y);
}

}  // namespace detail

// Adjusted R^2 of the least-squares fit (with intercept) on the listed
// features: 1 - (1-R^2)(m-1)/(m-k-1).
inline double fit_ols_adjusted_r2(const FeatureMatrix& matrix,
                                  const std::vector<std::string>& features) {
    return detail::fit_subset(matrix, features).adjusted_r2;
}

// Variance inflation factors: VIF_j = 1/(1-R^2_j) from regressing feature j
// on the remaining features. Perfect collinearity reports +infinity.
inline std::map<std::string, double> vif(const FeatureMatrix& matrix,
                                         const std::vector<std::string>& features) {
    if (features.size() < 2)
        throw std::runtime_error("vif: needs at least 2 features");
    std::vector<std::size_t> cols;
    for (const auto& f : features) cols.push_back(matrix.col_index(f));
    std::vector<std::size_t> rows = matrix.complete_rows(cols);
    if (rows.size() < features.size() + 2)
        throw std::runtime_error("vif: too few complete rows");

    Eigen::MatrixXd x(rows.size(), features.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) x(i, j) = matrix.columns[cols[j]][rows[i]];

    std::map<std::string, double> out;
    for (std::size_t j = 0; j < features.size(); ++j) {
        Eigen::MatrixXd others(x.rows(), features.size() - 1);
        std::size_t w = 0;
        for (std::size_t c = 0; c < features.size(); ++c)
            if (c != j) others.col(w++) = x.col(c);
        Eigen::MatrixXd design(x.rows(), others.cols() + 1);
        design.leftCols(others.cols()) = others;
        design.col(others.cols()).setOnes();

        // solve without the rank guard: collinear regressors still give a
        // valid R^2_j via the minimum-norm solution
        Eigen::VectorXd target = x.col(j);
        Eigen::VectorXd beta = design.colPivHouseholderQr().solve(target);
        double ss_res = (target - design * beta).squaredNorm();
        double mu = target.mean();
        double ss_tot = (target.array() - mu).square().sum();
        if (ss_tot == 0.0) {
            out[features[j]] = std::numeric_limits<double>::infinity();
            continue;
        }
        double r2 = 1.0 - ss_res / ss_tot;
        if (r2 >= 1.0 - 1e-12)
            out[features[j]] = std::numeric_limits<double>::infinity();
        else
            out[features[j]] = 1.0 / (1.0 - r2);
    }
    return out;
}

struct FeatureSubset {
    std::vector<std::string> selected;  // in acceptance (rank) order
    double adjusted_r2 = 0.0;
    std::map<std::string, double> vif_values;
    std::vector<double> greedy_trace;  // adjusted R^2 after each accepted feature
    CorrelationReport correlations;
};

// Iteratively removes the worst VIF offender while any VIF exceeds 5,
// recomputing after each removal. Rank order breaks ties (the later-ranked
// feature goes first).
inline FeatureSubset vif_screen(FeatureSubset subset, const FeatureMatrix& matrix) {
    constexpr double kVifLimit = 5.0;
    while (subset.selected.size() >= 2) {
        auto vifs = vif(matrix, subset.selected);
        double worst = -1.0;
        std::size_t worst_pos = 0;
        for (std::size_t i = 0; i < subset.selected.size(); ++i) {
            double v = vifs.at(subset.selected[i]);
            // >= keeps scanning forward so the LAST (lowest-ranked) among
            // equal offenders is removed
            if (v >= worst) {
                worst = v;
                worst_pos = i;
            }
        }
        if (worst <= kVifLimit) {
            subset.vif_values = std::move(vifs);
            return subset;
        }
        subset.selected.erase(subset.selected.begin() + static_cast<std::ptrdiff_t>(worst_pos));
    }
    subset.vif_values.clear();
    if (subset.selected.size() == 1) subset.vif_values[subset.selected[0]] = 1.0;
    return subset;
}

// Rank-ordered greedy selection: the top-ranked predictor seeds the subset
// and a candidate is kept only when it improves adjusted R^2 by more than
// 0.01. A VIF screen then removes multicollinear features and the adjusted
// R^2 of the final subset is recomputed.
inline FeatureSubset select_features(const FeatureMatrix& matrix) {
    FeatureSubset out;
    out.correlations = rank_variables(matrix);
    std::vector<std::string> ranked = out.correlations.ranked_ids();
    if (ranked.empty())
        throw std::runtime_error("select_features: no usable predictor (all excluded)");

    double current = -std::numeric_limits<double>::infinity();
    for (const auto& candidate : ranked) {
        std::vector<std::string> trial = out.selected;
        trial.push_back(candidate);
        double adj;
        try {
            adj = fit_ols_adjusted_r2(matrix, trial);
        } catch (const std::exception&) {
            continue;  // rank-deficient or too few rows: skip the candidate
        }
        if (out.selected.empty() || adj - current > 0.01) {
            out.selected = std::move(trial);
            current = adj;
            out.greedy_trace.push_back(adj);
        }
    }
    if (out.selected.empty())
        throw std::runtime_error("select_features: no predictor yields a fittable model");
    out.adjusted_r2 = current;

    out = vif_screen(std::move(out), matrix);
    out.adjusted_r2 = fit_ols_adjusted_r2(matrix, out.selected);
    return out;
}

}  // namespace mv
