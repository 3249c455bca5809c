#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mv/common.hpp"
#include "mv/fit_ann.hpp"
#include "mv/fit_knn.hpp"
#include "mv/fit_ols.hpp"
#include "mv/fit_svr.hpp"
#include "mv/matrix.hpp"
#include "mv/model.hpp"

namespace mv {

// Recommended grid-search values per algorithm. Defaults are the published
// recommendations; callers may override any of them.
struct HyperGrid {
    std::vector<bool> ols_intercept{false, true};
    std::vector<int> knn_k{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    std::vector<int> knn_d{1, 2, 3, 4, 5};
    std::vector<int> ann_hidden{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    int ann_max_iter = 1000;
    double ann_threshold = 0.01;
    std::vector<double> ann_decay{0.001, 0.01, 0.1, 0.5};
    std::vector<double> svm_cost{0.25, 0.5, 1.0};
    double svm_epsilon = 0.1;

    void validate() const {
        if (ols_intercept.empty() || knn_k.empty() || knn_d.empty() || ann_hidden.empty() ||
            ann_decay.empty() || svm_cost.empty())
            throw std::runtime_error("hyper-parameter grid must be non-empty");
    }
};

namespace detail {

struct FoldPlan {
    std::vector<std::size_t> starts;  // folds are contiguous blocks of the
    std::vector<std::size_t> ends;    // (already shuffled) training order
};

inline FoldPlan make_folds(std::size_t rows, std::size_t folds) {
    if (rows < folds) throw std::runtime_error("grid search: fewer rows than folds");
    FoldPlan plan;
    std::size_t q = rows / folds, r = rows % folds;
    std::size_t pos = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        std::size_t len = q + (f < r ? 1 : 0);
        plan.starts.push_back(pos);
        plan.ends.push_back(pos + len);
        pos += len;
    }
    return plan;
}

inline std::vector<std::size_t> fold_complement(const FoldPlan& plan, std::size_t f,
                                                std::size_t rows) {
    std::vector<std::size_t> idx;
    idx.reserve(rows - (plan.ends[f] - plan.starts[f]));
    for (std::size_t i = 0; i < rows; ++i)
        if (i < plan.starts[f] || i >= plan.ends[f]) idx.push_back(i);
    return idx;
}

struct CandidateScore {
    // per-fold (sse, n); the mean of per-fold RMSEs is the candidate score
    std::vector<double> fold_sse;
    std::vector<std::size_t> fold_n;
    bool failed = false;
    std::string failure;

    double mean_rmse(std::size_t folds) const {
        double acc = 0.0;
        for (std::size_t f = 0; f < folds; ++f)
            acc += std::sqrt(fold_sse[f] / static_cast<double>(fold_n[f]));
        return acc / static_cast<double>(folds);
    }
};

inline std::uint64_t matrix_fingerprint(const FeatureMatrix& m) {
    std::uint64_t h = fnv1a_u64(m.rows());
    for (const auto& name : m.names) h = fnv1a(name, h);
    for (const auto& col : m.columns)
        for (double v : col) {
            std::uint64_t bits;
            static_assert(sizeof(bits) == sizeof(v));
            std::memcpy(&bits, &v, sizeof(bits));
            h = fnv1a_u64(bits, h);
        }
    return h;
}

// Cross-validates the whole kNN grid with one distance pass per fold chunk:
// each (query, training row) pair is visited once, all Minkowski orders are
// accumulated together and every k is scored from the same neighbour list.
inline std::vector<CandidateScore> knn_cv(const FeatureMatrix& train, const HyperGrid& grid,
                                          const FoldPlan& plan) {
    const std::size_t folds = plan.starts.size();
    const std::size_t rows = train.rows();
    const std::size_t dims = train.col_count() - 1;
    const std::size_t n_k = grid.knn_k.size(), n_d = grid.knn_d.size();
    const int k_max = *std::max_element(grid.knn_k.begin(), grid.knn_k.end());
    for (int d : grid.knn_d)
        if (d < 1 || d > 5)
            throw std::runtime_error("knn grid: Minkowski order must be in 1..5");

    // flat row-major copy of the feature block + targets
    std::vector<double> xs(rows * dims);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t f = 0; f < dims; ++f) xs[r * dims + f] = train.columns[f][r];
    const std::vector<double>& ys = train.dependent();

    constexpr std::size_t kChunk = 256;
    struct Task {
        std::size_t fold, q_begin, q_end;
    };
    std::vector<Task> tasks;
    for (std::size_t f = 0; f < folds; ++f)
        for (std::size_t q = plan.starts[f]; q < plan.ends[f]; q += kChunk)
            tasks.push_back({f, q, std::min(q + kChunk, plan.ends[f])});

    // per-task partial SSE per (k, d)
    std::vector<std::vector<double>> partial(tasks.size(),
                                             std::vector<double>(n_k * n_d, 0.0));

    parallel_for(tasks.size(), [&](std::size_t ti) {
        const Task& task = tasks[ti];
        std::vector<KnnNeighbourList> lists(n_d);
        std::vector<double>& out = partial[ti];
        for (std::size_t q = task.q_begin; q < task.q_end; ++q) {
            const double* qx = xs.data() + q * dims;
            for (auto& l : lists) l.reset(static_cast<std::size_t>(k_max) + 1);
            // single pass over the fold complement
            auto scan = [&](std::size_t lo, std::size_t hi) {
                for (std::size_t r = lo; r < hi; ++r) {
                    const double* rx = xs.data() + r * dims;
                    double s1 = 0, s2 = 0, s3 = 0, s4 = 0, s5 = 0;
                    for (std::size_t f = 0; f < dims; ++f) {
                        double a = std::fabs(qx[f] - rx[f]);
                        double a2 = a * a;
                        s1 += a;
                        s2 += a2;
                        s3 += a2 * a;
                        s4 += a2 * a2;
                        s5 += a2 * a2 * a;
                    }
                    const double sums[5] = {s1, s2, s3, s4, s5};
                    for (std::size_t di = 0; di < n_d; ++di)
                        lists[di].offer(sums[grid.knn_d[di] - 1], r);
                }
            };
            scan(0, plan.starts[task.fold]);
            scan(plan.ends[task.fold], rows);

            double target = ys[q];
            for (std::size_t di = 0; di < n_d; ++di)
                for (std::size_t ki = 0; ki < n_k; ++ki) {
                    double pred = lists[di].predict(static_cast<std::size_t>(grid.knn_k[ki]),
                                                    grid.knn_d[di], ys);
                    double e = pred - target;
                    out[ki * n_d + di] += e * e;
                }
        }
    });

    // reduce in task order: deterministic regardless of thread count
    std::vector<CandidateScore> scores(n_k * n_d);
    for (auto& s : scores) {
        s.fold_sse.assign(folds, 0.0);
        s.fold_n.assign(folds, 0);
    }
    for (std::size_t ti = 0; ti < tasks.size(); ++ti)
        for (std::size_t c = 0; c < n_k * n_d; ++c)
            scores[c].fold_sse[tasks[ti].fold] += partial[ti][c];
    for (std::size_t f = 0; f < folds; ++f) {
        std::size_t len = plan.ends[f] - plan.starts[f];
        for (auto& s : scores) s.fold_n[f] = len;
    }
    // neighbour lists need at least one training row beyond k; candidates
    // with k > smallest fold-complement are unusable
    std::size_t min_complement = rows;
    for (std::size_t f = 0; f < folds; ++f)
        min_complement = std::min(min_complement, rows - (plan.ends[f] - plan.starts[f]));
    for (std::size_t ki = 0; ki < n_k; ++ki)
        if (static_cast<std::size_t>(grid.knn_k[ki]) > min_complement)
            for (std::size_t di = 0; di < n_d; ++di) {
                scores[ki * n_d + di].failed = true;
                scores[ki * n_d + di].failure = "k exceeds fold training size";
            }
    return scores;
}

}  // namespace detail

// Deterministic seed for one (family, grid point, fold) training task.
inline std::uint64_t task_seed(std::uint64_t base, ModelFamily family, std::size_t point,
                               std::size_t fold) {
    return derive_seed(base, to_string(family), (point << 16) ^ fold);
}

// Grid search over 10-fold cross validation: the fold partition is fixed
// before any candidate is scored, every candidate sees the same folds, and
// the winner (lowest mean validation RMSE, ties to the simpler model) is
// refitted on the full training set.
inline TrainedModel grid_search(const FeatureMatrix& train, ModelFamily family,
                                const HyperGrid& grid, std::size_t folds, std::uint64_t seed) {
    grid.validate();
    const std::size_t rows = train.rows();
    detail::FoldPlan plan = detail::make_folds(rows, folds);

    // candidate enumeration in simplest-first order; a strict '<' comparison
    // then makes ties resolve to the simpler model
    struct Candidate {
        std::function<TrainedModel(const FeatureMatrix&, std::uint64_t)> fit;
        std::string label;
        // the winner's refit on the full training set; defaults to fit
        std::function<TrainedModel(const FeatureMatrix&, std::uint64_t)> fit_final;
    };
    std::vector<Candidate> cands;
    std::vector<detail::CandidateScore> scores;

    auto eval_generic = [&](auto&& fit_at) {
        scores.assign(cands.size(), {});
        for (auto& s : scores) {
            s.fold_sse.assign(folds, 0.0);
            s.fold_n.assign(folds, 0);
        }
        struct Slot {
            double sse = 0.0;
            std::size_t n = 0;
            bool failed = false;
            std::string failure;
        };
        std::vector<Slot> slots(cands.size() * folds);
        parallel_for(slots.size(), [&](std::size_t si) {
            std::size_t point = si / folds, fold = si % folds;
            Slot& slot = slots[si];
            try {
                std::vector<std::size_t> tr_idx =
                    detail::fold_complement(plan, fold, rows);
                FeatureMatrix tr = train.take_rows(tr_idx);
                TrainedModel m = fit_at(point, tr, task_seed(seed, family, point, fold));
                std::vector<double> x(train.col_count() - 1);
                for (std::size_t q = plan.starts[fold]; q < plan.ends[fold]; ++q) {
                    for (std::size_t f = 0; f + 1 < train.col_count(); ++f)
                        x[f] = train.columns[f][q];
                    double e = m.predict(x) - train.dependent()[q];
                    slot.sse += e * e;
                    slot.n += 1;
                }
            } catch (const std::exception& ex) {
                slot.failed = true;
                slot.failure = ex.what();
            }
        });
        for (std::size_t si = 0; si < slots.size(); ++si) {
            std::size_t point = si / folds, fold = si % folds;
            if (slots[si].failed) {
                scores[point].failed = true;
                scores[point].failure = slots[si].failure;
            } else {
                scores[point].fold_sse[fold] += slots[si].sse;
                scores[point].fold_n[fold] += slots[si].n;
            }
        }
    };

    switch (family) {
        case ModelFamily::ols: {
            for (bool ic : grid.ols_intercept) {
                cands.push_back({[ic](const FeatureMatrix& tr, std::uint64_t) {
                                     TrainedModel m;
                                     m.state = fit_ols_state(tr, ic);
                                     return m;
                                 },
                                 std::string("intercept=") + (ic ? "true" : "false")});
            }
            eval_generic([&](std::size_t p, const FeatureMatrix& tr, std::uint64_t s) {
                return cands[p].fit(tr, s);
            });
            break;
        }
        case ModelFamily::knn: {
            for (int k : grid.knn_k)
                for (int d : grid.knn_d)
                    cands.push_back({[k, d](const FeatureMatrix& tr, std::uint64_t) {
                                         TrainedModel m;
                                         m.state = fit_knn_state(tr, k, d);
                                         return m;
                                     },
                                     "k=" + std::to_string(k) + " d=" + std::to_string(d)});
            scores = detail::knn_cv(train, grid, plan);
            break;
        }
        case ModelFamily::ann: {
            for (int hsz : grid.ann_hidden) {
                // larger decay first: the stronger-regularised model is the
                // simpler one on ties
                std::vector<double> decays = grid.ann_decay;
                std::sort(decays.begin(), decays.end(), std::greater<double>());
                for (double dec : decays)
                    cands.push_back(
                        {[hsz, dec, &grid](const FeatureMatrix& tr, std::uint64_t s) {
                             AnnOptions o;
                             o.hidden_units = hsz;
                             o.max_iter = grid.ann_max_iter;
                             o.threshold = grid.ann_threshold;
                             o.decay = dec;
                             o.seed = s;
                             TrainedModel m;
                             m.state = fit_ann_state(tr, o);
                             return m;
                         },
                         "hidden=" + std::to_string(hsz) + " decay=" + format_double(dec)});
            }
            eval_generic([&](std::size_t p, const FeatureMatrix& tr, std::uint64_t s) {
                return cands[p].fit(tr, s);
            });
            break;
        }
        case ModelFamily::svm: {
            std::vector<double> costs = grid.svm_cost;
            std::sort(costs.begin(), costs.end());
            for (double c : costs) {
                Candidate cand;
                cand.fit = [c, &grid](const FeatureMatrix& tr, std::uint64_t) {
                    SvrOptions o;
                    o.cost = c;
                    o.epsilon = grid.svm_epsilon;
                    TrainedModel m;
                    m.state = fit_svr_state(tr, o);
                    return m;
                };
                // the persisted model gets a tighter solve than the fold fits
                cand.fit_final = [c, &grid](const FeatureMatrix& tr, std::uint64_t) {
                    SvrOptions o;
                    o.cost = c;
                    o.epsilon = grid.svm_epsilon;
                    o.rel_tol = 1e-6;
                    o.max_sweeps = 20000;
                    TrainedModel m;
                    m.state = fit_svr_state(tr, o);
                    return m;
                };
                cand.label = "cost=" + format_double(c);
                cands.push_back(std::move(cand));
            }
            eval_generic([&](std::size_t p, const FeatureMatrix& tr, std::uint64_t s) {
                return cands[p].fit(tr, s);
            });
            break;
        }
    }

    // kNN candidates were enumerated in (k asc, d asc) order matching knn_cv's
    // score layout; others were enumerated alongside their scores
    std::optional<std::size_t> best;
    double best_rmse = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (scores[i].failed) continue;
        double rmse = scores[i].mean_rmse(folds);
        if (!std::isfinite(rmse)) continue;
        if (!best || rmse < best_rmse) {
            best = i;
            best_rmse = rmse;
        }
    }
    if (!best) {
        std::string why = scores.empty() ? "empty grid" : scores.front().failure;
        throw std::runtime_error("grid search: every " + to_string(family) +
                                 " candidate failed (" + why + ")");
    }

    const auto& refit = cands[*best].fit_final ? cands[*best].fit_final : cands[*best].fit;
    TrainedModel model = refit(train, task_seed(seed, family, *best, 0xffffu));
    model.family = family;
    model.feature_names = train.predictor_names();
    model.dependent_name = train.dependent_name();
    model.cv_score = best_rmse;
    model.train_rows = rows;
    model.train_fingerprint = detail::matrix_fingerprint(train);
    return model;
}

// One standardised (train, test) pair per measurement frequency, with the
// scaling captured on the training part.
struct FrequencyBundle {
    Frequency frequency = Frequency::hourly;
    FeatureMatrix train_std;     // standardised training matrix (shuffled order)
    FeatureMatrix test_original; // held-out rows in original units
    FeatureMatrix train_original;
    ScalingParams scaling;
};

struct TrainFailure {
    Frequency frequency;
    ModelFamily family;
    std::string reason;
};

struct TrainAllResult {
    std::vector<TrainedModel> models;
    std::vector<TrainFailure> failures;
};

// Trains every (algorithm, frequency) pair: |families| x |frequencies|
// models. Individual failures are reported without aborting the rest.
inline TrainAllResult train_all(const std::vector<FrequencyBundle>& bundles,
                                const HyperGrid& grid, std::uint64_t seed,
                                std::size_t folds = 10,
                                const std::vector<ModelFamily>& families = {
                                    ModelFamily::ols, ModelFamily::knn, ModelFamily::ann,
                                    ModelFamily::svm}) {
    TrainAllResult out;
    for (const auto& bundle : bundles) {
        for (ModelFamily family : families) {
            std::uint64_t family_seed =
                derive_seed(seed, "train-" + to_string(bundle.frequency),
                            static_cast<std::uint64_t>(family));
            try {
                TrainedModel m = grid_search(bundle.train_std, family, grid, folds, family_seed);
                m.frequency = bundle.frequency;
                m.scaling = bundle.scaling;
                out.models.push_back(std::move(m));
            } catch (const std::exception& ex) {
                out.failures.push_back({bundle.frequency, family, ex.what()});
            }
        }
    }
    return out;
}

}  // namespace mv
