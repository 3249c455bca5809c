#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mv/common.hpp"
#include "mv/preprocess.hpp"
#include "mv/time.hpp"

namespace mv {

enum class ModelFamily { ols, knn, ann, svm };

inline constexpr ModelFamily kAllFamilies[] = {ModelFamily::ols, ModelFamily::knn,
                                               ModelFamily::ann, ModelFamily::svm};

inline std::string to_string(ModelFamily f) {
    switch (f) {
        case ModelFamily::ols: return "ols";
        case ModelFamily::knn: return "knn";
        case ModelFamily::ann: return "ann";
        case ModelFamily::svm: return "svm";
    }
    throw std::logic_error("unknown model family");
}

inline ModelFamily parse_family(const std::string& s) {
    if (s == "ols") return ModelFamily::ols;
    if (s == "knn") return ModelFamily::knn;
    if (s == "ann") return ModelFamily::ann;
    if (s == "svm") return ModelFamily::svm;
    throw std::runtime_error("unknown model family '" + s + "'");
}

struct OlsState {
    bool intercept = true;
    std::vector<double> coeffs;  // per feature
    double intercept_value = 0.0;
};

struct KnnState {
    int k = 1;
    int minkowski_order = 2;
    std::size_t rows = 0, dims = 0;
    std::vector<double> train_x;  // row-major rows x dims, standardised
    std::vector<double> train_y;  // standardised
};

struct AnnState {
    int hidden_units = 1;
    double decay = 0.0;
    std::size_t dims = 0;
    // layout: W1 (hidden x dims), b1 (hidden), w2 (hidden), b2 (1)
    std::vector<double> weights;
    int iterations_run = 0;
};

struct SvrState {
    double cost = 1.0;
    double epsilon = 0.1;
    std::vector<double> w;  // per feature
    double b = 0.0;
    int sweeps_run = 0;
};

// A fitted baseline energy model. Predictions map standardised feature rows
// to a standardised dependent value; the embedded ScalingParams (captured at
// fit time) convert to and from original units.
struct TrainedModel {
    ModelFamily family = ModelFamily::ols;
    Frequency frequency = Frequency::hourly;
    std::vector<std::string> feature_names;  // order of predict() inputs
    std::string dependent_name;
    ScalingParams scaling;
    double cv_score = 0.0;  // mean 10-fold validation RMSE, standardised units
    std::uint64_t train_rows = 0;
    std::uint64_t train_fingerprint = 0;
    std::variant<OlsState, KnnState, AnnState, SvrState> state;

    double predict(std::span<const double> x) const;
    std::string describe_hyper() const;
};

namespace detail {

inline double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

inline double minkowski_pow(double t, int d) {
    double a = std::fabs(t);
    switch (d) {
        case 1: return a;
        case 2: return a * a;
        case 3: return a * a * a;
        case 4: {
            double s = a * a;
            return s * s;
        }
        case 5: {
            double s = a * a;
            return s * s * a;
        }
        default: return std::pow(a, d);
    }
}

inline double minkowski_root(double acc, int d) {
    switch (d) {
        case 1: return acc;
        case 2: return std::sqrt(acc);
        default: return std::pow(acc, 1.0 / d);
    }
}

}  // namespace detail

inline double predict_ols(const OlsState& s, std::span<const double> x) {
    if (x.size() != s.coeffs.size()) throw std::runtime_error("ols predict: dimension mismatch");
    double y = s.intercept ? s.intercept_value : 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) y += s.coeffs[i] * x[i];
    return y;
}

// Triangular-kernel weighted average of the k nearest training targets.
// Distances are scaled by the (k+1)-th nearest distance so the k-th
// neighbour keeps positive weight; when that scale is zero (or every weight
// vanishes) the k targets are averaged uniformly. Ties in distance break by
// training-row index.
inline double predict_knn(const KnnState& s, std::span<const double> x) {
    if (x.size() != s.dims) throw std::runtime_error("knn predict: dimension mismatch");
    if (s.rows == 0) throw std::runtime_error("knn predict: empty training set");
    const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(s.k), s.rows);
    const std::size_t keep = std::min(k + 1, s.rows);

    // bounded insertion-sorted neighbour list of (distance^d, index)
    struct Neighbour {
        double dp;
        std::size_t idx;
    };
    std::vector<Neighbour> best;
    best.reserve(keep + 1);
    for (std::size_t r = 0; r < s.rows; ++r) {
        const double* row = s.train_x.data() + r * s.dims;
        double acc = 0.0;
        for (std::size_t f = 0; f < s.dims; ++f)
            acc += detail::minkowski_pow(x[f] - row[f], s.minkowski_order);
        if (best.size() == keep && acc >= best.back().dp) continue;
        Neighbour nb{acc, r};
        auto pos = std::lower_bound(best.begin(), best.end(), nb, [](const Neighbour& a,
                                                                     const Neighbour& b) {
            if (a.dp != b.dp) return a.dp < b.dp;
            return a.idx < b.idx;
        });
        best.insert(pos, nb);
        if (best.size() > keep) best.pop_back();
    }

    if (k == 1) return s.train_y[best.front().idx];  // single neighbour, no averaging
    double scale = detail::minkowski_root(best.back().dp, s.minkowski_order);  // (k+1)-th or last
    double wsum = 0.0, ysum = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        double dist = detail::minkowski_root(best[i].dp, s.minkowski_order);
        double w = scale > 0.0 ? std::max(0.0, 1.0 - dist / scale) : 0.0;
        wsum += w;
        ysum += w * s.train_y[best[i].idx];
    }
    if (wsum <= 0.0) {
        double t = 0.0;
        for (std::size_t i = 0; i < k; ++i) t += s.train_y[best[i].idx];
        return t / static_cast<double>(k);
    }
    return ysum / wsum;
}

inline double predict_ann(const AnnState& s, std::span<const double> x) {
    if (x.size() != s.dims) throw std::runtime_error("ann predict: dimension mismatch");
    const std::size_t h = static_cast<std::size_t>(s.hidden_units);
    const double* w1 = s.weights.data();              // h x dims
    const double* b1 = w1 + h * s.dims;               // h
    const double* w2 = b1 + h;                        // h
    const double b2 = *(w2 + h);
    double y = b2;
    for (std::size_t j = 0; j < h; ++j) {
        double z = b1[j];
        const double* wrow = w1 + j * s.dims;
        for (std::size_t f = 0; f < s.dims; ++f) z += wrow[f] * x[f];
        y += w2[j] * detail::sigmoid(z);
    }
    return y;
}

inline double predict_svr(const SvrState& s, std::span<const double> x) {
    if (x.size() != s.w.size()) throw std::runtime_error("svr predict: dimension mismatch");
    double y = s.b;
    for (std::size_t i = 0; i < x.size(); ++i) y += s.w[i] * x[i];
    return y;
}

inline double TrainedModel::predict(std::span<const double> x) const {
    return std::visit(
        [&](const auto& st) -> double {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, OlsState>) return predict_ols(st, x);
            else if constexpr (std::is_same_v<T, KnnState>) return predict_knn(st, x);
            else if constexpr (std::is_same_v<T, AnnState>) return predict_ann(st, x);
            else return predict_svr(st, x);
        },
        state);
}

inline std::string TrainedModel::describe_hyper() const {
    return std::visit(
        [](const auto& st) -> std::string {
            using T = std::decay_t<decltype(st)>;
            if constexpr (std::is_same_v<T, OlsState>) {
                return std::string("intercept=") + (st.intercept ? "true" : "false");
            } else if constexpr (std::is_same_v<T, KnnState>) {
                return "k=" + std::to_string(st.k) + " d=" + std::to_string(st.minkowski_order) +
                       " kernel=triangular";
            } else if constexpr (std::is_same_v<T, AnnState>) {
                return "hidden=" + std::to_string(st.hidden_units) +
                       " decay=" + format_double(st.decay);
            } else {
                return "cost=" + format_double(st.cost) + " kernel=linear eps=" +
                       format_double(st.epsilon);
            }
        },
        state);
}

// ---- persistence ----------------------------------------------------------
// Structured text (JSON); doubles are emitted so they parse back to the
// identical bits, making loaded models predict bit-identically.

namespace detail {

inline nlohmann::json scaling_to_json(const ScalingParams& p) {
    nlohmann::json cols = nlohmann::json::array();
    for (std::size_t i = 0; i < p.names.size(); ++i)
        cols.push_back({{"name", p.names[i]}, {"mean", p.means[i]}, {"std", p.stds[i]}});
    return cols;
}

inline ScalingParams scaling_from_json(const nlohmann::json& j) {
    ScalingParams p;
    for (const auto& c : j) {
        p.names.push_back(c.at("name").get<std::string>());
        p.means.push_back(c.at("mean").get<double>());
        p.stds.push_back(c.at("std").get<double>());
    }
    return p;
}

}  // namespace detail

inline std::string model_to_json(const TrainedModel& m) {
    nlohmann::json j;
    j["family"] = to_string(m.family);
    j["frequency"] = to_string(m.frequency);
    j["features"] = m.feature_names;
    j["dependent"] = m.dependent_name;
    j["scaling"] = detail::scaling_to_json(m.scaling);
    j["cv_score"] = m.cv_score;
    j["fingerprint"] = {{"rows", m.train_rows}, {"hash", m.train_fingerprint}};
    nlohmann::json st;
    if (const auto* o = std::get_if<OlsState>(&m.state)) {
        st["intercept"] = o->intercept;
        st["coeffs"] = o->coeffs;
        st["intercept_value"] = o->intercept_value;
    } else if (const auto* k = std::get_if<KnnState>(&m.state)) {
        st["k"] = k->k;
        st["d"] = k->minkowski_order;
        st["rows"] = k->rows;
        st["dims"] = k->dims;
        st["train_x"] = k->train_x;
        st["train_y"] = k->train_y;
    } else if (const auto* a = std::get_if<AnnState>(&m.state)) {
        st["hidden"] = a->hidden_units;
        st["decay"] = a->decay;
        st["dims"] = a->dims;
        st["weights"] = a->weights;
        st["iterations"] = a->iterations_run;
    } else if (const auto* s = std::get_if<SvrState>(&m.state)) {
        st["cost"] = s->cost;
        st["epsilon"] = s->epsilon;
        st["w"] = s->w;
        st["b"] = s->b;
        st["sweeps"] = s->sweeps_run;
    }
    j["state"] = st;
    return j.dump(2) + "\n";
}

inline TrainedModel model_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    TrainedModel m;
    m.family = parse_family(j.at("family").get<std::string>());
    m.frequency = parse_frequency(j.at("frequency").get<std::string>());
    m.feature_names = j.at("features").get<std::vector<std::string>>();
    m.dependent_name = j.at("dependent").get<std::string>();
    m.scaling = detail::scaling_from_json(j.at("scaling"));
    m.cv_score = j.at("cv_score").get<double>();
    m.train_rows = j.at("fingerprint").at("rows").get<std::uint64_t>();
    m.train_fingerprint = j.at("fingerprint").at("hash").get<std::uint64_t>();
    const auto& st = j.at("state");
    switch (m.family) {
        case ModelFamily::ols: {
            OlsState s;
            s.intercept = st.at("intercept").get<bool>();
            s.coeffs = st.at("coeffs").get<std::vector<double>>();
            s.intercept_value = st.at("intercept_value").get<double>();
            m.state = std::move(s);
            break;
        }
        case ModelFamily::knn: {
            KnnState s;
            s.k = st.at("k").get<int>();
            s.minkowski_order = st.at("d").get<int>();
            s.rows = st.at("rows").get<std::size_t>();
            s.dims = st.at("dims").get<std::size_t>();
            s.train_x = st.at("train_x").get<std::vector<double>>();
            s.train_y = st.at("train_y").get<std::vector<double>>();
            m.state = std::move(s);
            break;
        }
        case ModelFamily::ann: {
            AnnState s;
            s.hidden_units = st.at("hidden").get<int>();
            s.decay = st.at("decay").get<double>();
            s.dims = st.at("dims").get<std::size_t>();
            s.weights = st.at("weights").get<std::vector<double>>();
            s.iterations_run = st.at("iterations").get<int>();
            m.state = std::move(s);
            break;
        }
        case ModelFamily::svm: {
            SvrState s;
            s.cost = st.at("cost").get<double>();
            s.epsilon = st.at("epsilon").get<double>();
            s.w = st.at("w").get<std::vector<double>>();
            s.b = st.at("b").get<double>();
            s.sweeps_run = st.at("sweeps").get<int>();
            m.state = std::move(s);
            break;
        }
    }
    return m;
}

}  // namespace mv
