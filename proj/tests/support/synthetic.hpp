#pragma once

// Synthetic industrial facility generator used by the pipeline tests: ten
// metered channels at 15-minute spacing, a dependent load driven by three of
// them with calibrated noise, and a step-change ECM of known magnitude in
// the reporting period.

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mv/common.hpp"
#include "mv/time.hpp"

namespace synth {

struct FacilitySpec {
    mv::TimePoint baseline_start = mv::make_utc(2016, 1, 4);
    mv::TimePoint baseline_end = mv::make_utc(2016, 10, 3);     // 9 months
    mv::TimePoint implementation_end = mv::make_utc(2017, 2, 16);
    mv::TimePoint reporting_end = mv::make_utc(2017, 9, 16);    // 7 months
    std::int64_t step = 900;
    double ecm_fraction = 0.12;   // fractional step-change savings
    double target_r2 = 0.65;      // signal share of dependent variance
    std::uint64_t seed = 42;
    double missing_rate = 0.002;  // scattered missing predictor cells
    bool poor_channel = true;     // one correlated channel with >5% missing
    bool outlier_channel = true;  // one channel with a few flaggable spikes
    std::string frequencies = "[\"15min\", \"hourly\", \"daily\", \"weekly\"]";
    double confidence = 0.95;
};

struct Facility {
    std::string baseline_csv;
    std::string reporting_csv;
    std::string tag_manifest_json;
    std::string config_json;
    // ground truth for the reporting period, on the native grid
    std::vector<mv::TimePoint> reporting_times;
    std::vector<double> counterfactual;  // consumption had the ECM not happened
    std::vector<double> measured;        // (1 - ecm_fraction) * counterfactual
    double sigma = 0.0;                  // noise std of the dependent channel
};

namespace detail {

struct Signals {
    std::vector<double> x;  // 9 predictors
    Signals() : x(9, 0.0) {}
};

class Generator {
public:
    explicit Generator(const FacilitySpec& spec)
        : spec_(spec),
          cell_rng_(mv::derive_seed(spec.seed, "cells")),
          ar_state_(0.0) {}

    Signals predictors(mv::TimePoint t) {
        Signals s;
        double hour = static_cast<double>((t % 86400) / 3600) +
                      static_cast<double>((t % 3600)) / 3600.0;
        double dow = static_cast<double>(((t / 86400) % 7 + 7 + 3) % 7);  // 0 = Monday
        double doy = static_cast<double>((t / 86400) % 365);
        constexpr double tau = 6.283185307179586;

        ar_state_ = 0.95 * ar_state_ + 2.0 * cell_rng_.normal();
        bool workhours = hour >= 6.0 && hour < 22.0 && dow < 5.0;

        s.x[0] = 40.0 + 12.0 * std::sin(tau * hour / 24.0 - 1.0) +
                 4.0 * std::sin(tau * dow / 7.0) + ar_state_;                       // ahu04
        s.x[1] = (workhours ? 30.0 : 12.0) + 1.5 * cell_rng_.normal();              // comp01
        s.x[2] = 10.0 + 8.0 * std::sin(tau * doy / 365.0 - 1.5) +
                 3.0 * std::sin(tau * hour / 24.0 - 2.0) + cell_rng_.normal();      // oat
        s.x[3] = 0.8 * s.x[0] + 6.0 + 3.0 * cell_rng_.normal();                     // ahu05
        s.x[4] = 0.5 * s.x[1] + 0.5 * s.x[2] + 1.0 * cell_rng_.normal();            // pumps
        for (int i = 5; i < 9; ++i)
            s.x[i] = 20.0 + 5.0 * cell_rng_.normal();                               // noise
        return s;
    }

    static double signal_of(const Signals& s) {
        return 200.0 + 3.0 * s.x[0] + 2.0 * s.x[1] + 4.0 * s.x[2];
    }

private:
    FacilitySpec spec_;
    mv::Rng cell_rng_;
    double ar_state_;
};

}  // namespace detail

inline const std::vector<std::string>& column_names() {
    static const std::vector<std::string> names = {
        "ahu04_elec", "comp01_air", "oat_temp",    "ahu05_elec", "pumps_elec",
        "noise1_elec", "noise2_elec", "noise3_elec", "noise4_elec", "chw_elec"};
    return names;
}

// Tagged ids produced by the manifest below (site.equip-point).
inline std::string dependent_tagged_id() { return "plant.chiller01-elec"; }

inline Facility generate(const FacilitySpec& spec) {
    Facility f;
    f.sigma = 0.0;

    // pass 1: signals over both periods, so noise can be calibrated to the
    // baseline signal variance
    std::vector<mv::TimePoint> base_times, rep_times;
    for (mv::TimePoint t = spec.baseline_start; t < spec.baseline_end; t += spec.step)
        base_times.push_back(t);
    for (mv::TimePoint t = spec.implementation_end; t < spec.reporting_end; t += spec.step)
        rep_times.push_back(t);

    detail::Generator gen(spec);
    std::vector<detail::Signals> base_sig, rep_sig;
    base_sig.reserve(base_times.size());
    rep_sig.reserve(rep_times.size());
    for (std::size_t i = 0; i < base_times.size(); ++i) base_sig.push_back(gen.predictors(base_times[i]));
    for (std::size_t i = 0; i < rep_times.size(); ++i) rep_sig.push_back(gen.predictors(rep_times[i]));

    double mean = 0.0, var = 0.0;
    for (const auto& s : base_sig) mean += detail::Generator::signal_of(s);
    mean /= static_cast<double>(base_sig.size());
    for (const auto& s : base_sig) {
        double d = detail::Generator::signal_of(s) - mean;
        var += d * d;
    }
    var /= static_cast<double>(base_sig.size() - 1);
    f.sigma = std::sqrt(var * (1.0 / spec.target_r2 - 1.0));

    mv::Rng noise_rng(mv::derive_seed(spec.seed, "dependent-noise"));
    mv::Rng miss_rng(mv::derive_seed(spec.seed, "missing"));
    mv::Rng spike_rng(mv::derive_seed(spec.seed, "spikes"));

    auto emit = [&](const std::vector<mv::TimePoint>& times,
                    const std::vector<detail::Signals>& sigs, bool reporting) {
        std::ostringstream csv;
        csv << "timestamp";
        for (const auto& c : column_names()) csv << "," << c;
        csv << "\n";
        for (std::size_t i = 0; i < times.size(); ++i) {
            csv << mv::format_iso8601(times[i]);
            const auto& s = sigs[i];
            for (int c = 0; c < 9; ++c) {
                double v = s.x[c];
                bool missing = miss_rng.uniform01() < spec.missing_rate;
                if (spec.poor_channel && c == 4 && miss_rng.uniform01() < 0.06) missing = true;
                if (spec.outlier_channel && c == 3 && spike_rng.uniform01() < 0.002)
                    v *= 6.0;  // box-plot-flaggable spike
                csv << ",";
                if (!missing) csv << mv::format_double(v);
            }
            double load = detail::Generator::signal_of(s) + f.sigma * noise_rng.normal();
            if (reporting) {
                f.reporting_times.push_back(times[i]);
                f.counterfactual.push_back(load);
                double measured = (1.0 - spec.ecm_fraction) * load;
                f.measured.push_back(measured);
                csv << "," << mv::format_double(measured);
            } else {
                csv << "," << mv::format_double(load);
            }
            csv << "\n";
        }
        return csv.str();
    };

    f.baseline_csv = emit(base_times, base_sig, false);
    f.reporting_csv = emit(rep_times, rep_sig, true);

    // tag manifest: site plant, one equip per meter
    std::ostringstream tj;
    tj << "{\n  \"columns\": {\n";
    const char* equips[] = {"ahu04", "comp01", "weatherstation", "ahu05", "waterroom3",
                            "feeder1", "feeder2", "feeder3", "feeder4", "chiller01"};
    const char* points[] = {"elec", "air", "temp", "elec", "elec",
                            "elec", "elec", "elec", "elec", "elec"};
    const char* units[] = {"kWh", "m3", "degC", "kWh", "kWh",
                           "kWh", "kWh", "kWh", "kWh", "kWh"};
    for (int c = 0; c < 10; ++c) {
        tj << "    \"" << column_names()[c] << "\": {\"site\": \"plant\", \"equip\": \""
           << equips[c] << "\", \"point\": \"" << points[c] << "\", \"unit\": \"" << units[c]
           << "\"" << (c == 9 ? ", \"dependent\": true" : "") << "}";
        tj << (c + 1 < 10 ? ",\n" : "\n");
    }
    tj << "  }\n}\n";
    f.tag_manifest_json = tj.str();

    std::ostringstream cj;
    cj << "{\n"
       << "  \"ecm_description\": \"air handling unit optimisation\",\n"
       << "  \"boundary_description\": \"chilled water system electricity\",\n"
       << "  \"baseline_period\": {\"start\": \"" << mv::format_iso8601(spec.baseline_start)
       << "\", \"end\": \"" << mv::format_iso8601(spec.baseline_end) << "\"},\n"
       << "  \"implementation_period\": {\"start\": \"" << mv::format_iso8601(spec.baseline_end)
       << "\", \"end\": \"" << mv::format_iso8601(spec.implementation_end) << "\"},\n"
       << "  \"reporting_period\": {\"start\": \"" << mv::format_iso8601(spec.implementation_end)
       << "\", \"end\": \"" << mv::format_iso8601(spec.reporting_end) << "\"},\n"
       << "  \"dependent_channel\": \"" << dependent_tagged_id() << "\",\n"
       << "  \"static_factors\": [{\"name\": \"floor area\", \"value\": \"unchanged\"}],\n"
       << "  \"confidence_level\": " << mv::format_double(spec.confidence) << ",\n"
       << "  \"frequencies\": " << spec.frequencies << "\n"
       << "}\n";
    f.config_json = cj.str();
    return f;
}

}  // namespace synth
