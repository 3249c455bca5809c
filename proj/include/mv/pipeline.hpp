#pragma once

#include <algorithm>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mv/config.hpp"
#include "mv/data_quality.hpp"
#include "mv/evaluation.hpp"
#include "mv/feature_selection.hpp"
#include "mv/grid_search.hpp"
#include "mv/ingest.hpp"
#include "mv/manifest.hpp"
#include "mv/matrix.hpp"
#include "mv/preprocess.hpp"
#include "mv/savings.hpp"

namespace mv {

namespace fs = std::filesystem;

// Wraps a stage's hard errors with the stage name and a remedy hint so a
// failed run points at the step that needs attention.
struct StageError : std::runtime_error {
    StageError(const std::string& stage, const std::string& what, const std::string& hint)
        : std::runtime_error("[" + stage + "] " + what + (hint.empty() ? "" : " (" + hint + ")")) {}
};

// ---------------------------------------------------------------------------
// ingest stage

struct IngestResult {
    RawDataset dataset;
};

inline IngestResult run_ingest(const ProjectConfig& config, const std::string& csv_path,
                               const std::string& manifest_path) {
    IngestResult out;
    try {
        TagManifest tags = load_tag_manifest(manifest_path);
        out.dataset = ingest_csv(csv_path, tags);
    } catch (const std::exception& ex) {
        throw StageError("ingest", ex.what(),
                         "check the raw CSV export and the tag manifest");
    }
    if (!out.dataset.find(config.dependent_channel_id))
        throw StageError("ingest",
                         "configured dependent channel '" + config.dependent_channel_id +
                             "' was not produced by the manifest",
                         "tag the dependent meter column");
    std::int64_t native = out.dataset.native_step_seconds;
    std::int64_t finest = step_seconds(config.finest_frequency());
    if (native > 0 && native != finest)
        throw StageError("ingest",
                         "native data spacing is " + std::to_string(native) +
                             "s but the finest configured frequency is " +
                             std::to_string(finest) + "s",
                         "align config frequencies with the metering interval");
    return out;
}

inline std::string channels_csv(const RawDataset& ds) {
    std::ostringstream s;
    s << "id,unit,points,first,last,dependent\n";
    for (const auto& ch : ds.channels) {
        s << csv_escape(ch.id) << "," << csv_escape(ch.unit) << "," << ch.size() << ",";
        if (!ch.times.empty())
            s << format_iso8601(ch.times.front()) << "," << format_iso8601(ch.times.back());
        else
            s << ",";
        s << "," << (ds.dependent_id && *ds.dependent_id == ch.id ? "1" : "0") << "\n";
    }
    return s.str();
}

inline void write_ingest_outputs(RunManifest& man, const std::string& out_dir,
                                 const IngestResult& result) {
    write_stage_file(man, "ingest", out_dir, "ingest/dataset.csv", dataset_to_csv(result.dataset));
    write_stage_file(man, "ingest", out_dir, "ingest/dataset.tags.json",
                     dataset_tags_json(result.dataset));
    write_stage_file(man, "ingest", out_dir, "ingest/channels.csv",
                     channels_csv(result.dataset));
    man.stages["ingest"].complete = true;
}

inline RawDataset load_ingested_dataset(const std::string& out_dir) {
    fs::path base(out_dir);
    std::string csv = (base / "ingest" / "dataset.csv").string();
    std::string tags = (base / "ingest" / "dataset.tags.json").string();
    return ingest_csv(csv, load_tag_manifest(tags));
}

// ---------------------------------------------------------------------------
// feature selection + availability (steps 3 and 4)

struct SelectionRound {
    FeatureSubset subset;
    AvailabilitySummary availability;
    std::vector<std::string> omitted;
};

struct SelectionResult {
    std::vector<SelectionRound> rounds;  // last round has an empty omission list
    const FeatureSubset& final_subset() const { return rounds.back().subset; }
    const AvailabilitySummary& final_availability() const { return rounds.back().availability; }
    std::vector<std::string> all_omitted() const {
        std::vector<std::string> out;
        for (const auto& r : rounds) out.insert(out.end(), r.omitted.begin(), r.omitted.end());
        return out;
    }
};

// Runs the selection algorithm, assesses the chosen features, omits any with
// more than 5% poor-quality data and reapplies selection until the omission
// list comes back empty.
inline SelectionResult select_and_assess(const FeatureMatrix& matrix,
                                         double omission_threshold = 0.05) {
    SelectionResult result;
    std::set<std::string> excluded;
    for (;;) {
        std::vector<std::string> remaining;
        for (const auto& name : matrix.predictor_names())
            if (!excluded.count(name)) remaining.push_back(name);
        if (remaining.empty())
            throw std::runtime_error("no candidate predictors left after omissions");
        FeatureMatrix view = matrix.select(remaining);
        SelectionRound round;
        round.subset = select_features(view);
        round.availability = assess(matrix, round.subset.selected);
        round.omitted = omit_poor_features(round.availability, omission_threshold);
        bool done = round.omitted.empty();
        for (const auto& id : round.omitted) excluded.insert(id);
        result.rounds.push_back(std::move(round));
        if (done) return result;
    }
}

// ---------------------------------------------------------------------------
// baseline stage (steps 3-5)

struct BaselineResult {
    SelectionResult selection;
    FeatureMatrix cleaned;  // native grid, selected features only
    std::size_t rows_dropped_by_cleaning = 0;
    std::vector<FrequencyBundle> bundles;
    TrainAllResult trained;
    std::vector<ModelScore> scores;  // parallel to trained.models
    std::size_t winner = 0;          // index into scores/models
};

inline BaselineResult run_baseline(const ProjectConfig& config, const RawDataset& dataset,
                                   const HyperGrid& grid, std::uint64_t seed,
                                   std::size_t folds = 10) {
    BaselineResult out;

    FeatureMatrix matrix0;
    try {
        matrix0 = align(dataset, config.baseline_period, config.dependent_channel_id);
    } catch (const std::exception& ex) {
        throw StageError("align", ex.what(), "check the baseline period and dependent channel");
    }

    try {
        out.selection = select_and_assess(matrix0);
    } catch (const std::exception& ex) {
        throw StageError("feature-selection", ex.what(),
                         "the available variables may not explain the dependent channel; "
                         "additional metering may be required");
    }

    try {
        FeatureMatrix selected = matrix0.select(out.selection.final_subset().selected);
        out.cleaned = clean(selected, out.selection.final_availability());
        out.rows_dropped_by_cleaning = selected.rows() - out.cleaned.rows();
    } catch (const std::exception& ex) {
        throw StageError("cleaning", ex.what(), "inspect the availability report");
    }

    for (Frequency f : config.frequencies) {
        try {
            FrequencyDataset agg = aggregate(out.cleaned, f, dataset.native_step_seconds);
            SplitDataset sp = split(agg.matrix, 0.8,
                                    derive_seed(seed, "split-" + to_string(f)));
            FrequencyBundle bundle;
            bundle.frequency = f;
            bundle.scaling = fit_scaling(sp.train);
            bundle.train_std = transform(sp.train, bundle.scaling);
            bundle.train_original = std::move(sp.train);
            bundle.test_original = std::move(sp.test);
            out.bundles.push_back(std::move(bundle));
        } catch (const std::exception& ex) {
            throw StageError("preprocess-" + to_string(f), ex.what(),
                             "this frequency may leave too little data; drop it from the "
                             "configured frequencies");
        }
    }

    out.trained = train_all(out.bundles, grid, seed, folds);
    if (out.trained.models.empty()) {
        std::string why = out.trained.failures.empty() ? "no models requested"
                                                       : out.trained.failures.front().reason;
        throw StageError("training", "every model failed (" + why + ")",
                         "check the training data volume");
    }

    try {
        out.scores = evaluate_all(out.trained.models, out.bundles);
    } catch (const std::exception& ex) {
        throw StageError("evaluation", ex.what(), "");
    }
    const ModelScore& best = select_best(out.scores);
    for (std::size_t i = 0; i < out.scores.size(); ++i)
        if (&out.scores[i] == &best) out.winner = i;
    return out;
}

// ---- baseline artifact emission -------------------------------------------

inline std::string features_report_csv(const SelectionResult& sel) {
    std::ostringstream s;
    s << "round,rank,id,rho,selected,vif,omitted_for_quality\n";
    for (std::size_t ri = 0; ri < sel.rounds.size(); ++ri) {
        const auto& round = sel.rounds[ri];
        std::set<std::string> chosen(round.subset.selected.begin(),
                                     round.subset.selected.end());
        std::set<std::string> omitted(round.omitted.begin(), round.omitted.end());
        std::size_t rank = 1;
        for (const auto& e : round.subset.correlations.entries) {
            s << (ri + 1) << "," << rank++ << "," << csv_escape(e.id) << ",";
            if (e.excluded) s << "excluded:" << csv_escape(e.exclusion_reason);
            else s << format_double(e.rho);
            s << "," << (chosen.count(e.id) ? "1" : "0") << ",";
            auto it = round.subset.vif_values.find(e.id);
            if (it != round.subset.vif_values.end()) s << format_double(it->second);
            s << "," << (omitted.count(e.id) ? "1" : "0") << "\n";
        }
    }
    return s.str();
}

inline std::string selection_json(const SelectionResult& sel) {
    nlohmann::json j;
    nlohmann::json rounds = nlohmann::json::array();
    for (const auto& r : sel.rounds) {
        nlohmann::json rj;
        rj["selected"] = r.subset.selected;
        rj["adjusted_r2"] = r.subset.adjusted_r2;
        nlohmann::json vifs = nlohmann::json::object();
        for (const auto& [k, v] : r.subset.vif_values) vifs[k] = v;
        rj["vif"] = vifs;
        rj["greedy_trace"] = r.subset.greedy_trace;
        rj["omitted"] = r.omitted;
        rounds.push_back(rj);
    }
    j["rounds"] = rounds;
    j["final_selected"] = sel.final_subset().selected;
    j["final_adjusted_r2"] = sel.final_subset().adjusted_r2;
    return j.dump(2) + "\n";
}

inline std::string availability_csv(const AvailabilitySummary& summary) {
    std::ostringstream s;
    s << "id,mean,median,unique_count,missing_count,q1,q2,q3,min,max,outlier_count,"
         "poor_quality_fraction\n";
    for (const auto& f : summary.features) {
        s << csv_escape(f.id) << "," << format_double(f.mean) << "," << format_double(f.median)
          << "," << f.unique_count << "," << f.missing_count << "," << format_double(f.q1) << ","
          << format_double(f.q2) << "," << format_double(f.q3) << "," << format_double(f.min)
          << "," << format_double(f.max) << "," << f.outlier_count << ","
          << format_double(f.poor_quality_fraction) << "\n";
    }
    return s.str();
}

// five-number summary plus fences: enough to draw the box plots
inline std::string boxplot_csv(const AvailabilitySummary& summary) {
    std::ostringstream s;
    s << "id,min,q1,median,q3,max,lo_fence,hi_fence,outlier_count\n";
    for (const auto& f : summary.features)
        s << csv_escape(f.id) << "," << format_double(f.min) << "," << format_double(f.q1) << ","
          << format_double(f.q2) << "," << format_double(f.q3) << "," << format_double(f.max)
          << "," << format_double(f.lo_fence) << "," << format_double(f.hi_fence) << ","
          << f.outlier_count << "\n";
    return s.str();
}

inline std::string outliers_csv(const AvailabilitySummary& summary) {
    std::ostringstream s;
    s << "id,value\n";
    for (const auto& f : summary.features)
        for (double v : f.outlier_values)
            s << csv_escape(f.id) << "," << format_double(v) << "\n";
    return s.str();
}

inline std::string scores_csv(const std::vector<ModelScore>& scores, std::size_t winner) {
    std::ostringstream s;
    s << "frequency,family,hyper,cv_score_std,cv_rmse_pct,nmbe_pct,rmse_abs,n_test,winner\n";
    for (std::size_t i = 0; i < scores.size(); ++i) {
        const auto& sc = scores[i];
        s << to_string(sc.frequency) << "," << to_string(sc.family) << ","
          << csv_escape(sc.hyper) << "," << format_double(sc.cv_score) << ","
          << format_double(sc.cv_rmse_pct) << "," << format_double(sc.nmbe_pct) << ","
          << format_double(sc.rmse_abs) << "," << sc.n_test << "," << (i == winner ? 1 : 0)
          << "\n";
    }
    return s.str();
}

inline std::string model_rel_path(Frequency f, ModelFamily fam) {
    return "baseline/models/" + to_string(f) + "_" + to_string(fam) + ".json";
}

inline std::string training_ranges_json(const BaselineResult& result) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& bundle : result.bundles) {
        nlohmann::json arr = nlohmann::json::array();
        auto ranges = feature_ranges(bundle.train_original,
                                     bundle.train_original.predictor_names());
        for (const auto& r : ranges)
            arr.push_back({{"id", r.id}, {"min", r.min}, {"max", r.max}});
        j[to_string(bundle.frequency)] = arr;
    }
    return j.dump(2) + "\n";
}

inline void write_baseline_outputs(RunManifest& man, const std::string& out_dir,
                                   const BaselineResult& result) {
    write_stage_file(man, "baseline", out_dir, "baseline/features.csv",
                     features_report_csv(result.selection));
    write_stage_file(man, "baseline", out_dir, "baseline/selection.json",
                     selection_json(result.selection));
    write_stage_file(man, "baseline", out_dir, "baseline/availability.csv",
                     availability_csv(result.selection.final_availability()));
    write_stage_file(man, "baseline", out_dir, "baseline/boxplot.csv",
                     boxplot_csv(result.selection.final_availability()));
    write_stage_file(man, "baseline", out_dir, "baseline/outliers.csv",
                     outliers_csv(result.selection.final_availability()));
    for (const auto& model : result.trained.models)
        write_stage_file(man, "baseline", out_dir, model_rel_path(model.frequency, model.family),
                         model_to_json(model));
    write_stage_file(man, "baseline", out_dir, "baseline/scores.csv",
                     scores_csv(result.scores, result.winner));
    write_stage_file(man, "baseline", out_dir, "baseline/training_ranges.json",
                     training_ranges_json(result));
    if (!result.trained.failures.empty()) {
        std::ostringstream s;
        s << "frequency,family,reason\n";
        for (const auto& f : result.trained.failures)
            s << to_string(f.frequency) << "," << to_string(f.family) << ","
              << csv_escape(f.reason) << "\n";
        write_stage_file(man, "baseline", out_dir, "baseline/failures.csv", s.str());
    }
    const ModelScore& best = result.scores[result.winner];
    nlohmann::json w;
    w["frequency"] = to_string(best.frequency);
    w["family"] = to_string(best.family);
    w["model"] = model_rel_path(best.frequency, best.family);
    w["cv_rmse_pct"] = best.cv_rmse_pct;
    write_stage_file(man, "baseline", out_dir, "baseline/winner.json", w.dump(2) + "\n");
    man.stages["baseline"].complete = true;
    man.stages["baseline"].winner = model_rel_path(best.frequency, best.family);
}

// ---------------------------------------------------------------------------
// report stage (step 6)

struct ModelRun {
    TrainedModel model;
    ModelScore score;  // test-set score from the baseline stage
    SavingsReport report;
};

struct ReportResult {
    std::vector<ModelRun> runs;        // one per persisted model
    std::size_t primary = 0;           // the winning model's run
    std::vector<AcceptabilityRow> table;
    std::vector<AdjustmentRecord> adjustments;
    double ashrae_fraction = 0.0;      // comparison only; 0 when undefined
    std::string ashrae_note;
};

inline std::vector<AdjustmentRecord> load_adjustments(const std::string& path,
                                                      const DateInterval& reporting_period) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    std::vector<AdjustmentRecord> out;
    for (const auto& a : j) {
        AdjustmentRecord rec;
        rec.name = a.at("name").get<std::string>();
        rec.interval = detail::parse_interval(a.at("interval"), "adjustment interval");
        rec.factor = a.at("factor").get<double>();
        rec.justification = a.value("justification", "");
        rec.stakeholders = a.value("stakeholders", "");
        if (rec.factor <= 0.0)
            throw std::runtime_error("adjustment '" + rec.name + "': factor must be positive");
        if (!reporting_period.contains(rec.interval))
            throw std::runtime_error("adjustment '" + rec.name +
                                     "': interval must lie within the reporting period");
        out.push_back(std::move(rec));
    }
    return out;
}

namespace detail {

inline std::vector<ModelScore> load_scores_csv(const std::string& path) {
    CsvTable t = read_csv(path);
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < t.header.size(); ++i) col[t.header[i]] = i;
    std::vector<ModelScore> out;
    for (const auto& row : t.rows) {
        ModelScore s;
        s.frequency = parse_frequency(row[col.at("frequency")]);
        s.family = parse_family(row[col.at("family")]);
        s.hyper = row[col.at("hyper")];
        s.cv_score = parse_cell(row[col.at("cv_score_std")]);
        s.cv_rmse_pct = parse_cell(row[col.at("cv_rmse_pct")]);
        s.nmbe_pct = parse_cell(row[col.at("nmbe_pct")]);
        s.rmse_abs = parse_cell(row[col.at("rmse_abs")]);
        s.n_test = static_cast<std::size_t>(parse_cell(row[col.at("n_test")]));
        out.push_back(s);
    }
    return out;
}

inline std::map<Frequency, std::vector<FeatureRange>> load_training_ranges(
    const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    std::map<Frequency, std::vector<FeatureRange>> out;
    for (auto& [freq, arr] : j.items()) {
        std::vector<FeatureRange> ranges;
        for (const auto& r : arr)
            ranges.push_back({r.at("id").get<std::string>(), r.at("min").get<double>(),
                              r.at("max").get<double>()});
        out[parse_frequency(freq)] = std::move(ranges);
    }
    return out;
}

}  // namespace detail

// Applies every persisted model to the reporting-period data: range gate,
// adjusted baseline, non-routine adjustments, savings and uncertainty. The
// winner's report is the primary one; the rest feed the acceptability table.
inline ReportResult run_report(const ProjectConfig& config, const std::string& out_dir,
                               const RawDataset& reporting_dataset,
                               const std::vector<AdjustmentRecord>& adjustments,
                               std::optional<std::pair<Frequency, ModelFamily>> primary_override =
                                   std::nullopt) {
    RunManifest man = load_manifest(out_dir);
    require_stage(man, "baseline",
                  "run the baseline command before quantifying reporting-period savings");
    if (man.stages.at("baseline").winner.empty())
        throw StageError("report", "baseline stage has no persisted winning model",
                         "rerun the baseline command");

    fs::path base(out_dir);
    std::vector<ModelScore> scores =
        detail::load_scores_csv((base / "baseline" / "scores.csv").string());
    auto ranges_by_freq =
        detail::load_training_ranges((base / "baseline" / "training_ranges.json").string());

    FeatureMatrix native;
    try {
        native = align(reporting_dataset, config.reporting_period, config.dependent_channel_id);
    } catch (const std::exception& ex) {
        throw StageError("report", ex.what(), "check the reporting-period export");
    }

    ReportResult result;
    result.adjustments = adjustments;

    // aggregate once per frequency
    std::map<Frequency, FrequencyDataset> agg_cache;

    std::string winner_rel = man.stages.at("baseline").winner;
    for (const auto& score : scores) {
        std::string rel = model_rel_path(score.frequency, score.family);
        TrainedModel model = model_from_json(read_text_file((base / rel).string()));
        if (model.frequency != score.frequency || model.family != score.family)
            throw StageError("report", "model file " + rel + " does not match the score table",
                             "rerun the baseline command");

        if (!agg_cache.count(model.frequency)) {
            FeatureMatrix selected = native.select(model.feature_names);
            agg_cache[model.frequency] =
                aggregate(selected, model.frequency, reporting_dataset.native_step_seconds);
        }
        const FeatureMatrix& agg = agg_cache.at(model.frequency).matrix;

        RangeGateResult gate = gate_range(agg, ranges_by_freq.at(model.frequency));

        // no backfilling: intervals with missing feature data are dropped
        std::vector<std::size_t> feature_cols;
        for (const auto& f : model.feature_names) feature_cols.push_back(agg.col_index(f));
        std::vector<std::size_t> usable = agg.complete_rows(feature_cols);
        if (usable.empty())
            throw StageError("report", "no usable reporting intervals at frequency " +
                                           to_string(model.frequency),
                             "the reporting export is missing model features");
        FeatureMatrix usable_matrix = agg.take_rows(usable);
        std::size_t dropped = agg.rows() - usable_matrix.rows();

        std::vector<double> baseline = adjusted_baseline(model, usable_matrix);
        std::vector<double> adjusted =
            apply_adjustments(baseline, usable_matrix.times, adjustments);

        ModelRun run;
        run.report = quantify(usable_matrix.times, usable_matrix.dependent(), adjusted, score,
                              config.confidence_level);
        run.report.advisories = gate.advisories;
        if (dropped > 0)
            run.report.advisories.push_back(
                std::to_string(dropped) + " reporting intervals at " +
                to_string(model.frequency) + " dropped for missing feature data (no backfill)");
        for (const auto& rec : adjustments)
            run.report.advisories.push_back(
                "non-routine adjustment '" + rec.name + "': factor " + format_double(rec.factor) +
                " over [" + format_iso8601(rec.interval.start) + ", " +
                format_iso8601(rec.interval.end) + "); " + rec.justification);
        run.model = std::move(model);
        run.score = score;
        if (rel == winner_rel) result.primary = result.runs.size();
        result.runs.push_back(std::move(run));
    }

    if (primary_override) {
        bool found = false;
        for (std::size_t i = 0; i < result.runs.size(); ++i)
            if (result.runs[i].model.frequency == primary_override->first &&
                result.runs[i].model.family == primary_override->second) {
                result.primary = i;
                found = true;
            }
        if (!found)
            throw StageError("report", "requested model not found among persisted models", "");
    }

    std::vector<SavingsReport> reports;
    for (const auto& r : result.runs) reports.push_back(r.report);
    result.table = acceptability_table(reports);

    // ASHRAE comparison for the primary model (never the verdict)
    const SavingsReport& prim = result.runs[result.primary].report;
    double baseline_total = 0.0;
    for (double v : prim.adjusted_baseline) baseline_total += v;
    if (prim.total_savings > 0.0 && baseline_total > 0.0) {
        double f = prim.total_savings / baseline_total;
        result.ashrae_fraction = ashrae_uncertainty(
            result.runs[result.primary].score.cv_rmse_pct, f,
            result.runs[result.primary].model.train_rows, prim.m_intervals, prim.t_value);
    } else {
        result.ashrae_note = "fractional savings not positive; comparison skipped";
    }
    return result;
}

// ---- report artifact emission ---------------------------------------------

inline std::string savings_json(const ReportResult& result) {
    const ModelRun& run = result.runs[result.primary];
    const SavingsReport& r = run.report;
    nlohmann::json j;
    j["model"] = {{"frequency", to_string(r.frequency)},
                  {"family", to_string(r.family)},
                  {"hyper", run.score.hyper}};
    j["total_savings"] = r.total_savings;
    j["se_total"] = r.se_total;
    j["se_note"] =
        "se_total = test-set RMSE * sqrt(m) over m reporting intervals, treating "
        "per-interval errors as independent";
    j["rmse_abs"] = r.rmse_abs;
    j["n_test"] = r.n_test;
    j["m_intervals"] = r.m_intervals;
    j["t_value"] = r.t_value;
    j["degrees_of_freedom"] = r.n_test - 1;
    j["confidence"] = r.confidence;
    j["uncertainty"] = r.uncertainty;
    j["range_low"] = r.range_low;
    j["range_high"] = r.range_high;
    j["acceptable"] = r.acceptable;
    j["advisories"] = r.advisories;
    nlohmann::json adjustments = nlohmann::json::array();
    for (const auto& a : result.adjustments)
        adjustments.push_back({{"name", a.name},
                               {"start", format_iso8601(a.interval.start)},
                               {"end", format_iso8601(a.interval.end)},
                               {"factor", a.factor},
                               {"justification", a.justification},
                               {"stakeholders", a.stakeholders}});
    j["non_routine_adjustments"] = adjustments;
    if (result.ashrae_fraction > 0.0)
        j["ashrae_uncertainty_fraction_comparison_only"] = result.ashrae_fraction;
    if (!result.ashrae_note.empty()) j["ashrae_note"] = result.ashrae_note;
    return j.dump(2) + "\n";
}

inline std::string savings_text(const ReportResult& result) {
    const ModelRun& run = result.runs[result.primary];
    const SavingsReport& r = run.report;
    std::ostringstream s;
    if (!r.advisories.empty()) {
        s << "=== ADVISORIES ===\n";
        for (const auto& a : r.advisories) s << "  ! " << a << "\n";
        s << "\n";
    }
    s << "Savings report (" << to_string(r.family) << " model, " << to_string(r.frequency)
      << " frequency, " << run.score.hyper << ")\n";
    s << "  total savings:      " << format_double(r.total_savings) << "\n";
    s << "  standard error:     " << format_double(r.se_total)
      << "  (test RMSE " << format_double(r.rmse_abs) << " x sqrt(" << r.m_intervals
      << ") intervals, errors treated as independent)\n";
    s << "  t (" << format_double(r.confidence * 100.0) << "% confidence, df=" << (r.n_test - 1)
      << "): " << format_double(r.t_value) << "\n";
    s << "  uncertainty (t*SE): " << format_double(r.uncertainty) << "\n";
    s << "  range of savings:   [" << format_double(r.range_low) << ", "
      << format_double(r.range_high) << "]\n";
    s << "  acceptable (savings > 2*SE): " << (r.acceptable ? "Yes" : "No") << "\n";
    if (result.ashrae_fraction > 0.0)
        s << "  ASHRAE G14 uncertainty (comparison only): "
          << format_double(result.ashrae_fraction * 100.0) << "% of reported savings\n";
    return s.str();
}

inline std::string acceptability_csv(const std::vector<AcceptabilityRow>& rows) {
    std::ostringstream s;
    s << "frequency,family,savings,se,acceptable\n";
    for (const auto& r : rows)
        s << to_string(r.frequency) << "," << to_string(r.family) << ","
          << format_double(r.savings) << "," << format_double(r.se) << ","
          << (r.acceptable ? "Yes" : "No") << "\n";
    return s.str();
}

inline std::string fig_timeseries_csv(const SavingsReport& r) {
    std::ostringstream s;
    s << "timestamp,measured,adjusted_baseline\n";
    for (std::size_t i = 0; i < r.times.size(); ++i)
        s << format_iso8601(r.times[i]) << "," << format_double(r.measured[i]) << ","
          << format_double(r.adjusted_baseline[i]) << "\n";
    return s.str();
}

inline std::string fig_ranges_csv(const ReportResult& result) {
    std::ostringstream s;
    s << "frequency,family,savings,se,range_low,range_high,acceptable\n";
    for (const auto& run : result.runs) {
        const auto& r = run.report;
        s << to_string(r.frequency) << "," << to_string(r.family) << ","
          << format_double(r.total_savings) << "," << format_double(r.se_total) << ","
          << format_double(r.range_low) << "," << format_double(r.range_high) << ","
          << (r.acceptable ? "Yes" : "No") << "\n";
    }
    return s.str();
}

inline void write_report_outputs(RunManifest& man, const std::string& out_dir,
                                 const ReportResult& result) {
    write_stage_file(man, "report", out_dir, "report/savings.json", savings_json(result));
    write_stage_file(man, "report", out_dir, "report/savings.txt", savings_text(result));
    write_stage_file(man, "report", out_dir, "report/acceptability.csv",
                     acceptability_csv(result.table));
    write_stage_file(man, "report", out_dir, "report/fig_timeseries.csv",
                     fig_timeseries_csv(result.runs[result.primary].report));
    write_stage_file(man, "report", out_dir, "report/fig_ranges.csv", fig_ranges_csv(result));
    man.stages["report"].complete = true;
}

}  // namespace mv
