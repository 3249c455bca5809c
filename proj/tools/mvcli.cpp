// mvcli: batch front end for the M&V pipeline. Stages write their outputs
// under --out and record completion in manifest.json; reruns with identical
// inputs and seed produce byte-identical files.

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include "mv/mv.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 1;
};

mv::ProjectConfig load_config_checked(const std::string& path) {
    try {
        return mv::load_config(path);
    } catch (const std::exception& ex) {
        throw std::runtime_error(std::string("config: ") + ex.what());
    }
}

void apply_overrides(mv::ProjectConfig& config, const std::string& frequencies,
                     double confidence) {
    if (!frequencies.empty()) config.frequencies = mv::parse_frequency_list(frequencies);
    if (confidence > 0.0) config.confidence_level = confidence;
    config.check();
}

mv::RawDataset dataset_from_args(const mv::ProjectConfig& config, const std::string& out_dir,
                                 const std::string& csv, const std::string& manifest) {
    if (!csv.empty()) {
        if (manifest.empty())
            throw std::runtime_error("--manifest is required when --csv is given");
        return mv::run_ingest(config, csv, manifest).dataset;
    }
    mv::RunManifest man = mv::load_manifest(out_dir);
    mv::require_stage(man, "ingest", "run the ingest command first or pass --csv/--manifest");
    return mv::load_ingested_dataset(out_dir);
}

int cmd_ingest(const CommonArgs& common, const std::string& csv, const std::string& manifest) {
    mv::ProjectConfig config = load_config_checked(common.config_path);
    mv::IngestResult result = mv::run_ingest(config, csv, manifest);
    mv::RunManifest man = mv::load_manifest(common.out_dir);
    man.config_path = common.config_path;
    man.seed = common.seed;
    man.inputs["baseline_csv"] = csv;
    man.inputs["tag_manifest"] = manifest;
    mv::write_ingest_outputs(man, common.out_dir, result);
    mv::save_manifest(man, common.out_dir);
    std::cout << "ingested " << result.dataset.channels.size() << " channels";
    if (result.dataset.dependent_id) std::cout << " (dependent: " << *result.dataset.dependent_id << ")";
    std::cout << "\n  -> " << (fs::path(common.out_dir) / "ingest").string() << "\n";
    return 0;
}

int cmd_select_features(const CommonArgs& common, const std::string& csv,
                        const std::string& manifest) {
    mv::ProjectConfig config = load_config_checked(common.config_path);
    mv::RawDataset ds = dataset_from_args(config, common.out_dir, csv, manifest);
    mv::FeatureMatrix matrix =
        mv::align(ds, config.baseline_period, config.dependent_channel_id);
    mv::SelectionResult sel = mv::select_and_assess(matrix);
    mv::RunManifest man = mv::load_manifest(common.out_dir);
    mv::write_stage_file(man, "features", common.out_dir, "features/features.csv",
                         mv::features_report_csv(sel));
    mv::write_stage_file(man, "features", common.out_dir, "features/selection.json",
                         mv::selection_json(sel));
    man.stages["features"].complete = true;
    mv::save_manifest(man, common.out_dir);
    std::cout << "selected " << sel.final_subset().selected.size()
              << " features, adjusted R^2 = " << mv::format_double(sel.final_subset().adjusted_r2)
              << "\n";
    for (const auto& f : sel.final_subset().selected) std::cout << "  " << f << "\n";
    return 0;
}

int cmd_assess(const CommonArgs& common, const std::string& csv, const std::string& manifest) {
    mv::ProjectConfig config = load_config_checked(common.config_path);
    mv::RawDataset ds = dataset_from_args(config, common.out_dir, csv, manifest);
    mv::FeatureMatrix matrix =
        mv::align(ds, config.baseline_period, config.dependent_channel_id);
    mv::SelectionResult sel = mv::select_and_assess(matrix);
    const mv::AvailabilitySummary& summary = sel.final_availability();
    mv::RunManifest man = mv::load_manifest(common.out_dir);
    mv::write_stage_file(man, "assess", common.out_dir, "assess/availability.csv",
                         mv::availability_csv(summary));
    mv::write_stage_file(man, "assess", common.out_dir, "assess/boxplot.csv",
                         mv::boxplot_csv(summary));
    mv::write_stage_file(man, "assess", common.out_dir, "assess/outliers.csv",
                         mv::outliers_csv(summary));
    man.stages["assess"].complete = true;
    mv::save_manifest(man, common.out_dir);
    std::cout << "assessed " << summary.features.size() << " features over " << summary.grid_rows
              << " grid rows\n  -> " << (fs::path(common.out_dir) / "assess").string() << "\n";
    return 0;
}

int cmd_baseline(const CommonArgs& common, const std::string& frequencies, double confidence) {
    mv::ProjectConfig config = load_config_checked(common.config_path);
    apply_overrides(config, frequencies, confidence);
    mv::RunManifest man = mv::load_manifest(common.out_dir);
    mv::require_stage(man, "ingest", "run the ingest command first");
    mv::RawDataset ds = mv::load_ingested_dataset(common.out_dir);
    mv::HyperGrid grid;
    mv::BaselineResult result = mv::run_baseline(config, ds, grid, common.seed);
    man.seed = common.seed;
    mv::write_baseline_outputs(man, common.out_dir, result);
    mv::save_manifest(man, common.out_dir);

    const mv::ModelScore& best = result.scores[result.winner];
    std::cout << result.trained.models.size() << " models trained ("
              << result.trained.failures.size() << " failures)\n";
    std::cout << "winner: " << mv::to_string(best.family) << " @ " << mv::to_string(best.frequency)
              << " (" << best.hyper << "), CV(RMSE) " << mv::format_double(best.cv_rmse_pct)
              << "%, NMBE " << mv::format_double(best.nmbe_pct) << "%\n";
    std::cout << "  -> " << (fs::path(common.out_dir) / "baseline").string() << "\n";
    return 0;
}

int cmd_report(const CommonArgs& common, const std::string& csv, const std::string& manifest,
               const std::string& adjustments_path, const std::string& model_override,
               double confidence) {
    mv::ProjectConfig config = load_config_checked(common.config_path);
    apply_overrides(config, "", confidence);
    if (csv.empty() || manifest.empty())
        throw std::runtime_error("report needs --csv (reporting export) and --manifest");
    mv::TagManifest tags = mv::load_tag_manifest(manifest);
    mv::RawDataset ds = mv::ingest_csv(csv, tags);

    std::vector<mv::AdjustmentRecord> adjustments;
    if (!adjustments_path.empty())
        adjustments = mv::load_adjustments(adjustments_path, config.reporting_period);

    std::optional<std::pair<mv::Frequency, mv::ModelFamily>> override;
    if (!model_override.empty()) {
        auto slash = model_override.find('/');
        if (slash == std::string::npos)
            throw std::runtime_error("--model expects frequency/family, e.g. hourly/knn");
        override = {mv::parse_frequency(model_override.substr(0, slash)),
                    mv::parse_family(model_override.substr(slash + 1))};
    }

    mv::ReportResult result = mv::run_report(config, common.out_dir, ds, adjustments, override);
    mv::RunManifest man = mv::load_manifest(common.out_dir);
    mv::write_report_outputs(man, common.out_dir, result);
    mv::save_manifest(man, common.out_dir);

    std::cout << mv::savings_text(result);
    std::cout << "  -> " << (fs::path(common.out_dir) / "report").string() << "\n";
    return 0;
}

int cmd_acceptability(const CommonArgs& common) {
    fs::path path = fs::path(common.out_dir) / "report" / "acceptability.csv";
    if (!fs::exists(path))
        throw std::runtime_error("no acceptability table at " + path.string() +
                                 "; run the report command first");
    mv::CsvTable t = mv::read_csv(path.string());
    std::printf("%-10s %-8s %16s %16s %12s\n", "frequency", "family", "savings", "SE",
                "acceptable");
    for (const auto& row : t.rows)
        std::printf("%-10s %-8s %16s %16s %12s\n", row[0].c_str(), row[1].c_str(),
                    row[2].c_str(), row[3].c_str(), row[4].c_str());
    return 0;
}

int cmd_required_performance(const CommonArgs& common, double t, std::size_t n, std::size_t m,
                             const std::string& fractions_spec) {
    double lo = 0.01, hi = 0.5, step = 0.01;
    if (!fractions_spec.empty()) {
        if (std::sscanf(fractions_spec.c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3)
            throw std::runtime_error("--fractions expects lo:hi:step");
    }
    std::vector<double> fractions;
    for (double f = lo; f <= hi + 1e-12; f += step) fractions.push_back(f);
    auto curve = mv::required_cvrmse_curve(fractions, t, n, m);
    std::ostringstream s;
    s << "# t=" << mv::format_double(t) << " n=" << n << " m=" << m << "\n";
    s << "fractional_savings,required_cvrmse_pct\n";
    for (const auto& p : curve)
        s << mv::format_double(p.fractional_savings) << ","
          << mv::format_double(p.required_cvrmse_pct) << "\n";
    if (!common.out_dir.empty()) {
        mv::RunManifest man = mv::load_manifest(common.out_dir);
        mv::write_stage_file(man, "required-performance", common.out_dir,
                             "required_performance.csv", s.str());
        man.stages["required-performance"].complete = true;
        mv::save_manifest(man, common.out_dir);
        std::cout << "  -> "
                  << (fs::path(common.out_dir) / "required_performance.csv").string() << "\n";
    } else {
        std::cout << s.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"M&V 2.0 engine: baseline energy modelling and savings verification"};
    app.require_subcommand(1);

    CommonArgs common;
    std::string csv, manifest, frequencies, adjustments, model_override, fractions;
    double confidence = 0.0;
    double rp_t = 1.0;
    std::size_t rp_n = 1000, rp_m = 1000;

    auto add_common = [&](CLI::App* sub, bool need_config = true) {
        if (need_config)
            sub->add_option("--config", common.config_path, "project configuration JSON")
                ->required();
        sub->add_option("--out", common.out_dir, "run directory for stage outputs")->required();
        sub->add_option("--seed", common.seed, "run seed (split, folds, weight init)");
    };

    auto* ingest = app.add_subcommand("ingest", "ingest and contextualise a raw meter export");
    add_common(ingest);
    ingest->add_option("--csv", csv, "raw CSV export")->required();
    ingest->add_option("--manifest", manifest, "tag manifest JSON")->required();

    auto* selectf = app.add_subcommand("select-features", "rank variables and select features");
    add_common(selectf);
    selectf->add_option("--csv", csv, "raw CSV export (defaults to the ingest stage output)");
    selectf->add_option("--manifest", manifest, "tag manifest JSON");

    auto* assess = app.add_subcommand("assess", "availability assessment of selected features");
    add_common(assess);
    assess->add_option("--csv", csv, "raw CSV export (defaults to the ingest stage output)");
    assess->add_option("--manifest", manifest, "tag manifest JSON");

    auto* baseline = app.add_subcommand("baseline", "train and evaluate all baseline models");
    add_common(baseline);
    baseline->add_option("--frequencies", frequencies,
                         "comma list overriding the configured frequencies");
    baseline->add_option("--confidence", confidence, "override configured confidence level");

    auto* report = app.add_subcommand("report", "quantify reporting-period savings");
    add_common(report);
    report->add_option("--csv", csv, "reporting-period CSV export")->required();
    report->add_option("--manifest", manifest, "tag manifest JSON")->required();
    report->add_option("--adjustments", adjustments, "non-routine adjustments JSON");
    report->add_option("--model", model_override, "primary model as frequency/family");
    report->add_option("--confidence", confidence, "override configured confidence level");

    auto* acceptability =
        app.add_subcommand("acceptability", "print the per-model acceptability table");
    acceptability->add_option("--out", common.out_dir, "run directory")->required();

    auto* reqperf = app.add_subcommand(
        "required-performance", "model performance required under varying fractional savings");
    reqperf->add_option("--t", rp_t, "t-statistic for the confidence level");
    reqperf->add_option("--n", rp_n, "baseline observation count (context)");
    reqperf->add_option("--m", rp_m, "reporting interval count");
    reqperf->add_option("--fractions", fractions, "grid as lo:hi:step (default 0.01:0.5:0.01)");
    reqperf->add_option("--out", common.out_dir, "run directory (prints to stdout when absent)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (app.got_subcommand(ingest)) return cmd_ingest(common, csv, manifest);
        if (app.got_subcommand(selectf)) return cmd_select_features(common, csv, manifest);
        if (app.got_subcommand(assess)) return cmd_assess(common, csv, manifest);
        if (app.got_subcommand(baseline)) return cmd_baseline(common, frequencies, confidence);
        if (app.got_subcommand(report))
            return cmd_report(common, csv, manifest, adjustments, model_override, confidence);
        if (app.got_subcommand(acceptability)) return cmd_acceptability(common);
        if (app.got_subcommand(reqperf))
            return cmd_required_performance(common, rp_t, rp_n, rp_m, fractions);
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 1;
    }
    return 0;
}
