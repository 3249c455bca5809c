#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "mv/mv.hpp"
#include "support/synthetic.hpp"
#include "support/testutil.hpp"

namespace fs = std::filesystem;
using testutil::TempDir;

namespace {

// small hourly-native facility shared by the pipeline tests
synth::FacilitySpec small_spec() {
    synth::FacilitySpec spec;
    spec.step = 3600;
    spec.baseline_start = mv::make_utc(2016, 1, 4);
    spec.baseline_end = mv::make_utc(2016, 7, 4);       // 6 months
    spec.implementation_end = mv::make_utc(2016, 8, 1);
    spec.reporting_end = mv::make_utc(2016, 9, 26);     // 8 weeks
    spec.frequencies = "[\"hourly\", \"daily\", \"weekly\"]";
    return spec;
}

struct Fixture {
    synth::Facility fac;
    mv::ProjectConfig config;
    mv::RawDataset baseline_ds;
    mv::RawDataset reporting_ds;
};

const Fixture& fixture() {
    static Fixture* f = [] {
        auto* out = new Fixture;
        out->fac = synth::generate(small_spec());
        TempDir dir("pipeline_fixture");
        mv::write_text_file(dir.file("config.json"), out->fac.config_json);
        mv::write_text_file(dir.file("tags.json"), out->fac.tag_manifest_json);
        mv::write_text_file(dir.file("b.csv"), out->fac.baseline_csv);
        mv::write_text_file(dir.file("r.csv"), out->fac.reporting_csv);
        out->config = mv::load_config(dir.file("config.json"));
        mv::TagManifest tags = mv::load_tag_manifest(dir.file("tags.json"));
        out->baseline_ds = mv::ingest_csv(dir.file("b.csv"), tags);
        out->reporting_ds = mv::ingest_csv(dir.file("r.csv"), tags);
        return out;
    }();
    return *f;
}

}  // namespace

TEST_CASE("run_baseline: 3 frequencies x 4 families yield 12 models and a winner") {
    const Fixture& fx = fixture();
    mv::HyperGrid grid;
    mv::BaselineResult result = mv::run_baseline(fx.config, fx.baseline_ds, grid, 5);
    REQUIRE(result.trained.models.size() == 12);
    REQUIRE(result.trained.failures.empty());
    REQUIRE(result.scores.size() == 12);
    REQUIRE(result.winner < result.scores.size());
    // winner is the arg-min over CV(RMSE)
    for (const auto& s : result.scores)
        REQUIRE(result.scores[result.winner].cv_rmse_pct <= s.cv_rmse_pct);

    // the poor-quality channel was selected first, then omitted on re-run
    REQUIRE(result.selection.rounds.size() == 2);
    std::vector<std::string> omitted = result.selection.all_omitted();
    REQUIRE(std::find(omitted.begin(), omitted.end(), "plant.waterroom3-elec") != omitted.end());
    // the known drivers survive selection
    const auto& chosen = result.selection.final_subset().selected;
    REQUIRE(std::find(chosen.begin(), chosen.end(), "plant.ahu04-elec") != chosen.end());
    for (const auto& [id, v] : result.selection.final_subset().vif_values) REQUIRE(v <= 5.0);
}

TEST_CASE("run_baseline: deterministic outputs for a fixed seed") {
    const Fixture& fx = fixture();
    mv::HyperGrid grid;
    mv::BaselineResult a = mv::run_baseline(fx.config, fx.baseline_ds, grid, 9);
    mv::BaselineResult b = mv::run_baseline(fx.config, fx.baseline_ds, grid, 9);
    REQUIRE(mv::scores_csv(a.scores, a.winner) == mv::scores_csv(b.scores, b.winner));
    mv::BaselineResult c = mv::run_baseline(fx.config, fx.baseline_ds, grid, 10);
    REQUIRE(mv::scores_csv(a.scores, a.winner) != mv::scores_csv(c.scores, c.winner));
}

TEST_CASE("report stage: gating, adjustments, acceptability table") {
    const Fixture& fx = fixture();
    TempDir dir("pipeline_report");
    mv::HyperGrid grid;
    mv::BaselineResult base = mv::run_baseline(fx.config, fx.baseline_ds, grid, 5);
    mv::RunManifest man;
    mv::write_baseline_outputs(man, dir.str(), base);
    mv::save_manifest(man, dir.str());

    mv::ReportResult plain = mv::run_report(fx.config, dir.str(), fx.reporting_ds, {});
    REQUIRE(plain.runs.size() == 12);
    REQUIRE(plain.table.size() == 12);
    const mv::SavingsReport& prim = plain.runs[plain.primary].report;
    REQUIRE(prim.total_savings > 0.0);
    REQUIRE(prim.range_low < prim.total_savings);
    REQUIRE(prim.range_high > prim.total_savings);

    SECTION("non-routine adjustment scales the adjusted baseline and is audited") {
        mv::AdjustmentRecord rec;
        rec.name = "floor area expansion";
        rec.interval = fx.config.reporting_period;
        rec.factor = 1.2;
        rec.justification = "served area grew by 20%";
        mv::ReportResult adjusted = mv::run_report(fx.config, dir.str(), fx.reporting_ds, {rec});
        const mv::SavingsReport& pa = adjusted.runs[adjusted.primary].report;
        double base_total = 0.0, adj_total = 0.0;
        for (double v : prim.adjusted_baseline) base_total += v;
        for (double v : pa.adjusted_baseline) adj_total += v;
        REQUIRE_THAT(adj_total, Catch::Matchers::WithinRel(1.2 * base_total, 1e-9));
        bool audited = false;
        for (const auto& a : pa.advisories)
            if (a.find("floor area expansion") != std::string::npos &&
                a.find("1.2") != std::string::npos)
                audited = true;
        REQUIRE(audited);
    }

    SECTION("report refuses to run without a completed baseline stage") {
        TempDir empty("pipeline_nobase");
        REQUIRE_THROWS_WITH(mv::run_report(fx.config, empty.str(), fx.reporting_ds, {}),
                            Catch::Matchers::ContainsSubstring("baseline"));
    }

    SECTION("savings text puts advisories first when present") {
        std::string text = mv::savings_text(plain);
        REQUIRE_THAT(text, Catch::Matchers::ContainsSubstring("range of savings"));
    }

    SECTION("primary override picks a specific model") {
        mv::ReportResult forced =
            mv::run_report(fx.config, dir.str(), fx.reporting_ds, {},
                           std::make_pair(mv::Frequency::daily, mv::ModelFamily::ols));
        REQUIRE(forced.runs[forced.primary].model.frequency == mv::Frequency::daily);
        REQUIRE(forced.runs[forced.primary].model.family == mv::ModelFamily::ols);
    }
}

TEST_CASE("persisted winner file matches the score table") {
    const Fixture& fx = fixture();
    TempDir dir("pipeline_winner");
    mv::HyperGrid grid;
    mv::BaselineResult base = mv::run_baseline(fx.config, fx.baseline_ds, grid, 5);
    mv::RunManifest man;
    mv::write_baseline_outputs(man, dir.str(), base);
    mv::save_manifest(man, dir.str());

    REQUIRE(fs::exists(dir.path / "baseline" / "winner.json"));
    REQUIRE(fs::exists(dir.path / "baseline" / "scores.csv"));
    std::size_t model_files = 0;
    for (const auto& e : fs::directory_iterator(dir.path / "baseline" / "models")) {
        (void)e;
        ++model_files;
    }
    REQUIRE(model_files == 12);

    mv::RunManifest loaded = mv::load_manifest(dir.str());
    REQUIRE(loaded.stages.at("baseline").complete);
    const mv::ModelScore& best = base.scores[base.winner];
    REQUIRE(loaded.stages.at("baseline").winner ==
            mv::model_rel_path(best.frequency, best.family));
    // the persisted winner reloads and predicts
    mv::TrainedModel w = mv::model_from_json(
        mv::read_text_file((dir.path / loaded.stages.at("baseline").winner).string()));
    REQUIRE(w.frequency == best.frequency);
    REQUIRE(w.family == best.family);
}

TEST_CASE("out-of-range reporting feature produces an advisory but completes") {
    const Fixture& fx = fixture();
    TempDir dir("pipeline_gate");
    mv::HyperGrid grid;
    mv::BaselineResult base = mv::run_baseline(fx.config, fx.baseline_ds, grid, 5);
    mv::RunManifest man;
    mv::write_baseline_outputs(man, dir.str(), base);
    mv::save_manifest(man, dir.str());

    // inflate one selected feature far beyond its training range
    mv::RawDataset inflated = fx.reporting_ds;
    const std::string& feature = base.selection.final_subset().selected.front();
    for (auto& ch : inflated.channels)
        if (ch.id == feature)
            for (auto& v : ch.values) v *= 3.0;
    mv::ReportResult result = mv::run_report(fx.config, dir.str(), inflated, {});
    bool advisory = false;
    for (const auto& a : result.runs[result.primary].report.advisories)
        if (a.find("beyond the range of applicability") != std::string::npos) advisory = true;
    REQUIRE(advisory);
}

TEST_CASE("aggregation audit: every aggregated value is the mean of its source cells") {
    mv::Rng rng(2024);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t rows = 50 + rng.below(400);
        std::vector<double> f(rows), y(rows);
        for (std::size_t i = 0; i < rows; ++i) {
            f[i] = rng.normal() * 10.0;
            y[i] = rng.normal() * 5.0 + 50.0;
            if (rng.uniform01() < 0.1) f[i] = mv::kMissing;
        }
        mv::FeatureMatrix m = testutil::make_matrix({{"f", f}, {"load", y}});
        mv::Frequency target = trial % 2 == 0 ? mv::Frequency::hourly : mv::Frequency::daily;
        mv::FrequencyDataset agg = mv::aggregate(m, target, 900);
        // independent audit: group source cells by bucket and compare
        for (std::size_t r = 0; r < agg.matrix.rows(); ++r) {
            mv::TimePoint b = agg.matrix.times[r];
            for (std::size_t c = 0; c < 2; ++c) {
                double sum = 0.0;
                std::size_t count = 0;
                for (std::size_t q = 0; q < m.rows(); ++q) {
                    if (mv::floor_to(target, m.times[q]) != b) continue;
                    if (mv::is_missing(m.columns[c][q])) continue;
                    sum += m.columns[c][q];
                    count += 1;
                }
                double got = agg.matrix.columns[c][r];
                if (count == 0) {
                    REQUIRE(mv::is_missing(got));
                } else {
                    REQUIRE(got == sum / static_cast<double>(count));
                }
            }
        }
    }
}
