#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

#include "mv/csv.hpp"
#include "mv/manifest.hpp"
#include "support/synthetic.hpp"
#include "support/testutil.hpp"

namespace fs = std::filesystem;
using testutil::TempDir;

namespace {

std::string cli() { return MV_CLI_PATH; }

int run(const std::string& args, const std::string& log) {
    std::string cmd = "MV_THREADS=2 " + cli() + " " + args + " > " + log + " 2>&1";
    int rc = std::system(cmd.c_str());
    return rc == -1 ? -1 : WEXITSTATUS(rc);
}

struct CliFixture {
    TempDir dir;
    synth::Facility fac;

    CliFixture() : dir("cli") {
        synth::FacilitySpec spec;
        spec.step = 3600;
        spec.baseline_start = mv::make_utc(2016, 1, 4);
        spec.baseline_end = mv::make_utc(2016, 5, 2);    // 17 weeks
        spec.implementation_end = mv::make_utc(2016, 6, 6);
        spec.reporting_end = mv::make_utc(2016, 8, 1);   // 8 weeks
        spec.frequencies = "[\"hourly\", \"daily\"]";
        spec.poor_channel = false;
        fac = synth::generate(spec);
        mv::write_text_file(dir.file("config.json"), fac.config_json);
        mv::write_text_file(dir.file("tags.json"), fac.tag_manifest_json);
        mv::write_text_file(dir.file("baseline.csv"), fac.baseline_csv);
        mv::write_text_file(dir.file("reporting.csv"), fac.reporting_csv);
    }

    std::string common(const std::string& out) const {
        return "--config " + dir.file("config.json") + " --out " + dir.file(out);
    }
};

}  // namespace

TEST_CASE("cli: ingest -> baseline -> report, idempotent and gated") {
    CliFixture fx;
    std::string out = fx.dir.file("run");

    SECTION("report before baseline is refused") {
        REQUIRE(run("report " + fx.common("run") + " --csv " + fx.dir.file("reporting.csv") +
                        " --manifest " + fx.dir.file("tags.json"),
                    fx.dir.file("log0.txt")) != 0);
        std::string log = mv::read_text_file(fx.dir.file("log0.txt"));
        REQUIRE_THAT(log, Catch::Matchers::ContainsSubstring("baseline"));
    }

    REQUIRE(run("ingest " + fx.common("run") + " --csv " + fx.dir.file("baseline.csv") +
                    " --manifest " + fx.dir.file("tags.json"),
                fx.dir.file("log1.txt")) == 0);
    REQUIRE(fs::exists(fs::path(out) / "ingest" / "dataset.csv"));
    REQUIRE(fs::exists(fs::path(out) / "ingest" / "channels.csv"));

    REQUIRE(run("baseline " + fx.common("run") + " --seed 3", fx.dir.file("log2.txt")) == 0);
    REQUIRE(fs::exists(fs::path(out) / "baseline" / "scores.csv"));
    mv::CsvTable scores = mv::read_csv((fs::path(out) / "baseline" / "scores.csv").string());
    REQUIRE(scores.rows.size() == 8);  // 4 families x 2 frequencies

    // byte-identical outputs when rerun with the same inputs and seed
    std::string scores_a = mv::read_text_file((fs::path(out) / "baseline" / "scores.csv").string());
    REQUIRE(run("baseline " + fx.common("run") + " --seed 3", fx.dir.file("log3.txt")) == 0);
    std::string scores_b = mv::read_text_file((fs::path(out) / "baseline" / "scores.csv").string());
    REQUIRE(scores_a == scores_b);

    // frequencies override shrinks the table
    REQUIRE(run("baseline " + fx.common("run2") + " --seed 3 --frequencies hourly",
                fx.dir.file("log3b.txt")) != 0);  // run2 has no ingest stage
    REQUIRE(run("ingest " + fx.common("run2") + " --csv " + fx.dir.file("baseline.csv") +
                    " --manifest " + fx.dir.file("tags.json"),
                fx.dir.file("log3c.txt")) == 0);
    REQUIRE(run("baseline " + fx.common("run2") + " --seed 3 --frequencies hourly",
                fx.dir.file("log3d.txt")) == 0);
    mv::CsvTable scores2 =
        mv::read_csv((fs::path(fx.dir.file("run2")) / "baseline" / "scores.csv").string());
    REQUIRE(scores2.rows.size() == 4);

    // report: completes, emits plot data and the acceptability table
    std::string adj = fx.dir.file("adjustments.json");
    mv::write_text_file(adj, std::string("[{\"name\": \"expansion\", \"interval\": ") +
                                 "{\"start\": \"2016-06-06\", \"end\": \"2016-08-01\"}, " +
                                 "\"factor\": 1.2, \"justification\": \"area +20%\"}]\n");
    REQUIRE(run("report " + fx.common("run") + " --csv " + fx.dir.file("reporting.csv") +
                    " --manifest " + fx.dir.file("tags.json") + " --adjustments " + adj,
                fx.dir.file("log4.txt")) == 0);
    for (const char* f : {"savings.json", "savings.txt", "acceptability.csv",
                          "fig_timeseries.csv", "fig_ranges.csv"})
        REQUIRE(fs::exists(fs::path(out) / "report" / f));
    std::string savings_txt = mv::read_text_file((fs::path(out) / "report" / "savings.txt").string());
    REQUIRE_THAT(savings_txt, Catch::Matchers::ContainsSubstring("expansion"));
    REQUIRE_THAT(savings_txt, Catch::Matchers::ContainsSubstring("1.2"));

    // acceptability pretty-printer runs off the stored table
    REQUIRE(run("acceptability --out " + out, fx.dir.file("log5.txt")) == 0);
    std::string table = mv::read_text_file(fx.dir.file("log5.txt"));
    REQUIRE_THAT(table, Catch::Matchers::ContainsSubstring("hourly"));

    // advisories never change the exit status: inflate a reporting channel
    mv::CsvTable rep = mv::read_csv(fx.dir.file("reporting.csv"));
    std::ostringstream inflated;
    inflated << rep.header[0];
    for (std::size_t c = 1; c < rep.header.size(); ++c) inflated << "," << rep.header[c];
    inflated << "\n";
    for (auto& row : rep.rows) {
        inflated << row[0];
        for (std::size_t c = 1; c < row.size(); ++c) {
            if (c == 1 && !row[c].empty()) {
                double v = mv::parse_cell(row[c]);
                inflated << "," << mv::format_double(v * 5.0);
            } else {
                inflated << "," << row[c];
            }
        }
        inflated << "\n";
    }
    mv::write_text_file(fx.dir.file("reporting_hot.csv"), inflated.str());
    REQUIRE(run("report " + fx.common("run") + " --csv " + fx.dir.file("reporting_hot.csv") +
                    " --manifest " + fx.dir.file("tags.json"),
                fx.dir.file("log6.txt")) == 0);
    std::string hot_log = mv::read_text_file(fx.dir.file("log6.txt"));
    REQUIRE_THAT(hot_log, Catch::Matchers::ContainsSubstring("ADVISORIES"));
}

TEST_CASE("cli: bad manifest exits non-zero and names the column") {
    CliFixture fx;
    mv::write_text_file(fx.dir.file("bad_tags.json"), R"({"columns": {
        "ghost_meter": {"site": "plant", "equip": "x", "point": "elec", "unit": "kWh"}}})");
    int rc = run("ingest " + fx.common("bad") + " --csv " + fx.dir.file("baseline.csv") +
                     " --manifest " + fx.dir.file("bad_tags.json"),
                 fx.dir.file("log.txt"));
    REQUIRE(rc != 0);
    std::string log = mv::read_text_file(fx.dir.file("log.txt"));
    REQUIRE_THAT(log, Catch::Matchers::ContainsSubstring("ghost_meter"));
}

TEST_CASE("cli: select-features and assess emit their reports") {
    CliFixture fx;
    std::string out = fx.dir.file("sf");
    REQUIRE(run("ingest " + fx.common("sf") + " --csv " + fx.dir.file("baseline.csv") +
                    " --manifest " + fx.dir.file("tags.json"),
                fx.dir.file("sflog.txt")) == 0);
    REQUIRE(run("select-features " + fx.common("sf"), fx.dir.file("sflog2.txt")) == 0);
    REQUIRE(fs::exists(fs::path(out) / "features" / "features.csv"));
    REQUIRE(fs::exists(fs::path(out) / "features" / "selection.json"));
    std::string log = mv::read_text_file(fx.dir.file("sflog2.txt"));
    REQUIRE_THAT(log, Catch::Matchers::ContainsSubstring("adjusted R^2"));

    REQUIRE(run("assess " + fx.common("sf"), fx.dir.file("sflog3.txt")) == 0);
    for (const char* f : {"availability.csv", "boxplot.csv", "outliers.csv"})
        REQUIRE(fs::exists(fs::path(out) / "assess" / f));
    mv::CsvTable box = mv::read_csv((fs::path(out) / "assess" / "boxplot.csv").string());
    REQUIRE(box.header.front() == "id");
    REQUIRE(!box.rows.empty());
}

TEST_CASE("cli: required-performance emits a monotone curve") {
    CliFixture fx;
    std::string out = fx.dir.file("rp");
    REQUIRE(run("required-performance --t 1.0 --n 1000 --m 900 --out " + out,
                fx.dir.file("rplog.txt")) == 0);
    mv::CsvTable curve = mv::read_csv((fs::path(out) / "required_performance.csv").string());
    REQUIRE(curve.rows.size() >= 10);
    double prev = -1.0;
    for (std::size_t r = 0; r < curve.rows.size(); ++r) {
        if (curve.rows[r].size() < 2) continue;
        double v = mv::parse_cell(curve.rows[r][1]);
        if (mv::is_missing(v)) continue;  // the column-name row under the comment line
        REQUIRE(v > prev);
        prev = v;
    }
}
