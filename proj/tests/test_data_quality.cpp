#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "mv/common.hpp"
#include "mv/data_quality.hpp"
#include "support/testutil.hpp"

using testutil::make_matrix;

TEST_CASE("assess: box-plot rule flags the extreme point") {
    // oracle by hand: sorted [1..9,100], Q1 = 3.25, Q3 = 7.75, IQR = 4.5,
    // fences [-3.5, 14.5] -> only 100 is outside
    std::vector<double> vals{1, 2, 3, 4, 5, 6, 7, 8, 9, 100};
    std::vector<double> y(10, 1.0);
    for (std::size_t i = 0; i < 10; ++i) y[i] = static_cast<double>(i);
    mv::FeatureMatrix m = make_matrix({{"f", vals}, {"load", y}});
    mv::AvailabilitySummary s = mv::assess(m, {"f"});
    const mv::FeatureStats& st = s.feature("f");
    REQUIRE_THAT(st.q1, Catch::Matchers::WithinAbs(3.25, 1e-12));
    REQUIRE_THAT(st.q2, Catch::Matchers::WithinAbs(5.5, 1e-12));
    REQUIRE_THAT(st.q3, Catch::Matchers::WithinAbs(7.75, 1e-12));
    REQUIRE(st.outlier_count == 1);
    REQUIRE(st.outlier_values == std::vector<double>{100});
    REQUIRE(st.min == 1);
    REQUIRE(st.max == 100);
    REQUIRE(st.min <= st.q1);
    REQUIRE(st.q1 <= st.median);
    REQUIRE(st.median <= st.q3);
    REQUIRE(st.q3 <= st.max);
}

TEST_CASE("assess: constant column has one unique value and no outliers") {
    std::vector<double> vals(20, 42.0);
    std::vector<double> y(20);
    for (std::size_t i = 0; i < 20; ++i) y[i] = static_cast<double>(i);
    mv::AvailabilitySummary s = mv::assess(make_matrix({{"f", vals}, {"load", y}}), {"f"});
    const auto& st = s.feature("f");
    REQUIRE(st.missing_count == 0);
    REQUIRE(st.unique_count == 1);
    REQUIRE(st.outlier_count == 0);
    REQUIRE(st.poor_quality_fraction == 0.0);
    REQUIRE(st.mean == 42.0);
    REQUIRE(st.median == 42.0);
}

TEST_CASE("assess: missing fraction feeds poor_quality_fraction") {
    std::vector<double> vals(100);
    std::vector<double> y(100);
    for (std::size_t i = 0; i < 100; ++i) {
        vals[i] = static_cast<double>(i % 10);
        y[i] = static_cast<double>(i);
    }
    for (std::size_t i = 0; i < 6; ++i) vals[i * 7] = mv::kMissing;  // 6% of the grid
    mv::AvailabilitySummary s = mv::assess(make_matrix({{"f", vals}, {"load", y}}), {"f"});
    const auto& st = s.feature("f");
    REQUIRE(st.missing_count == 6);
    REQUIRE(st.poor_quality_fraction >= 0.06);
    // definitional identity
    REQUIRE(st.poor_quality_fraction ==
            static_cast<double>(st.missing_count + st.outlier_count) / 100.0);
}

TEST_CASE("assess: fewer than 4 values is signalled") {
    std::vector<double> vals{1.0, 2.0, mv::kMissing, mv::kMissing, mv::kMissing, 3.0};
    std::vector<double> y{1, 2, 3, 4, 5, 6};
    REQUIRE_THROWS(mv::assess(make_matrix({{"f", vals}, {"load", y}}), {"f"}));
}

TEST_CASE("omit_poor_features: strict 5% rule") {
    mv::AvailabilitySummary s;
    s.grid_rows = 100;
    auto add = [&](const std::string& id, double frac) {
        mv::FeatureStats st;
        st.id = id;
        st.poor_quality_fraction = frac;
        s.features.push_back(st);
    };
    // 15 candidates, 5 above the threshold -> 10 survive
    for (int i = 0; i < 10; ++i) add("good" + std::to_string(i), 0.01);
    for (int i = 0; i < 5; ++i) add("bad" + std::to_string(i), 0.08);
    std::vector<std::string> omitted = mv::omit_poor_features(s);
    REQUIRE(omitted.size() == 5);
    for (const auto& id : omitted) REQUIRE(id.substr(0, 3) == "bad");

    SECTION("all clean gives an empty list") {
        mv::AvailabilitySummary clean_summary;
        clean_summary.grid_rows = 100;
        mv::FeatureStats st;
        st.id = "f";
        st.poor_quality_fraction = 0.0;
        clean_summary.features.push_back(st);
        REQUIRE(mv::omit_poor_features(clean_summary).empty());
    }
    SECTION("exactly 5.0% is retained (strictly more than)") {
        mv::AvailabilitySummary edge;
        edge.grid_rows = 100;
        mv::FeatureStats st;
        st.id = "edge";
        st.poor_quality_fraction = 0.05;
        edge.features.push_back(st);
        REQUIRE(mv::omit_poor_features(edge).empty());
    }
}

namespace {

mv::FeatureMatrix clean_fixture(std::size_t rows, const std::set<std::size_t>& outlier_rows,
                                const std::set<std::size_t>& missing_rows) {
    std::vector<double> f(rows), y(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        f[i] = 10.0 + static_cast<double>(i % 7);
        y[i] = 100.0 + static_cast<double>(i % 13);
    }
    for (std::size_t r : outlier_rows) f[r] = 1e4;
    for (std::size_t r : missing_rows) f[r] = mv::kMissing;
    return make_matrix({{"f", f}, {"load", y}});
}

}  // namespace

TEST_CASE("clean: no flags leaves the matrix identical") {
    mv::FeatureMatrix m = clean_fixture(50, {}, {});
    mv::AvailabilitySummary s = mv::assess(m, {"f"});
    mv::FeatureMatrix c = mv::clean(m, s);
    REQUIRE(c.rows() == m.rows());
    REQUIRE(c.columns == m.columns);
    REQUIRE(c.times == m.times);
}

TEST_CASE("clean: one outlier row among 100 leaves 99") {
    mv::FeatureMatrix m = clean_fixture(100, {42}, {});
    mv::AvailabilitySummary s = mv::assess(m, {"f"});
    mv::FeatureMatrix c = mv::clean(m, s);
    REQUIRE(c.rows() == 99);
}

TEST_CASE("clean: exactly the flagged rows are absent") {
    std::set<std::size_t> outliers{3, 17, 31};
    std::set<std::size_t> missing{8, 44, 45, 77};
    mv::FeatureMatrix m = clean_fixture(100, outliers, missing);
    mv::AvailabilitySummary s = mv::assess(m, {"f"});
    mv::FeatureMatrix c = mv::clean(m, s);
    REQUIRE(c.rows() == 100 - 7);
    // independent row scan against the flag set
    std::set<mv::TimePoint> expect_absent;
    for (std::size_t r : outliers) expect_absent.insert(m.times[r]);
    for (std::size_t r : missing) expect_absent.insert(m.times[r]);
    for (mv::TimePoint t : c.times) REQUIRE(expect_absent.count(t) == 0);
}

TEST_CASE("clean: dropping more than half the rows is a data-insufficiency error") {
    std::set<std::size_t> missing;
    for (std::size_t i = 0; i < 26; ++i) missing.insert(i);
    mv::FeatureMatrix m = clean_fixture(50, {}, missing);
    mv::AvailabilitySummary s = mv::assess(m, {"f"});
    REQUIRE_THROWS_WITH(mv::clean(m, s), Catch::Matchers::ContainsSubstring("50%"));
}

TEST_CASE("clean: idempotent under the same summary") {
    mv::FeatureMatrix m = clean_fixture(80, {5, 60}, {10, 11});
    mv::AvailabilitySummary s = mv::assess(m, {"f"});
    mv::FeatureMatrix once = mv::clean(m, s);
    mv::FeatureMatrix twice = mv::clean(once, s);
    REQUIRE(once.times == twice.times);
    REQUIRE(once.columns == twice.columns);
}

TEST_CASE("clean: no value flagged under the original thresholds survives") {
    mv::Rng rng(1001);
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t rows = 40 + rng.below(100);
        std::set<std::size_t> outliers, missing;
        for (std::size_t i = 0; i < rows / 20; ++i) {
            outliers.insert(rng.below(rows));
            missing.insert(rng.below(rows));
        }
        mv::FeatureMatrix m = clean_fixture(rows, outliers, missing);
        mv::AvailabilitySummary s = mv::assess(m, {"f"});
        mv::FeatureMatrix c = mv::clean(m, s);
        const auto& st = s.feature("f");
        for (double v : c.col("f")) {
            REQUIRE(!mv::is_missing(v));
            REQUIRE(v >= st.lo_fence);
            REQUIRE(v <= st.hi_fence);
        }
        // no-invention: every surviving value exists at the same timestamp
        for (std::size_t r = 0; r < c.rows(); ++r) {
            std::size_t src = m.col_index("f");
            bool found = false;
            for (std::size_t q = 0; q < m.rows(); ++q)
                if (m.times[q] == c.times[r] && m.columns[src][q] == c.col("f")[r]) found = true;
            REQUIRE(found);
        }
    }
}

TEST_CASE("substitute_missing_block fills from the same calendar period of another year") {
    // two years of daily data; a 3-day hole in 2017 filled from 2016
    std::vector<double> f, y;
    std::vector<mv::TimePoint> times;
    for (int year : {2016, 2017})
        for (int day = 1; day <= 10; ++day) {
            times.push_back(mv::make_utc(year, 3, day));
            f.push_back(year == 2016 ? 100.0 + day : 200.0 + day);
            y.push_back(1.0);
        }
    mv::FeatureMatrix m;
    m.times = times;
    m.names = {"f", "load"};
    m.columns = {f, y};
    std::size_t base = 10;  // 2017 rows start here
    m.columns[0][base + 2] = mv::kMissing;
    m.columns[0][base + 3] = mv::kMissing;
    m.columns[0][base + 4] = mv::kMissing;

    mv::DateInterval hole{mv::make_utc(2017, 3, 3), mv::make_utc(2017, 3, 6)};
    mv::SubstitutionRecord rec =
        mv::substitute_missing_block(m, "f", hole, -1, "meter offline for maintenance");
    REQUIRE(rec.cells_filled == 3);
    REQUIRE(m.columns[0][base + 2] == 103.0);
    REQUIRE(m.columns[0][base + 3] == 104.0);
    REQUIRE(m.columns[0][base + 4] == 105.0);
    // only the explicitly targeted block is touched
    REQUIRE(m.columns[0][base + 1] == 202.0);
    REQUIRE_THROWS(mv::substitute_missing_block(m, "f", hole, 0, ""));
}
