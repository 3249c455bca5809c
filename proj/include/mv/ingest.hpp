#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mv/common.hpp"
#include "mv/csv.hpp"
#include "mv/series.hpp"
#include "mv/time.hpp"

namespace mv {

// Maps raw CSV column names to tag sets and units. Kept in a separate file so
// raw exports stay untouched and the same mapping can be replayed on
// reporting-period exports.
struct TagManifest {
    struct Entry {
        std::map<std::string, std::string> tags;  // must include site/equip/point
        std::string unit;
        bool dependent = false;
    };
    std::map<std::string, Entry> columns;
};

inline TagManifest load_tag_manifest(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    if (!j.contains("columns") || !j["columns"].is_object())
        throw std::runtime_error("manifest " + path + ": missing top-level \"columns\" object");
    TagManifest m;
    for (auto& [col, spec] : j["columns"].items()) {
        TagManifest::Entry e;
        for (auto& [k, v] : spec.items()) {
            if (k == "unit") e.unit = v.get<std::string>();
            else if (k == "dependent") e.dependent = v.get<bool>();
            else e.tags[k] = v.get<std::string>();
        }
        m.columns[col] = std::move(e);
    }
    return m;
}

namespace detail {

inline std::int64_t infer_native_step(const std::vector<TimePoint>& times) {
    if (times.size() < 2) return 0;
    std::map<std::int64_t, std::size_t> counts;
    for (std::size_t i = 1; i < times.size(); ++i) counts[times[i] - times[i - 1]]++;
    std::int64_t best = 0;
    std::size_t best_count = 0;
    for (auto& [d, c] : counts)
        if (c > best_count) {
            best = d;
            best_count = c;
        }
    return best;
}

}  // namespace detail

// Reads a raw meter export (header row, first column timestamp, one column
// per channel) and contextualises every column via the manifest. Unparseable
// cells become missing values, not zeros.
inline RawDataset ingest_csv(const std::string& csv_path, const TagManifest& manifest) {
    CsvTable t = read_csv(csv_path);
    if (t.header.size() < 2)
        throw std::runtime_error(csv_path + ": need a timestamp column plus at least one data column");

    std::vector<TimePoint> times;
    times.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        TimePoint tp;
        try {
            tp = parse_iso8601(t.rows[r][0]);
        } catch (const std::exception&) {
            throw std::runtime_error(csv_path + " row " + std::to_string(r + 2) +
                                     ": missing or malformed timestamp in first column");
        }
        if (!times.empty() && tp == times.back())
            throw std::runtime_error(csv_path + " row " + std::to_string(r + 2) +
                                     ": duplicate timestamp " + t.rows[r][0]);
        if (!times.empty() && tp < times.back())
            throw std::runtime_error(csv_path + " row " + std::to_string(r + 2) +
                                     ": timestamps not increasing");
        times.push_back(tp);
    }

    std::set<std::string> csv_columns(t.header.begin() + 1, t.header.end());
    for (const auto& [col, entry] : manifest.columns)
        if (!csv_columns.count(col))
            throw std::runtime_error("manifest references column '" + col +
                                     "' which is absent from " + csv_path);

    RawDataset ds;
    for (std::size_t c = 1; c < t.header.size(); ++c) {
        const std::string& col_name = t.header[c];
        auto it = manifest.columns.find(col_name);
        if (it == manifest.columns.end())
            throw std::runtime_error("column '" + col_name + "' of " + csv_path +
                                     " has no manifest entry");
        TaggedChannel ch;
        ch.id = col_name;
        ch.unit = it->second.unit;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            double v = parse_cell(t.rows[r][c]);
            if (is_missing(v)) continue;  // absent from the series, never zero
            ch.times.push_back(times[r]);
            ch.values.push_back(v);
        }
        ch = apply_tags(std::move(ch), it->second.tags);
        if (it->second.dependent) {
            if (ds.dependent_id)
                throw std::runtime_error("manifest marks more than one dependent column");
            ds.dependent_id = ch.id;
        }
        ds.channels.push_back(std::move(ch));
    }
    ds.native_step_seconds = detail::infer_native_step(times);
    ds.check();
    return ds;
}

// Serialises channels back to CSV on the union grid. Numeric values
// round-trip bit-exactly; missing observations are empty cells.
inline std::string dataset_to_csv(const RawDataset& ds) {
    std::vector<TimePoint> grid;
    for (const auto& ch : ds.channels) grid.insert(grid.end(), ch.times.begin(), ch.times.end());
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

    std::ostringstream out;
    out << "timestamp";
    for (const auto& ch : ds.channels) out << "," << csv_escape(ch.id);
    out << "\n";

    std::vector<std::size_t> cursor(ds.channels.size(), 0);
    for (TimePoint t : grid) {
        out << format_iso8601(t);
        for (std::size_t c = 0; c < ds.channels.size(); ++c) {
            const auto& ch = ds.channels[c];
            std::size_t& j = cursor[c];
            while (j < ch.size() && ch.times[j] < t) ++j;
            out << ",";
            if (j < ch.size() && ch.times[j] == t) out << format_double(ch.values[j]);
        }
        out << "\n";
    }
    return out.str();
}

// Companion manifest for a contextualised dataset, so the written CSV can be
// re-ingested with the same tags (column names are already the tagged ids).
inline std::string dataset_tags_json(const RawDataset& ds) {
    nlohmann::json cols = nlohmann::json::object();
    for (const auto& ch : ds.channels) {
        nlohmann::json e = nlohmann::json::object();
        for (const auto& [k, v] : ch.tags) e[k] = v;
        e["unit"] = ch.unit;
        if (ds.dependent_id && *ds.dependent_id == ch.id) e["dependent"] = true;
        cols[ch.id] = e;
    }
    nlohmann::json j;
    j["columns"] = cols;
    return j.dump(2) + "\n";
}

}  // namespace mv
