#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "mv/csv.hpp"
#include "mv/time.hpp"

namespace mv {

// Project scope and boundaries, fixed before any ECM work starts.
struct ProjectConfig {
    std::string ecm_description;
    std::string boundary_description;
    DateInterval baseline_period;
    DateInterval implementation_period;
    DateInterval reporting_period;
    std::string dependent_channel_id;
    std::vector<std::pair<std::string, std::string>> static_factors;
    double confidence_level = 0.68;
    std::vector<Frequency> frequencies;

    Frequency finest_frequency() const {
        Frequency f = frequencies.front();
        for (Frequency g : frequencies)
            if (step_seconds(g) < step_seconds(f)) f = g;
        return f;
    }

    void check() const {
        if (!baseline_period.valid() || !implementation_period.valid() ||
            !reporting_period.valid())
            throw std::runtime_error("config: each period must have start < end");
        if (!(baseline_period.end <= implementation_period.start &&
              implementation_period.end <= reporting_period.start))
            throw std::runtime_error(
                "config: periods must be ordered baseline < implementation < reporting "
                "without overlap");
        if (dependent_channel_id.empty())
            throw std::runtime_error("config: dependent_channel is required");
        if (!(confidence_level > 0.0 && confidence_level < 1.0))
            throw std::runtime_error("config: confidence_level must be in (0,1)");
        if (frequencies.empty())
            throw std::runtime_error("config: frequencies must be non-empty");
        for (std::size_t i = 0; i < frequencies.size(); ++i)
            for (std::size_t j = i + 1; j < frequencies.size(); ++j)
                if (frequencies[i] == frequencies[j])
                    throw std::runtime_error("config: duplicate frequency");
    }
};

namespace detail {

inline DateInterval parse_interval(const nlohmann::json& j, const std::string& what) {
    if (!j.is_object() || !j.contains("start") || !j.contains("end"))
        throw std::runtime_error("config: " + what + " needs {start, end}");
    DateInterval iv{parse_iso8601(j["start"].get<std::string>()),
                    parse_iso8601(j["end"].get<std::string>())};
    return iv;
}

}  // namespace detail

inline ProjectConfig load_config(const std::string& path) {
    nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    ProjectConfig c;
    c.ecm_description = j.value("ecm_description", "");
    c.boundary_description = j.value("boundary_description", "");
    c.baseline_period = detail::parse_interval(j.at("baseline_period"), "baseline_period");
    c.implementation_period =
        detail::parse_interval(j.at("implementation_period"), "implementation_period");
    c.reporting_period = detail::parse_interval(j.at("reporting_period"), "reporting_period");
    c.dependent_channel_id = j.at("dependent_channel").get<std::string>();
    if (j.contains("static_factors"))
        for (const auto& f : j["static_factors"])
            c.static_factors.emplace_back(f.at("name").get<std::string>(),
                                          f.value("value", std::string{}));
    c.confidence_level = j.value("confidence_level", 0.68);
    if (!j.contains("frequencies"))
        throw std::runtime_error("config: frequencies is required");
    for (const auto& f : j["frequencies"])
        c.frequencies.push_back(parse_frequency(f.get<std::string>()));
    c.check();
    return c;
}

inline std::vector<Frequency> parse_frequency_list(const std::string& csv_list) {
    std::vector<Frequency> out;
    std::size_t pos = 0;
    while (pos <= csv_list.size()) {
        std::size_t comma = csv_list.find(',', pos);
        std::string item = csv_list.substr(pos, comma == std::string::npos ? std::string::npos
                                                                           : comma - pos);
        if (!item.empty()) out.push_back(parse_frequency(item));
        if (comma == std::string::npos) break;
        pos = comma + 1;
    }
    if (out.empty()) throw std::runtime_error("empty frequency list");
    return out;
}

}  // namespace mv
