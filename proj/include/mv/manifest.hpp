#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "mv/common.hpp"
#include "mv/csv.hpp"

namespace mv {

// Sequencing record for a run directory: which stages have completed, with
// content hashes of their outputs. Reporting-stage commands refuse to run
// until the baseline stage has recorded a persisted winning model.
struct RunManifest {
    std::string config_path;
    std::uint64_t seed = 1;
    std::map<std::string, std::string> inputs;  // role -> path
    struct Stage {
        bool complete = false;
        std::string winner;                          // baseline stage only
        std::map<std::string, std::string> outputs;  // relative path -> fnv1a hex
    };
    std::map<std::string, Stage> stages;
};

namespace detail {

inline std::string hash_hex(const std::string& bytes) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a(bytes)));
    return buf;
}

}  // namespace detail

inline std::string manifest_path(const std::string& out_dir) {
    return (std::filesystem::path(out_dir) / "manifest.json").string();
}

inline RunManifest load_manifest(const std::string& out_dir) {
    RunManifest m;
    std::string path = manifest_path(out_dir);
    if (!std::filesystem::exists(path)) return m;
    nlohmann::json j = nlohmann::json::parse(read_text_file(path));
    m.config_path = j.value("config", "");
    m.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("inputs"))
        for (auto& [k, v] : j["inputs"].items()) m.inputs[k] = v.get<std::string>();
    if (j.contains("stages"))
        for (auto& [name, st] : j["stages"].items()) {
            RunManifest::Stage s;
            s.complete = st.value("complete", false);
            s.winner = st.value("winner", "");
            if (st.contains("outputs"))
                for (auto& [p, h] : st["outputs"].items())
                    s.outputs[p] = h.get<std::string>();
            m.stages[name] = std::move(s);
        }
    return m;
}

inline void save_manifest(const RunManifest& m, const std::string& out_dir) {
    nlohmann::json j;
    j["config"] = m.config_path;
    j["seed"] = m.seed;
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& [k, v] : m.inputs) inputs[k] = v;
    j["inputs"] = inputs;
    nlohmann::json stages = nlohmann::json::object();
    for (const auto& [name, s] : m.stages) {
        nlohmann::json st;
        st["complete"] = s.complete;
        if (!s.winner.empty()) st["winner"] = s.winner;
        nlohmann::json outs = nlohmann::json::object();
        for (const auto& [p, h] : s.outputs) outs[p] = h;
        st["outputs"] = outs;
        stages[name] = st;
    }
    j["stages"] = stages;
    write_text_file(manifest_path(out_dir), j.dump(2) + "\n");
}

// Writes a stage output file and records its content hash.
inline void write_stage_file(RunManifest& m, const std::string& stage,
                             const std::string& out_dir, const std::string& rel_path,
                             const std::string& content) {
    std::filesystem::path full = std::filesystem::path(out_dir) / rel_path;
    std::filesystem::create_directories(full.parent_path());
    write_text_file(full.string(), content);
    m.stages[stage].outputs[rel_path] = detail::hash_hex(content);
}

inline void require_stage(const RunManifest& m, const std::string& stage,
                          const std::string& hint) {
    auto it = m.stages.find(stage);
    if (it == m.stages.end() || !it->second.complete)
        throw std::runtime_error("stage '" + stage + "' has not completed in this run directory; " +
                                 hint);
}

}  // namespace mv
