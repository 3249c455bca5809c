#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mv/time.hpp"

namespace mv {

// One metered variable: site -> equip -> point tags plus an ordered series.
// Missing observations are simply absent from the series.
struct TaggedChannel {
    std::string id;
    std::map<std::string, std::string> tags;
    std::string unit;
    std::vector<TimePoint> times;
    std::vector<double> values;

    std::size_t size() const { return times.size(); }

    void check() const {
        if (times.size() != values.size())
            throw std::runtime_error("channel '" + id + "': time/value length mismatch");
        for (std::size_t i = 1; i < times.size(); ++i)
            if (times[i] <= times[i - 1])
                throw std::runtime_error("channel '" + id +
                                         "': timestamps not strictly increasing");
    }
};

// Validates the three-level hierarchy and renames the channel to the joined
// site.equip-point form. Re-applying identical tags is a no-op.
inline TaggedChannel apply_tags(TaggedChannel channel,
                                const std::map<std::string, std::string>& tags) {
    for (const char* level : {"site", "equip", "point"}) {
        auto it = tags.find(level);
        if (it == tags.end() || it->second.empty())
            throw std::runtime_error("channel '" + channel.id + "': tag set is missing the '" +
                                     level + "' level of the site->equip->point hierarchy");
    }
    channel.tags = tags;
    channel.id = tags.at("site") + "." + tags.at("equip") + "-" + tags.at("point");
    return channel;
}

struct RawDataset {
    std::vector<TaggedChannel> channels;
    std::int64_t native_step_seconds = 0;  // nominal spacing of raw samples
    std::optional<std::string> dependent_id;

    const TaggedChannel* find(const std::string& id) const {
        for (const auto& c : channels)
            if (c.id == id) return &c;
        return nullptr;
    }

    void check() const {
        std::map<std::string, int> seen;
        for (const auto& c : channels) {
            c.check();
            if (++seen[c.id] > 1)
                throw std::runtime_error("duplicate channel id '" + c.id + "'");
        }
        if (dependent_id && !find(*dependent_id))
            throw std::runtime_error("dependent channel '" + *dependent_id +
                                     "' not present in dataset");
    }
};

}  // namespace mv
