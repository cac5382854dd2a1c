#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "rfs/tracks.hpp"

namespace rfs {

/// Parent tag, measurement index and weight of one detection-updated component.
struct DetectionLineage {
    Tag parent = 0;
    std::size_t measurement = 0;
    double weight = 0.0;
};

/// Tags for detection-updated children. For every parent tag the
/// measurement carrying the most child weight continues the parent's
/// identity; every other (parent, measurement) pair starts a new identity,
/// shared by all of its children (one per motion model). Identities flow
/// only from the previous frame.
[[nodiscard]] inline std::vector<Tag> assign_child_tags(std::span<const DetectionLineage> children,
                                                        Tag& next_tag) {
    std::map<std::pair<Tag, std::size_t>, double> mass;
    for (const auto& c : children) mass[{c.parent, c.measurement}] += c.weight;

    std::map<Tag, std::pair<std::size_t, double>> best;  // parent -> (measurement, mass)
    for (const auto& [key, w] : mass) {
        auto it = best.find(key.first);
        if (it == best.end() || w > it->second.second) best[key.first] = {key.second, w};
    }

    std::map<std::pair<Tag, std::size_t>, Tag> fresh;
    for (const auto& [key, w] : mass) {
        fresh[key] = best[key.first].first == key.second ? key.first : next_tag++;
    }

    std::vector<Tag> out;
    out.reserve(children.size());
    for (const auto& c : children) out.push_back(fresh[{c.parent, c.measurement}]);
    return out;
}

/// Groups components by tag and returns, for the `count` heaviest tag groups
/// (by summed weight, ties to the smaller tag), the index of each group's
/// heaviest member.
template <class Component>
[[nodiscard]] std::vector<std::size_t> heaviest_tag_groups(const std::vector<Component>& comps,
                                                           std::size_t count) {
    struct Group {
        double total = 0.0;
        std::size_t best = 0;
    };
    std::map<Tag, Group> groups;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        auto [it, inserted] = groups.try_emplace(comps[i].tag, Group{0.0, i});
        it->second.total += comps[i].weight;
        if (comps[i].weight > comps[it->second.best].weight) it->second.best = i;
    }
    std::vector<std::pair<Tag, Group>> ordered(groups.begin(), groups.end());
    std::stable_sort(ordered.begin(), ordered.end(),
                     [](const auto& a, const auto& b) { return a.second.total > b.second.total; });
    std::vector<std::size_t> out;
    for (std::size_t k = 0; k < ordered.size() && k < count; ++k) out.push_back(ordered[k].second.best);
    return out;
}

} // namespace rfs
