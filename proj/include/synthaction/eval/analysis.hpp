#pragma once

// Level-wide analyses built on a workbench: t-SNE maps of chain features.

#include <map>
#include <string>
#include <vector>

#include "synthaction/eval/experiment.hpp"
#include "synthaction/eval/tsne.hpp"

namespace synthaction::eval {

inline constexpr std::size_t kTsneMaxPoints = 1000;

/// Manifest rows for an embedding: everything when it fits, otherwise the
/// first max_points/40 clips of every 40-class label in manifest order.
inline std::vector<std::size_t> stratified_subset(const std::vector<scene::ManifestEntry>& entries,
                                                  std::size_t max_points) {
    std::vector<std::size_t> out;
    if (entries.size() <= max_points) {
        for (std::size_t i = 0; i < entries.size(); ++i) out.push_back(i);
        return out;
    }
    std::map<int, std::size_t> taken;
    for (const auto& e : entries) taken[e.label()] = 0;
    const std::size_t quota = std::max<std::size_t>(1, max_points / taken.size());
    for (std::size_t i = 0; i < entries.size(); ++i)
        if (taken[entries[i].label()]++ < quota) out.push_back(i);
    return out;
}

struct TsneMap {
    std::string level;
    std::vector<std::string> clips;
    std::vector<int> actions;
    TsneResult embedding;
    double silhouette = 0;  // by action label
};

inline TsneMap tsne_for_level(Workbench& wb, const std::string& level, Chain chain, std::uint64_t seed,
                              TsneParams params = {}, std::size_t max_points = kTsneMaxPoints) {
    const LevelData& d = wb.level(level, seed);
    const FittedChain& fc = wb.chain(level, chain, seed);
    const auto rows = stratified_subset(d.manifest.entries, max_points);
    TsneMap map;
    map.level = level;
    for (std::size_t i : rows) {
        map.clips.push_back(d.manifest.entries[i].clip_id);
        map.actions.push_back(d.manifest.entries[i].action());
    }
    params.seed = seed;
    map.embedding = tsne_embed(fc.features.select_rows(rows), params);
    map.silhouette = silhouette(map.embedding.points, map.actions);
    return map;
}

}  // namespace synthaction::eval
