#pragma once

// Stratified train/validation/test assignment at 8:1:1.

#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "synthaction/common.hpp"
#include "synthaction/rng.hpp"
#include "synthaction/scene/dataset.hpp"

namespace synthaction::eval {

enum class Part : std::uint8_t { Train = 0, Val = 1, Test = 2 };

inline const char* part_name(Part p) {
    switch (p) {
        case Part::Train: return "train";
        case Part::Val: return "val";
        case Part::Test: return "test";
    }
    return "?";
}

/// Validation and test sizes for a group of n clips; the remainder trains.
inline int holdout_size(int n) { return static_cast<int>(std::lround(n / 10.0)); }

struct SplitAssignment {
    std::vector<Part> part;  // parallel to the manifest entries

    std::vector<std::size_t> indices(Part p) const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < part.size(); ++i)
            if (part[i] == p) out.push_back(i);
        return out;
    }
    std::size_t count(Part p) const { return indices(p).size(); }
};

/// Per 40-class label: shuffle the label's clips (manifest order) with a
/// label-specific stream, first round(n/10) to validation, next round(n/10)
/// to test, the rest to train.
inline SplitAssignment split(const std::vector<scene::ManifestEntry>& entries, std::uint64_t seed) {
    SYNTHACTION_REQUIRE(!entries.empty(), "split: empty manifest");
    std::map<int, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < entries.size(); ++i) groups[entries[i].label()].push_back(i);
    SplitAssignment s;
    s.part.assign(entries.size(), Part::Train);
    for (auto& [label, idx] : groups) {
        Rng rng(seed, {0x5B17, static_cast<std::uint64_t>(label)});
        rng.shuffle(idx);
        const int n = static_cast<int>(idx.size()), h = holdout_size(n);
        for (int i = 0; i < h; ++i) s.part[idx[static_cast<std::size_t>(i)]] = Part::Val;
        for (int i = h; i < 2 * h; ++i) s.part[idx[static_cast<std::size_t>(i)]] = Part::Test;
    }
    return s;
}

}  // namespace synthaction::eval
