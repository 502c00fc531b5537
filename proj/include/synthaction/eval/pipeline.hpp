#pragma once

// Filter chains: per-clip extraction followed by train-only fitting
// (PCA basis or SIFT codebook) and transformation of every row.

#include <optional>
#include <string>
#include <vector>

#include "synthaction/common.hpp"
#include "synthaction/features/bgsub.hpp"
#include "synthaction/features/feature_matrix.hpp"
#include "synthaction/features/hog.hpp"
#include "synthaction/features/kmeans.hpp"
#include "synthaction/features/pca.hpp"
#include "synthaction/features/sift.hpp"
#include "synthaction/features/skeleton.hpp"
#include "synthaction/imgproc.hpp"
#include "synthaction/scene/dataset.hpp"

namespace synthaction::eval {

using features::FeatureMatrix;

/// The filter combinations evaluated, in table order.
enum class Chain : std::uint8_t { Downsize, BgsubDownsize, Pca, SkeletonPca, HogPca, SiftKmean, BgsubSiftKmean };

inline constexpr std::array<Chain, 7> kAllChains = {Chain::Downsize,    Chain::BgsubDownsize, Chain::Pca,
                                                    Chain::SkeletonPca, Chain::HogPca,        Chain::SiftKmean,
                                                    Chain::BgsubSiftKmean};

/// Pipe-separated filter list, e.g. "bgsub|downsize".
inline std::string chain_name(Chain c) {
    switch (c) {
        case Chain::Downsize: return "downsize";
        case Chain::BgsubDownsize: return "bgsub|downsize";
        case Chain::Pca: return "pca";
        case Chain::SkeletonPca: return "skeleton|pca";
        case Chain::HogPca: return "hog|pca";
        case Chain::SiftKmean: return "sift_kmean";
        case Chain::BgsubSiftKmean: return "bgsub|sift_kmean";
    }
    return "?";
}

/// File-name form, e.g. "bgsub-downsize".
inline std::string chain_slug(Chain c) {
    std::string s = chain_name(c);
    for (char& ch : s)
        if (ch == '|' || ch == '_') ch = '-';
    return s;
}

/// Table label, e.g. "BGSub|SIFT|KMean".
inline std::string chain_title(Chain c) {
    switch (c) {
        case Chain::Downsize: return "Downsize";
        case Chain::BgsubDownsize: return "BGSub|Downsize";
        case Chain::Pca: return "PCA";
        case Chain::SkeletonPca: return "Skeleton|PCA";
        case Chain::HogPca: return "HOG|PCA";
        case Chain::SiftKmean: return "SIFT|KMean";
        case Chain::BgsubSiftKmean: return "BGSub|SIFT|KMean";
    }
    return "?";
}

/// Accepts the pipe form, the slug form or the filter list with ',' separators.
inline Chain parse_chain(std::string s) {
    for (char& ch : s)
        if (ch == ',' || ch == '-') ch = '|';
    if (s == "sift|kmean") s = "sift_kmean";
    if (s == "bgsub|sift|kmean") s = "bgsub|sift_kmean";
    for (Chain c : kAllChains)
        if (chain_name(c) == s) return c;
    throw InvalidArgument("unsupported filter chain '" + s +
                          "' (expected one of downsize, bgsub|downsize, pca, skeleton|pca, hog|pca, sift_kmean, "
                          "bgsub|sift_kmean)");
}

inline bool uses_bgsub(Chain c) { return c == Chain::BgsubDownsize || c == Chain::BgsubSiftKmean; }
inline bool uses_sift(Chain c) { return c == Chain::SiftKmean || c == Chain::BgsubSiftKmean; }
inline bool uses_pca(Chain c) { return c == Chain::Pca || c == Chain::SkeletonPca || c == Chain::HogPca; }

inline constexpr double kDownsizeFraction = 0.2;  // 156 -> 31
inline constexpr double kPcaInputFraction = 0.5;  // 156 -> 78

// ---------------------------------------------------------------------------
// Per-clip extraction

/// Output of the unsupervised, per-clip part of a chain: a dense row, or the
/// clip's SIFT descriptors (one row per keypoint) for codebook chains.
struct ClipFeatures {
    std::vector<float> dense;
    FeatureMatrix descriptors;
};

inline std::vector<float> flatten(const GrayImage& g) { return g.data; }

/// 156x156 analysis image of the mid frame.
inline GrayImage mid_analysis_image(const scene::ClipSource& src, const scene::ManifestEntry& e) {
    return imgproc::analysis_crop(to_float(src.mid_frame(e)));
}

/// 156x156 analysis image of the background-subtracted mid frame.
inline GrayImage bgsub_analysis_image(const scene::ClipSource& src, const scene::ManifestEntry& e) {
    const int start = features::bgsub_window_start(e.request.frame_count);
    const auto raw = src.frames(e, start, features::kBgsubWindow);
    std::vector<RgbImage> frames;
    frames.reserve(raw.size());
    for (const auto& f : raw) frames.push_back(to_float(f));
    features::BgsubParams p;
    p.seed = e.request.seed;
    return imgproc::analysis_crop(features::bg_subtract(frames, p));
}

/// Extraction stage of `chain` from a 156x156 analysis image.
inline ClipFeatures extract_from_image(Chain chain, const GrayImage& img) {
    ClipFeatures out;
    switch (chain) {
        case Chain::Downsize:
        case Chain::BgsubDownsize: out.dense = flatten(imgproc::scale(img, kDownsizeFraction)); break;
        case Chain::Pca: out.dense = flatten(imgproc::scale(img, kPcaInputFraction)); break;
        case Chain::SkeletonPca:
            out.dense = flatten(imgproc::scale(features::skeletonize(img), kPcaInputFraction));
            break;
        case Chain::HogPca:
            out.dense = features::hog(imgproc::center_crop(img, features::kHogCropSize, features::kHogCropSize));
            break;
        case Chain::SiftKmean:
        case Chain::BgsubSiftKmean: out.descriptors = features::descriptor_matrix(features::sift(img)); break;
    }
    return out;
}

inline ClipFeatures extract_clip(Chain chain, const scene::ClipSource& src, const scene::ManifestEntry& e) {
    return extract_from_image(chain, uses_bgsub(chain) ? bgsub_analysis_image(src, e) : mid_analysis_image(src, e));
}

/// Extraction results for every clip, in manifest order.
struct ExtractedSet {
    Chain chain = Chain::Downsize;
    FeatureMatrix dense;                      // dense chains
    std::vector<FeatureMatrix> descriptors;   // SIFT chains, one per clip
    std::size_t size() const { return uses_sift(chain) ? descriptors.size() : dense.rows; }
};

inline ExtractedSet extract_all(Chain chain, const scene::ClipSource& src,
                                const std::vector<scene::ManifestEntry>& entries, unsigned jobs) {
    std::vector<ClipFeatures> per(entries.size());
    parallel_for(entries.size(), jobs, [&](std::size_t i) {
        try {
            per[i] = extract_clip(chain, src, entries[i]);
        } catch (const std::exception& ex) {
            throw IoError("feature extraction failed for clip " + entries[i].clip_id + ": " + ex.what());
        }
    });
    ExtractedSet set;
    set.chain = chain;
    if (uses_sift(chain)) {
        for (auto& c : per) set.descriptors.push_back(std::move(c.descriptors));
    } else if (!per.empty()) {
        set.dense = FeatureMatrix(per.size(), per.front().dense.size());
        for (std::size_t i = 0; i < per.size(); ++i) {
            set.dense.set_row(i, per[i].dense);
            std::vector<float>().swap(per[i].dense);
        }
    }
    return set;
}

// ---------------------------------------------------------------------------
// Train-only fitting

struct FittedChain {
    Chain chain = Chain::Downsize;
    std::optional<features::PcaModel> pca;
    std::optional<features::Codebook> codebook;
    FeatureMatrix features;  // every clip, manifest order

    /// Checksum of the fitted state (0 for chains without one).
    std::uint64_t state_checksum() const {
        if (pca) return features::checksum(*pca);
        if (codebook) return features::checksum(*codebook);
        return 0;
    }
};

/// Number of PCA components kept: 256, or fewer when the train split is small.
inline int pca_components(std::size_t train_rows, std::size_t dims) {
    return static_cast<int>(std::min<std::size_t>({static_cast<std::size_t>(features::kDefaultPcaComponents),
                                                   train_rows, dims}));
}

/// Fits the chain's learned stage on `train` rows (ascending manifest order)
/// and transforms every row.
inline FittedChain fit_chain(const ExtractedSet& set, const std::vector<std::size_t>& train, std::uint64_t seed,
                             int codebook_size = features::kDefaultCodebookSize) {
    SYNTHACTION_REQUIRE(!train.empty(), "fit_chain: empty training split");
    SYNTHACTION_REQUIRE(std::is_sorted(train.begin(), train.end()), "fit_chain: training rows must be ascending");
    FittedChain fc;
    fc.chain = set.chain;
    if (uses_sift(set.chain)) {
        std::size_t total = 0;
        for (std::size_t i : train) total += set.descriptors[i].rows;
        FeatureMatrix pool(total, features::kSiftDescriptorLength);
        std::size_t at = 0;
        for (std::size_t i : train) {
            const auto& d = set.descriptors[i];
            std::copy(d.data.begin(), d.data.end(), pool.row(at));
            at += d.rows;
        }
        SYNTHACTION_REQUIRE(pool.rows >= static_cast<std::size_t>(codebook_size),
                            "fit_chain: fewer training descriptors than codebook entries");
        fc.codebook = features::kmeans_fit(pool, codebook_size, derive_seed(seed, {0xC0DE}));
        fc.features = FeatureMatrix(set.descriptors.size(), static_cast<std::size_t>(codebook_size));
        for (std::size_t i = 0; i < set.descriptors.size(); ++i)
            fc.features.set_row(i, features::bow_encode(*fc.codebook, set.descriptors[i]));
        return fc;
    }
    if (uses_pca(set.chain)) {
        const FeatureMatrix tr = set.dense.select_rows(train);
        fc.pca = features::pca_fit(tr, pca_components(tr.rows, tr.cols));
        fc.features = features::pca_project(*fc.pca, set.dense);
        return fc;
    }
    fc.features = set.dense;
    return fc;
}

}  // namespace synthaction::eval
