#pragma once

// K-nearest-neighbour background subtraction over a short frame window.

#include <algorithm>
#include <cmath>
#include <vector>

#include "synthaction/common.hpp"
#include "synthaction/image.hpp"
#include "synthaction/imgproc.hpp"
#include "synthaction/rng.hpp"

namespace synthaction::features {

inline constexpr int kBgsubWindow = 6;

struct BgsubParams {
    int history = 30;        // samples kept per pixel
    int knn = 2;             // matches needed to call a pixel background
    double threshold = 0.16; // L2 RGB distance, channels in [0, 1]
    std::uint64_t seed = 0;  // replacement choice once the history is full
};

/// Per-pixel sample model. Each frame is classified against the samples seen
/// so far and then added to them.
class KnnBackground {
public:
    KnnBackground(int width, int height, const BgsubParams& p)
        : w_(width), h_(height), p_(p), rng_(p.seed, {0xB65Bu}),
          samples_(static_cast<std::size_t>(width) * height * p.history * 3, 0.f),
          count_(static_cast<std::size_t>(width) * height, 0) {
        SYNTHACTION_REQUIRE(p.history >= 1 && p.knn >= 1 && p.threshold >= 0, "bgsub: bad parameters");
    }

    /// Returns the foreground mask (1 = foreground) of `frame`, then learns it.
    std::vector<std::uint8_t> apply(const RgbImage& frame) {
        SYNTHACTION_REQUIRE(frame.width == w_ && frame.height == h_, "bgsub: frame size mismatch");
        const double t2 = p_.threshold * p_.threshold;
        std::vector<std::uint8_t> mask(count_.size());
        for (std::size_t i = 0; i < count_.size(); ++i) {
            const float* px = &frame.data[i * 3];
            const float* s = &samples_[i * static_cast<std::size_t>(p_.history) * 3];
            int matches = 0;
            for (int k = 0; k < count_[i] && matches < p_.knn; ++k) {
                const double dr = px[0] - s[k * 3], dg = px[1] - s[k * 3 + 1], db = px[2] - s[k * 3 + 2];
                if (dr * dr + dg * dg + db * db <= t2) ++matches;
            }
            mask[i] = matches >= p_.knn ? 0 : 1;
            int slot = count_[i];
            if (slot < p_.history) {
                ++count_[i];
            } else {
                slot = static_cast<int>(rng_.below(static_cast<std::uint64_t>(p_.history)));
            }
            std::copy(px, px + 3, &samples_[(i * static_cast<std::size_t>(p_.history) + static_cast<std::size_t>(slot)) * 3]);
        }
        return mask;
    }

private:
    int w_, h_;
    BgsubParams p_;
    Rng rng_;
    std::vector<float> samples_;
    std::vector<int> count_;
};

/// Feeds `frames` in order and returns the last frame's luminance with
/// background pixels zeroed.
inline GrayImage bg_subtract(const std::vector<RgbImage>& frames, const BgsubParams& p = {}) {
    SYNTHACTION_REQUIRE(frames.size() >= static_cast<std::size_t>(kBgsubWindow),
                        "bg_subtract: need at least 6 frames");
    const auto& last = frames.back();
    KnnBackground model(last.width, last.height, p);
    std::vector<std::uint8_t> mask;
    for (const auto& f : frames) mask = model.apply(f);
    GrayImage out(last.width, last.height);
    for (std::size_t i = 0; i < mask.size(); ++i)
        if (mask[i]) {
            const float* px = &last.data[i * 3];
            out.data[i] = std::clamp(imgproc::luma(px[0], px[1], px[2]), 0.f, 1.f);
        }
    return out;
}

/// First frame of the 6-frame background-subtraction window. The window ends
/// at the mid frame; clips shorter than 10 frames use their first 6 frames.
inline int bgsub_window_start(int frame_count) {
    SYNTHACTION_REQUIRE(frame_count >= kBgsubWindow, "bg_subtract: clip shorter than 6 frames");
    const int mid = static_cast<int>(imgproc::mid_frame_index(static_cast<std::size_t>(frame_count)));
    return std::max(0, mid - (kBgsubWindow - 1));
}

}  // namespace synthaction::features
