#pragma once

// Zhang-Suen thinning.

#include <cstdint>
#include <vector>

#include "synthaction/image.hpp"

namespace synthaction::features {

inline constexpr float kSkeletonThreshold = 0.5f;

namespace detail {

// Neighbours P2..P9, clockwise from north; pixels outside the image are 0.
inline void neighbours(const std::vector<std::uint8_t>& b, int w, int h, int x, int y, int p[8]) {
    static constexpr int dx[8] = {0, 1, 1, 1, 0, -1, -1, -1};
    static constexpr int dy[8] = {-1, -1, 0, 1, 1, 1, 0, -1};
    for (int i = 0; i < 8; ++i) {
        const int nx = x + dx[i], ny = y + dy[i];
        p[i] = (nx >= 0 && ny >= 0 && nx < w && ny < h) ? b[static_cast<std::size_t>(ny) * w + nx] : 0;
    }
}

// One sub-iteration; returns the number of deleted pixels.
inline std::size_t zhang_suen_pass(std::vector<std::uint8_t>& b, int w, int h, int step) {
    std::vector<std::size_t> del;
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            if (!b[static_cast<std::size_t>(y) * w + x]) continue;
            int p[8];
            neighbours(b, w, h, x, y, p);
            int count = 0, transitions = 0;
            for (int i = 0; i < 8; ++i) {
                count += p[i];
                transitions += (p[i] == 0 && p[(i + 1) % 8] == 1);
            }
            if (count < 2 || count > 6 || transitions != 1) continue;
            // p[0]=P2 (N), p[2]=P4 (E), p[4]=P6 (S), p[6]=P8 (W)
            const bool ok = step == 0 ? (p[0] * p[2] * p[4] == 0 && p[2] * p[4] * p[6] == 0)
                                      : (p[0] * p[2] * p[6] == 0 && p[0] * p[4] * p[6] == 0);
            if (ok) del.push_back(static_cast<std::size_t>(y) * w + x);
        }
    for (auto i : del) b[i] = 0;
    return del.size();
}

}  // namespace detail

/// Binarizes at `threshold` (>=) and thins until a full pass deletes nothing.
/// Output pixels are 0 or 1.
inline GrayImage skeletonize(const GrayImage& img, float threshold = kSkeletonThreshold) {
    const int w = img.width, h = img.height;
    std::vector<std::uint8_t> b(img.data.size());
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = img.data[i] >= threshold ? 1 : 0;
    for (;;) {
        const std::size_t a = detail::zhang_suen_pass(b, w, h, 0);
        const std::size_t c = detail::zhang_suen_pass(b, w, h, 1);
        if (a + c == 0) break;
    }
    GrayImage out(w, h);
    for (std::size_t i = 0; i < b.size(); ++i) out.data[i] = b[i];
    return out;
}

/// Number of 8-connected foreground components (pixels >= 0.5).
inline int count_components8(const GrayImage& img) {
    const int w = img.width, h = img.height;
    std::vector<int> seen(img.data.size(), 0);
    std::vector<std::size_t> stack;
    int n = 0;
    for (std::size_t s = 0; s < img.data.size(); ++s) {
        if (img.data[s] < 0.5f || seen[s]) continue;
        ++n;
        seen[s] = 1;
        stack.push_back(s);
        while (!stack.empty()) {
            const std::size_t i = stack.back();
            stack.pop_back();
            const int x = static_cast<int>(i % static_cast<std::size_t>(w)), y = static_cast<int>(i / static_cast<std::size_t>(w));
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int nx = x + dx, ny = y + dy;
                    if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
                    const std::size_t j = static_cast<std::size_t>(ny) * w + nx;
                    if (img.data[j] >= 0.5f && !seen[j]) {
                        seen[j] = 1;
                        stack.push_back(j);
                    }
                }
        }
    }
    return n;
}

}  // namespace synthaction::features
