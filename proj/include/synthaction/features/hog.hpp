#pragma once

// Histogram of oriented gradients.
//
// Layout of the descriptor: blocks in row-major order, within a block its
// cells in row-major order, within a cell the orientation bins.

#include <algorithm>
#include <cmath>
#include <vector>

#include "synthaction/common.hpp"
#include "synthaction/image.hpp"

namespace synthaction::features {

struct HogParams {
    int orientations = 9;
    int cell_size = 2;         // pixels per cell side
    int block_size = 2;        // cells per block side
    double clip = 0.2;         // L2-Hys clip
    double epsilon = 1e-5;
};

inline constexpr int kHogCropSize = 100;

inline std::size_t hog_length(int width, int height, const HogParams& p = {}) {
    const int cx = width / p.cell_size, cy = height / p.cell_size;
    const int bx = cx - p.block_size + 1, by = cy - p.block_size + 1;
    if (bx <= 0 || by <= 0) return 0;
    return static_cast<std::size_t>(bx) * by * p.block_size * p.block_size * p.orientations;
}

/// Unsigned orientation in [0, 180) degrees of a gradient.
inline double unsigned_orientation(double gx, double gy) {
    double a = std::atan2(gy, gx) * (180.0 / 3.14159265358979323846);
    if (a < 0) a += 180.0;
    if (a >= 180.0) a -= 180.0;
    return a;
}

struct HogCells {
    int cells_x = 0, cells_y = 0, bins = 0;
    std::vector<double> hist;  // (cy, cx, bin)

    double at(int cx, int cy, int b) const {
        return hist[(static_cast<std::size_t>(cy) * cells_x + cx) * bins + b];
    }
};

/// Per-cell orientation histograms. Bin k is centred on k * 180/bins
/// degrees; each pixel splits its gradient magnitude between the two
/// nearest bin centres.
inline HogCells hog_cells(const GrayImage& img, const HogParams& p = {}) {
    SYNTHACTION_REQUIRE(p.orientations >= 1 && p.cell_size >= 1 && p.block_size >= 1, "hog: bad parameters");
    SYNTHACTION_REQUIRE(img.width % p.cell_size == 0 && img.height % p.cell_size == 0,
                        "hog: image dimensions must be divisible by the cell size");
    SYNTHACTION_REQUIRE(img.width / p.cell_size >= p.block_size && img.height / p.cell_size >= p.block_size,
                        "hog: image smaller than one block");
    const int w = img.width, h = img.height;
    HogCells cells;
    cells.cells_x = w / p.cell_size;
    cells.cells_y = h / p.cell_size;
    cells.bins = p.orientations;
    cells.hist.assign(static_cast<std::size_t>(cells.cells_x) * cells.cells_y * p.orientations, 0.0);
    const double bin_width = 180.0 / p.orientations;
    auto px = [&](int x, int y) {
        x = std::clamp(x, 0, w - 1);
        y = std::clamp(y, 0, h - 1);
        return static_cast<double>(img.at(x, y));
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const double gx = px(x + 1, y) - px(x - 1, y);
            const double gy = px(x, y + 1) - px(x, y - 1);
            const double mag = std::sqrt(gx * gx + gy * gy);
            if (mag == 0) continue;
            const double pos = unsigned_orientation(gx, gy) / bin_width;
            const int b0 = static_cast<int>(std::floor(pos)) % p.orientations;
            const double frac = pos - std::floor(pos);
            const int b1 = (b0 + 1) % p.orientations;
            double* cell = &cells.hist[(static_cast<std::size_t>(y / p.cell_size) * cells.cells_x + x / p.cell_size) *
                                       p.orientations];
            cell[b0] += (1.0 - frac) * mag;
            cell[b1] += frac * mag;
        }
    return cells;
}

/// Block-normalized HOG descriptor.
inline std::vector<float> hog(const GrayImage& img, const HogParams& p = {}) {
    const HogCells cells = hog_cells(img, p);
    const int bx = cells.cells_x - p.block_size + 1, by = cells.cells_y - p.block_size + 1;
    const int block_len = p.block_size * p.block_size * p.orientations;
    std::vector<float> out;
    out.reserve(hog_length(img.width, img.height, p));
    std::vector<double> v(static_cast<std::size_t>(block_len));
    const double eps2 = p.epsilon * p.epsilon;
    for (int y = 0; y < by; ++y)
        for (int x = 0; x < bx; ++x) {
            std::size_t k = 0;
            for (int cy = 0; cy < p.block_size; ++cy)
                for (int cx = 0; cx < p.block_size; ++cx)
                    for (int b = 0; b < p.orientations; ++b) v[k++] = cells.at(x + cx, y + cy, b);
            double ss = 0;
            for (double a : v) ss += a * a;
            double s = 1.0 / std::sqrt(ss + eps2);
            ss = 0;
            for (double& a : v) {
                a = std::min(a * s, p.clip);
                ss += a * a;
            }
            s = 1.0 / std::sqrt(ss + eps2);
            for (double a : v) out.push_back(static_cast<float>(a * s));
        }
    return out;
}

/// Renders a HOG-space vector (e.g. a descriptor or a PCA component) as an
/// image: every block's values become a tile of (block*block) x orientations
/// reshaped to a near-square rectangle, tiles laid out on the block grid.
inline GrayImage hog_tile_image(const std::vector<double>& v, int width, int height, const HogParams& p = {}) {
    const int bx = width / p.cell_size - p.block_size + 1, by = height / p.cell_size - p.block_size + 1;
    const int block_len = p.block_size * p.block_size * p.orientations;
    SYNTHACTION_REQUIRE(v.size() == static_cast<std::size_t>(bx) * by * block_len,
                        "hog_tile_image: vector length does not match the HOG layout");
    int tw = static_cast<int>(std::sqrt(static_cast<double>(block_len)));
    while (block_len % tw) --tw;
    const int th = block_len / tw;
    GrayImage out(bx * tw, by * th);
    double lo = *std::min_element(v.begin(), v.end()), hi = *std::max_element(v.begin(), v.end());
    const double span = hi > lo ? hi - lo : 1.0;
    for (int y = 0; y < by; ++y)
        for (int x = 0; x < bx; ++x)
            for (int i = 0; i < block_len; ++i) {
                const double val = v[(static_cast<std::size_t>(y) * bx + x) * block_len + i];
                out.at(x * tw + i % tw, y * th + i / tw) = static_cast<float>((val - lo) / span);
            }
    return out;
}

}  // namespace synthaction::features
