#pragma once

// Scale-invariant feature transform: DoG keypoint detection, orientation
// assignment and 4x4x8 gradient descriptors.
//
// Images are single channel in [0, 1]; coordinates are pixel centres with y
// pointing down, and orientations are measured from +x towards +y.

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "synthaction/common.hpp"
#include "synthaction/image.hpp"

namespace synthaction::features {

inline constexpr int kSiftDescriptorLength = 128;

struct SiftParams {
    double sigma = 1.6;
    int scales_per_octave = 3;
    double contrast_threshold = 0.03;
    double edge_ratio = 10.0;
    double assumed_blur = 0.5;
    bool upsample = true;  // start the pyramid at twice the input resolution
    int min_octave_size = 16;
    int border = 5;
    int max_refine_steps = 5;
    double peak_ratio = 0.8;
    double descriptor_clip = 0.2;
};

struct SiftKeypoint {
    double x = 0, y = 0;      // input-image pixels
    double scale = 0;         // sigma in input-image pixels
    double orientation = 0;   // degrees in [0, 360)
    double response = 0;      // |DoG| at the refined extremum
    int octave = 0;
    std::array<float, kSiftDescriptorLength> descriptor{};
};

namespace detail {

using Plane = GrayImage;

inline std::vector<float> gaussian_kernel(double sigma) {
    const int r = std::max(1, static_cast<int>(std::ceil(4.0 * sigma)));
    std::vector<float> k(static_cast<std::size_t>(2 * r + 1));
    double sum = 0;
    for (int i = -r; i <= r; ++i) sum += k[static_cast<std::size_t>(i + r)] = static_cast<float>(std::exp(-0.5 * i * i / (sigma * sigma)));
    for (auto& v : k) v = static_cast<float>(v / sum);
    return k;
}

// Separable blur with replicated edges.
inline Plane gaussian_blur(const Plane& src, double sigma) {
    if (sigma <= 0) return src;
    const auto k = gaussian_kernel(sigma);
    const int r = static_cast<int>(k.size() / 2), w = src.width, h = src.height;
    Plane tmp(w, h), out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int i = -r; i <= r; ++i) s += k[static_cast<std::size_t>(i + r)] * src.at(std::clamp(x + i, 0, w - 1), y);
            tmp.at(x, y) = static_cast<float>(s);
        }
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            double s = 0;
            for (int i = -r; i <= r; ++i) s += k[static_cast<std::size_t>(i + r)] * tmp.at(x, std::clamp(y + i, 0, h - 1));
            out.at(x, y) = static_cast<float>(s);
        }
    return out;
}

// Bilinear 2x enlargement; output pixel centres map to (x - 0.5) / 2.
inline Plane double_size(const Plane& src) {
    Plane out(src.width * 2, src.height * 2);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) {
            const double sx = std::clamp((x + 0.5) / 2.0 - 0.5, 0.0, src.width - 1.0);
            const double sy = std::clamp((y + 0.5) / 2.0 - 0.5, 0.0, src.height - 1.0);
            const int x0 = static_cast<int>(sx), y0 = static_cast<int>(sy);
            const int x1 = std::min(x0 + 1, src.width - 1), y1 = std::min(y0 + 1, src.height - 1);
            const double fx = sx - x0, fy = sy - y0;
            const double top = src.at(x0, y0) + fx * (src.at(x1, y0) - src.at(x0, y0));
            const double bot = src.at(x0, y1) + fx * (src.at(x1, y1) - src.at(x0, y1));
            out.at(x, y) = static_cast<float>(top + fy * (bot - top));
        }
    return out;
}

inline Plane halve(const Plane& src) {
    Plane out(src.width / 2, src.height / 2);
    for (int y = 0; y < out.height; ++y)
        for (int x = 0; x < out.width; ++x) out.at(x, y) = src.at(2 * x, 2 * y);
    return out;
}

struct ScaleSpace {
    std::vector<std::vector<Plane>> gauss;  // [octave][scales + 3]
    std::vector<std::vector<Plane>> dog;    // [octave][scales + 2]
};

inline ScaleSpace build_scale_space(const GrayImage& img, const SiftParams& p) {
    const int s = p.scales_per_octave;
    std::vector<double> inc(static_cast<std::size_t>(s + 3));
    // incremental blur between successive levels of an octave
    const double k = std::pow(2.0, 1.0 / s);
    const double blur = p.upsample ? 2.0 * p.assumed_blur : p.assumed_blur;
    inc[0] = std::sqrt(std::max(p.sigma * p.sigma - blur * blur, 0.01));
    for (int i = 1; i < s + 3; ++i) {
        const double prev = std::pow(k, i - 1) * p.sigma, cur = prev * k;
        inc[static_cast<std::size_t>(i)] = std::sqrt(cur * cur - prev * prev);
    }
    ScaleSpace ss;
    Plane base = gaussian_blur(p.upsample ? double_size(img) : img, inc[0]);
    while (std::min(base.width, base.height) >= p.min_octave_size) {
        std::vector<Plane> g{base};
        for (int i = 1; i < s + 3; ++i) g.push_back(gaussian_blur(g.back(), inc[static_cast<std::size_t>(i)]));
        std::vector<Plane> d;
        for (int i = 0; i + 1 < s + 3; ++i) {
            Plane diff(g[0].width, g[0].height);
            for (std::size_t j = 0; j < diff.data.size(); ++j)
                diff.data[j] = g[static_cast<std::size_t>(i + 1)].data[j] - g[static_cast<std::size_t>(i)].data[j];
            d.push_back(std::move(diff));
        }
        base = halve(g[static_cast<std::size_t>(s)]);
        ss.gauss.push_back(std::move(g));
        ss.dog.push_back(std::move(d));
    }
    return ss;
}

inline bool is_extremum(const std::vector<Plane>& d, int layer, int x, int y) {
    const float v = d[static_cast<std::size_t>(layer)].at(x, y);
    const bool want_max = v > 0;
    for (int l = layer - 1; l <= layer + 1; ++l)
        for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
                if (l == layer && dx == 0 && dy == 0) continue;
                const float n = d[static_cast<std::size_t>(l)].at(x + dx, y + dy);
                if (want_max ? n > v : n < v) return false;
            }
    return true;
}

struct Refined {
    int x, y, layer;
    double ox, oy, os, value;
};

// Quadratic fit around a DoG extremum; false if rejected.
inline bool refine(const std::vector<Plane>& d, const SiftParams& p, int x, int y, int layer, Refined& out) {
    const int w = d[0].width, h = d[0].height, s = p.scales_per_octave;
    double ox = 0, oy = 0, os = 0;
    double g[3] = {0, 0, 0};
    bool converged = false;
    for (int it = 0; it < p.max_refine_steps; ++it) {
        const Plane& prev = d[static_cast<std::size_t>(layer - 1)];
        const Plane& cur = d[static_cast<std::size_t>(layer)];
        const Plane& next = d[static_cast<std::size_t>(layer + 1)];
        const double v2 = 2.0 * cur.at(x, y);
        g[0] = 0.5 * (cur.at(x + 1, y) - cur.at(x - 1, y));
        g[1] = 0.5 * (cur.at(x, y + 1) - cur.at(x, y - 1));
        g[2] = 0.5 * (next.at(x, y) - prev.at(x, y));
        const double dxx = cur.at(x + 1, y) + cur.at(x - 1, y) - v2;
        const double dyy = cur.at(x, y + 1) + cur.at(x, y - 1) - v2;
        const double dss = next.at(x, y) + prev.at(x, y) - v2;
        const double dxy = 0.25 * (cur.at(x + 1, y + 1) - cur.at(x - 1, y + 1) - cur.at(x + 1, y - 1) + cur.at(x - 1, y - 1));
        const double dxs = 0.25 * (next.at(x + 1, y) - next.at(x - 1, y) - prev.at(x + 1, y) + prev.at(x - 1, y));
        const double dys = 0.25 * (next.at(x, y + 1) - next.at(x, y - 1) - prev.at(x, y + 1) + prev.at(x, y - 1));
        // solve H * o = -g by Cramer's rule
        const double H[3][3] = {{dxx, dxy, dxs}, {dxy, dyy, dys}, {dxs, dys, dss}};
        const double det = H[0][0] * (H[1][1] * H[2][2] - H[1][2] * H[2][1]) -
                           H[0][1] * (H[1][0] * H[2][2] - H[1][2] * H[2][0]) +
                           H[0][2] * (H[1][0] * H[2][1] - H[1][1] * H[2][0]);
        if (std::abs(det) < 1e-18) return false;
        auto solve = [&](int col) {
            double m[3][3];
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) m[r][c] = c == col ? -g[r] : H[r][c];
            return (m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                    m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])) /
                   det;
        };
        ox = solve(0);
        oy = solve(1);
        os = solve(2);
        if (std::abs(ox) < 0.5 && std::abs(oy) < 0.5 && std::abs(os) < 0.5) {
            converged = true;
            break;
        }
        if (std::abs(ox) > 1e6 || std::abs(oy) > 1e6 || std::abs(os) > 1e6) return false;
        x += static_cast<int>(std::lround(ox));
        y += static_cast<int>(std::lround(oy));
        layer += static_cast<int>(std::lround(os));
        if (layer < 1 || layer > s || x < p.border || x >= w - p.border || y < p.border || y >= h - p.border)
            return false;
    }
    if (!converged) return false;
    const Plane& cur = d[static_cast<std::size_t>(layer)];
    const double value = cur.at(x, y) + 0.5 * (g[0] * ox + g[1] * oy + g[2] * os);
    if (std::abs(value) < p.contrast_threshold) return false;
    // principal curvature ratio
    const double v2 = 2.0 * cur.at(x, y);
    const double dxx = cur.at(x + 1, y) + cur.at(x - 1, y) - v2;
    const double dyy = cur.at(x, y + 1) + cur.at(x, y - 1) - v2;
    const double dxy = 0.25 * (cur.at(x + 1, y + 1) - cur.at(x - 1, y + 1) - cur.at(x + 1, y - 1) + cur.at(x - 1, y - 1));
    const double tr = dxx + dyy, det = dxx * dyy - dxy * dxy;
    const double r = p.edge_ratio;
    if (det <= 0 || tr * tr * r >= (r + 1) * (r + 1) * det) return false;
    out = {x, y, layer, ox, oy, os, value};
    return true;
}

inline void gradient(const Plane& g, int x, int y, double& mag, double& ang) {
    const double dx = g.at(x + 1, y) - g.at(x - 1, y);
    const double dy = g.at(x, y + 1) - g.at(x, y - 1);
    mag = std::sqrt(dx * dx + dy * dy);
    ang = std::atan2(dy, dx) * (180.0 / 3.14159265358979323846);
    if (ang < 0) ang += 360.0;
}

// Dominant orientations (degrees) from a 36-bin histogram around (x, y).
inline std::vector<double> orientations(const Plane& g, int x, int y, double scale_octave, const SiftParams& p) {
    constexpr int bins = 36;
    const double sigma_w = 1.5 * scale_octave;
    const int radius = static_cast<int>(std::lround(3.0 * sigma_w));
    std::array<double, bins> hist{};
    for (int dy = -radius; dy <= radius; ++dy)
        for (int dx = -radius; dx <= radius; ++dx) {
            const int px = x + dx, py = y + dy;
            if (px <= 0 || py <= 0 || px >= g.width - 1 || py >= g.height - 1) continue;
            double mag, ang;
            gradient(g, px, py, mag, ang);
            const double wgt = std::exp(-(dx * dx + dy * dy) / (2.0 * sigma_w * sigma_w));
            int b = static_cast<int>(std::lround(ang * bins / 360.0));
            b = ((b % bins) + bins) % bins;
            hist[static_cast<std::size_t>(b)] += wgt * mag;
        }
    std::array<double, bins> smooth{};
    for (int i = 0; i < bins; ++i) {
        auto h = [&](int j) { return hist[static_cast<std::size_t>(((i + j) % bins + bins) % bins)]; };
        smooth[static_cast<std::size_t>(i)] = (h(-2) + h(2)) * (1.0 / 16) + (h(-1) + h(1)) * (4.0 / 16) + h(0) * (6.0 / 16);
    }
    const double peak = *std::max_element(smooth.begin(), smooth.end());
    std::vector<double> out;
    if (peak <= 0) return out;
    for (int i = 0; i < bins; ++i) {
        const double l = smooth[static_cast<std::size_t>((i + bins - 1) % bins)];
        const double c = smooth[static_cast<std::size_t>(i)];
        const double r = smooth[static_cast<std::size_t>((i + 1) % bins)];
        if (c > l && c > r && c >= p.peak_ratio * peak) {
            double b = i + 0.5 * (l - r) / (l - 2 * c + r);
            b = b < 0 ? b + bins : b >= bins ? b - bins : b;
            out.push_back(b * 360.0 / bins);
        }
    }
    return out;
}

// 4x4 spatial x 8 orientation histogram, trilinear interpolation.
inline bool descriptor(const Plane& g, double fx, double fy, double scale_octave, double ori_deg,
                       const SiftParams& p, std::array<float, kSiftDescriptorLength>& out) {
    constexpr int d = 4, n = 8;
    const double pi = 3.14159265358979323846;
    const double hist_width = 3.0 * scale_octave;
    int radius = static_cast<int>(std::lround(hist_width * std::sqrt(2.0) * (d + 1) * 0.5));
    radius = std::min(radius, static_cast<int>(std::sqrt(double(g.width) * g.width + double(g.height) * g.height)));
    const double c = std::cos(ori_deg * pi / 180.0), s = std::sin(ori_deg * pi / 180.0);
    const int x = static_cast<int>(std::lround(fx)), y = static_cast<int>(std::lround(fy));
    std::array<double, (d + 2) * (d + 2) * (n + 2)> hist{};
    auto idx = [&](int r, int cc, int o) { return (static_cast<std::size_t>(r) * (d + 2) + cc) * (n + 2) + o; };
    for (int i = -radius; i <= radius; ++i)
        for (int j = -radius; j <= radius; ++j) {
            // offset in the keypoint frame: along the orientation and perpendicular
            const double c_rot = (j * c + i * s) / hist_width;
            const double r_rot = (-j * s + i * c) / hist_width;
            const double rbin = r_rot + d / 2.0 - 0.5, cbin = c_rot + d / 2.0 - 0.5;
            if (rbin <= -1 || rbin >= d || cbin <= -1 || cbin >= d) continue;
            const int px = x + j, py = y + i;
            if (px <= 0 || py <= 0 || px >= g.width - 1 || py >= g.height - 1) continue;
            double mag, ang;
            gradient(g, px, py, mag, ang);
            double obin = (ang - ori_deg) * n / 360.0;
            obin = std::fmod(obin, static_cast<double>(n));
            if (obin < 0) obin += n;
            const double wgt = mag * std::exp(-(c_rot * c_rot + r_rot * r_rot) / (2.0 * (0.5 * d) * (0.5 * d)));
            const int r0 = static_cast<int>(std::floor(rbin)), c0 = static_cast<int>(std::floor(cbin));
            int o0 = static_cast<int>(std::floor(obin));
            const double dr = rbin - r0, dc = cbin - c0, dob = obin - o0;
            o0 %= n;
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    for (int e = 0; e < 2; ++e) {
                        const double v = wgt * (a ? dr : 1 - dr) * (b ? dc : 1 - dc) * (e ? dob : 1 - dob);
                        hist[idx(r0 + 1 + a, c0 + 1 + b, o0 + e)] += v;
                    }
        }
    std::array<double, kSiftDescriptorLength> v{};
    for (int r = 0; r < d; ++r)
        for (int cc = 0; cc < d; ++cc) {
            // fold the wrap-around orientation bin
            hist[idx(r + 1, cc + 1, 0)] += hist[idx(r + 1, cc + 1, n)];
            for (int o = 0; o < n; ++o)
                v[static_cast<std::size_t>((r * d + cc) * n + o)] = hist[idx(r + 1, cc + 1, o)];
        }
    double norm = 0;
    for (double a : v) norm += a * a;
    norm = std::sqrt(norm);
    if (norm <= 1e-12) return false;
    const double thr = p.descriptor_clip * norm;
    norm = 0;
    for (double& a : v) {
        a = std::min(a, thr);
        norm += a * a;
    }
    norm = std::sqrt(norm);
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i] / norm);
    return true;
}

}  // namespace detail

inline std::vector<SiftKeypoint> sift(const GrayImage& img, const SiftParams& p = {}) {
    SYNTHACTION_REQUIRE(std::min(img.width, img.height) >= 32, "sift: image must be at least 32x32");
    const auto ss = detail::build_scale_space(img, p);
    const int s = p.scales_per_octave;
    const float prelim = static_cast<float>(0.5 * p.contrast_threshold / s);
    std::vector<SiftKeypoint> out;
    for (std::size_t o = 0; o < ss.dog.size(); ++o) {
        const auto& d = ss.dog[o];
        const int w = d[0].width, h = d[0].height;
        // input pixels per octave pixel
        const double octave_scale = std::ldexp(1.0, static_cast<int>(o)) * (p.upsample ? 0.5 : 1.0);
        for (int layer = 1; layer <= s; ++layer)
            for (int y = p.border; y < h - p.border; ++y)
                for (int x = p.border; x < w - p.border; ++x) {
                    const float v = d[static_cast<std::size_t>(layer)].at(x, y);
                    if (std::abs(v) <= prelim || !detail::is_extremum(d, layer, x, y)) continue;
                    detail::Refined r;
                    if (!detail::refine(d, p, x, y, layer, r)) continue;
                    const double scale_octave = p.sigma * std::pow(2.0, (r.layer + r.os) / s);
                    const double fx = r.x + r.ox, fy = r.y + r.oy;
                    const auto& g = ss.gauss[o][static_cast<std::size_t>(r.layer)];
                    for (double ori : detail::orientations(g, r.x, r.y, scale_octave, p)) {
                        SiftKeypoint kp;
                        // pixel centres: octave pixel i covers input [i, i+1) * octave_scale
                        kp.x = (fx + 0.5) * octave_scale - 0.5;
                        kp.y = (fy + 0.5) * octave_scale - 0.5;
                        kp.scale = scale_octave * octave_scale;
                        kp.orientation = ori;
                        kp.response = std::abs(r.value);
                        kp.octave = static_cast<int>(o);
                        if (detail::descriptor(g, fx, fy, scale_octave, ori, p, kp.descriptor)) out.push_back(kp);
                    }
                }
    }
    return out;
}

}  // namespace synthaction::features
