#pragma once

// Frame selection and pixel-level preprocessing.

#include <cmath>
#include <vector>

#include "synthaction/common.hpp"
#include "synthaction/image.hpp"

namespace synthaction::imgproc {

/// Index of the representative frame: floor(count / 2).
inline std::size_t mid_frame_index(std::size_t frame_count) { return frame_count / 2; }

template <class Image>
const Image& extract_mid_frame(const std::vector<Image>& frames) {
    SYNTHACTION_REQUIRE(!frames.empty(), "extract_mid_frame: empty clip");
    return frames[mid_frame_index(frames.size())];
}

/// Target size for scaling a dimension by `fraction`, floored, at least 1.
inline int scaled_dim(int dim, double fraction) {
    // 1e-9 guards against products such as 0.2*155.0 landing just below an integer.
    return std::max(1, static_cast<int>(std::floor(dim * fraction + 1e-9)));
}

namespace detail {

struct Taps {
    int i0, i1;
    float t;
};

inline std::vector<Taps> bilinear_taps(int in, int out) {
    std::vector<Taps> taps(static_cast<std::size_t>(out));
    const double ratio = static_cast<double>(in) / out;
    for (int o = 0; o < out; ++o) {
        double src = (o + 0.5) * ratio - 0.5;
        src = std::clamp(src, 0.0, static_cast<double>(in - 1));
        const int i0 = static_cast<int>(std::floor(src));
        const int i1 = std::min(i0 + 1, in - 1);
        taps[static_cast<std::size_t>(o)] = {i0, i1, static_cast<float>(src - i0)};
    }
    return taps;
}

template <int Channels>
void resize_plane(const float* src, int w, int h, float* dst, int nw, int nh) {
    const auto xt = bilinear_taps(w, nw);
    const auto yt = bilinear_taps(h, nh);
    for (int y = 0; y < nh; ++y) {
        const auto& ty = yt[static_cast<std::size_t>(y)];
        const float* r0 = src + static_cast<std::size_t>(ty.i0) * w * Channels;
        const float* r1 = src + static_cast<std::size_t>(ty.i1) * w * Channels;
        float* out = dst + static_cast<std::size_t>(y) * nw * Channels;
        for (int x = 0; x < nw; ++x) {
            const auto& tx = xt[static_cast<std::size_t>(x)];
            for (int c = 0; c < Channels; ++c) {
                const float a = r0[tx.i0 * Channels + c], b = r0[tx.i1 * Channels + c];
                const float d = r1[tx.i0 * Channels + c], e = r1[tx.i1 * Channels + c];
                // lerp form keeps constant inputs exactly constant
                const float top = a + tx.t * (b - a);
                const float bot = d + tx.t * (e - d);
                out[x * Channels + c] = top + ty.t * (bot - top);
            }
        }
    }
}

}  // namespace detail

/// Bilinear resize with edge clamping (pixel-center aligned).
inline GrayImage resize(const GrayImage& img, int new_w, int new_h) {
    SYNTHACTION_REQUIRE(new_w >= 1 && new_h >= 1, "resize: target dimensions must be >= 1");
    SYNTHACTION_REQUIRE(img.width >= 1 && img.height >= 1, "resize: empty source image");
    if (new_w == img.width && new_h == img.height) return img;
    GrayImage out(new_w, new_h);
    detail::resize_plane<1>(img.data.data(), img.width, img.height, out.data.data(), new_w, new_h);
    return out;
}

inline RgbImage resize(const RgbImage& img, int new_w, int new_h) {
    SYNTHACTION_REQUIRE(new_w >= 1 && new_h >= 1, "resize: target dimensions must be >= 1");
    SYNTHACTION_REQUIRE(img.width >= 1 && img.height >= 1, "resize: empty source image");
    if (new_w == img.width && new_h == img.height) return img;
    RgbImage out(new_w, new_h);
    detail::resize_plane<3>(img.data.data(), img.width, img.height, out.data.data(), new_w, new_h);
    return out;
}

inline GrayImage scale(const GrayImage& img, double fraction) {
    return resize(img, scaled_dim(img.width, fraction), scaled_dim(img.height, fraction));
}

/// ITU-R BT.601 luma.
inline float luma(float r, float g, float b) { return 0.299f * r + 0.587f * g + 0.114f * b; }

inline GrayImage to_grayscale(const RgbImage& img) {
    GrayImage out(img.width, img.height);
    for (std::size_t i = 0; i < out.data.size(); ++i) {
        const float* p = &img.data[i * 3];
        out.data[i] = std::clamp(luma(p[0], p[1], p[2]), 0.f, 1.f);
    }
    return out;
}

inline GrayImage crop(const GrayImage& img, int top, int bottom, int left, int right) {
    SYNTHACTION_REQUIRE(top >= 0 && bottom >= 0 && left >= 0 && right >= 0,
                        "crop: margins must be non-negative");
    SYNTHACTION_REQUIRE(top + bottom < img.height && left + right < img.width,
                        "crop: margins exceed image size");
    GrayImage out(img.width - left - right, img.height - top - bottom);
    for (int y = 0; y < out.height; ++y)
        std::copy_n(&img.data[static_cast<std::size_t>(y + top) * img.width + left], out.width,
                    &out.data[static_cast<std::size_t>(y) * out.width]);
    return out;
}

/// Symmetric crop to w x h around the image center.
inline GrayImage center_crop(const GrayImage& img, int w, int h) {
    SYNTHACTION_REQUIRE(w <= img.width && h <= img.height, "center_crop: target larger than image");
    const int left = (img.width - w) / 2;
    const int top = (img.height - h) / 2;
    return crop(img, top, img.height - h - top, left, img.width - w - left);
}

// The fixed analysis geometry applied to every extracted frame.
inline constexpr int kExtractSize = 256;
inline constexpr int kCropTop = 70, kCropBottom = 30, kCropLeft = 50, kCropRight = 50;

/// RGB frame -> 256x256 -> grayscale -> 156x156 analysis crop.
inline GrayImage analysis_crop(const RgbImage& frame) {
    return crop(to_grayscale(resize(frame, kExtractSize, kExtractSize)), kCropTop, kCropBottom,
                kCropLeft, kCropRight);
}

/// Same geometry for an already-grayscale full frame (e.g. a background-subtracted mask).
inline GrayImage analysis_crop(const GrayImage& frame) {
    return crop(resize(frame, kExtractSize, kExtractSize), kCropTop, kCropBottom, kCropLeft,
                kCropRight);
}

}  // namespace synthaction::imgproc
