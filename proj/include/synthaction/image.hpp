#pragma once

// Image containers and binary PNM (P5/P6) I/O.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "synthaction/common.hpp"

namespace synthaction {

/// 8-bit interleaved RGB raster; the on-disk representation of a frame.
struct Rgb8Image {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // row-major RGB triples

    Rgb8Image() = default;
    Rgb8Image(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

    std::uint8_t* at(int x, int y) { return &data[(static_cast<std::size_t>(y) * width + x) * 3]; }
    const std::uint8_t* at(int x, int y) const {
        return &data[(static_cast<std::size_t>(y) * width + x) * 3];
    }
    bool operator==(const Rgb8Image&) const = default;
};

/// Floating-point RGB image, channels in [0, 1].
struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // row-major RGB triples

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0.f) {}

    float* at(int x, int y) { return &data[(static_cast<std::size_t>(y) * width + x) * 3]; }
    const float* at(int x, int y) const {
        return &data[(static_cast<std::size_t>(y) * width + x) * 3];
    }
    bool operator==(const RgbImage&) const = default;
};

/// Single-channel luminance image, values in [0, 1].
struct GrayImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // row-major

    GrayImage() = default;
    GrayImage(int w, int h, float fill = 0.f)
        : width(w), height(h), data(static_cast<std::size_t>(w) * h, fill) {}

    float& at(int x, int y) { return data[static_cast<std::size_t>(y) * width + x]; }
    float at(int x, int y) const { return data[static_cast<std::size_t>(y) * width + x]; }
    bool operator==(const GrayImage&) const = default;
};

inline RgbImage to_float(const Rgb8Image& img) {
    RgbImage out(img.width, img.height);
    for (std::size_t i = 0; i < img.data.size(); ++i) out.data[i] = img.data[i] / 255.f;
    return out;
}

inline std::uint8_t quantize_unit(float v) {
    v = std::clamp(v, 0.f, 1.f);
    return static_cast<std::uint8_t>(v * 255.f + 0.5f);
}

namespace detail {

inline void write_file(const std::filesystem::path& path, const std::string& header,
                       const std::uint8_t* bytes, std::size_t n) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open for writing: " + path.string());
    out.write(header.data(), static_cast<std::streamsize>(header.size()));
    out.write(reinterpret_cast<const char*>(bytes), static_cast<std::streamsize>(n));
    if (!out) throw IoError("write failed: " + path.string());
}

// Reads a PNM header token, skipping whitespace and '#' comments.
inline std::string pnm_token(std::istream& in) {
    std::string tok;
    int c;
    for (;;) {
        c = in.get();
        if (c == EOF) return tok;
        if (c == '#') {
            while (c != '\n' && c != EOF) c = in.get();
            continue;
        }
        if (!std::isspace(c)) break;
    }
    while (c != EOF && !std::isspace(c)) {
        tok.push_back(static_cast<char>(c));
        c = in.get();
    }
    return tok;
}

inline std::vector<std::uint8_t> read_pnm(const std::filesystem::path& path,
                                          std::string_view magic, int channels, int& w,
                                          int& h) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open: " + path.string());
    if (pnm_token(in) != magic) throw IoError("not a " + std::string(magic) + " file: " + path.string());
    try {
        w = std::stoi(pnm_token(in));
        h = std::stoi(pnm_token(in));
        if (std::stoi(pnm_token(in)) != 255) throw IoError("unsupported maxval in " + path.string());
    } catch (const std::logic_error&) {
        throw IoError("malformed header: " + path.string());
    }
    if (w <= 0 || h <= 0) throw IoError("bad dimensions in " + path.string());
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(w) * h * channels);
    in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (in.gcount() != static_cast<std::streamsize>(bytes.size()))
        throw IoError("truncated pixel data: " + path.string());
    return bytes;
}

inline std::string pnm_header(std::string_view magic, int w, int h, const std::string& comment) {
    std::ostringstream os;
    os << magic << '\n';
    if (!comment.empty()) os << "# " << comment << '\n';
    os << w << ' ' << h << "\n255\n";
    return os.str();
}

}  // namespace detail

inline void write_ppm(const std::filesystem::path& path, const Rgb8Image& img,
                      const std::string& comment = {}) {
    detail::write_file(path, detail::pnm_header("P6", img.width, img.height, comment),
                       img.data.data(), img.data.size());
}

inline Rgb8Image read_ppm(const std::filesystem::path& path) {
    Rgb8Image img;
    img.data = detail::read_pnm(path, "P6", 3, img.width, img.height);
    return img;
}

inline void write_pgm(const std::filesystem::path& path, const GrayImage& img,
                      const std::string& comment = {}) {
    std::vector<std::uint8_t> bytes(img.data.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize_unit(img.data[i]);
    detail::write_file(path, detail::pnm_header("P5", img.width, img.height, comment), bytes.data(),
                       bytes.size());
}

inline GrayImage read_pgm(const std::filesystem::path& path) {
    GrayImage img;
    auto bytes = detail::read_pnm(path, "P5", 1, img.width, img.height);
    img.data.resize(bytes.size());
    for (std::size_t i = 0; i < bytes.size(); ++i) img.data[i] = bytes[i] / 255.f;
    return img;
}

}  // namespace synthaction
