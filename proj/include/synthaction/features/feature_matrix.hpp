#pragma once

// Dense float feature matrix, its FMX1 binary format and the companion
// labels CSV.

#include <bit>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "synthaction/common.hpp"

namespace synthaction::features {

struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<float> data;  // row-major

    FeatureMatrix() = default;
    FeatureMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.f) {}

    float* row(std::size_t r) { return data.data() + r * cols; }
    const float* row(std::size_t r) const { return data.data() + r * cols; }
    float& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    float at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }

    void set_row(std::size_t r, const std::vector<float>& v) {
        SYNTHACTION_REQUIRE(v.size() == cols, "feature row length mismatch");
        std::copy(v.begin(), v.end(), row(r));
    }

    FeatureMatrix select_rows(const std::vector<std::size_t>& idx) const {
        FeatureMatrix out(idx.size(), cols);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            SYNTHACTION_REQUIRE(idx[i] < rows, "row index out of range");
            std::copy(row(idx[i]), row(idx[i]) + cols, out.row(i));
        }
        return out;
    }

    bool all_finite() const {
        for (float v : data)
            if (!std::isfinite(v)) return false;
        return true;
    }

    bool operator==(const FeatureMatrix&) const = default;
};

/// Stacks equal-length rows.
inline FeatureMatrix stack_rows(const std::vector<std::vector<float>>& rows) {
    if (rows.empty()) return {};
    FeatureMatrix m(rows.size(), rows.front().size());
    for (std::size_t r = 0; r < rows.size(); ++r) m.set_row(r, rows[r]);
    return m;
}

inline std::uint64_t checksum(const FeatureMatrix& m) {
    Fnv1a h;
    const std::uint64_t dims[2] = {m.rows, m.cols};
    h.update(dims, sizeof dims);
    h.update(m.data.data(), m.data.size() * sizeof(float));
    return h.digest();
}

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
}
inline std::uint32_t get_u32(const unsigned char* p) {
    return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
           static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

}  // namespace detail

inline std::string encode_fmx(const FeatureMatrix& m) {
    SYNTHACTION_REQUIRE(m.rows <= 0xFFFFFFFFu && m.cols <= 0xFFFFFFFFu, "matrix too large for FMX1");
    std::string out = "FMX1";
    detail::put_u32(out, static_cast<std::uint32_t>(m.rows));
    detail::put_u32(out, static_cast<std::uint32_t>(m.cols));
    out.reserve(out.size() + m.data.size() * 4);
    for (float f : m.data) detail::put_u32(out, std::bit_cast<std::uint32_t>(f));
    return out;
}

inline FeatureMatrix decode_fmx(const std::string& bytes) {
    if (bytes.size() < 12 || bytes.compare(0, 4, "FMX1") != 0) throw IoError("not an FMX1 feature file");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
    FeatureMatrix m(detail::get_u32(p + 4), detail::get_u32(p + 8));
    if (bytes.size() != 12 + m.data.size() * 4) throw IoError("FMX1 payload size mismatch");
    for (std::size_t i = 0; i < m.data.size(); ++i)
        m.data[i] = std::bit_cast<float>(detail::get_u32(p + 12 + 4 * i));
    return m;
}

inline void write_fmx(const std::filesystem::path& path, const FeatureMatrix& m) {
    write_file_bytes(path, encode_fmx(m));
}
inline FeatureMatrix read_fmx(const std::filesystem::path& path) { return decode_fmx(read_file_bytes(path)); }

// ---------------------------------------------------------------------------
// labels CSV: clip_id,action,variant

struct RowLabel {
    std::string clip_id;
    int action = 0;
    int variant = 0;
    bool operator==(const RowLabel&) const = default;
};

inline std::string encode_labels(const std::vector<RowLabel>& labels) {
    std::string out = "clip_id,action,variant\n";
    for (const auto& l : labels)
        out += l.clip_id + "," + std::to_string(l.action) + "," + std::to_string(l.variant) + "\n";
    return out;
}

inline std::vector<RowLabel> decode_labels(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<RowLabel> out;
    if (!std::getline(in, line) || line != "clip_id,action,variant") throw IoError("bad labels CSV header");
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto a = line.find(','), b = line.rfind(',');
        if (a == std::string::npos || a == b) throw IoError("bad labels CSV line: " + line);
        try {
            out.push_back({line.substr(0, a), std::stoi(line.substr(a + 1, b - a - 1)), std::stoi(line.substr(b + 1))});
        } catch (const std::logic_error&) {
            throw IoError("bad labels CSV line: " + line);
        }
    }
    return out;
}

}  // namespace synthaction::features
