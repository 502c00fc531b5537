#pragma once

// Z-score standardization and the little-endian byte codec shared by the
// model container.

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "synthaction/common.hpp"
#include "synthaction/features/feature_matrix.hpp"

namespace synthaction::classify {

using features::FeatureMatrix;

struct Standardizer {
    std::vector<double> mean;
    std::vector<double> scale;  // population std; 1 where the variance is 0

    bool empty() const { return mean.empty(); }

    static Standardizer fit(const FeatureMatrix& x) {
        SYNTHACTION_REQUIRE(x.rows >= 1, "standardizer: empty input");
        Standardizer s;
        s.mean.assign(x.cols, 0.0);
        s.scale.assign(x.cols, 0.0);
        for (std::size_t r = 0; r < x.rows; ++r)
            for (std::size_t c = 0; c < x.cols; ++c) s.mean[c] += x.at(r, c);
        for (double& m : s.mean) m /= static_cast<double>(x.rows);
        for (std::size_t r = 0; r < x.rows; ++r)
            for (std::size_t c = 0; c < x.cols; ++c) {
                const double d = x.at(r, c) - s.mean[c];
                s.scale[c] += d * d;
            }
        for (double& v : s.scale) {
            v = std::sqrt(v / static_cast<double>(x.rows));
            if (!(v > 1e-12)) v = 1.0;
        }
        return s;
    }

    void apply_row(const float* in, double* out) const {
        for (std::size_t c = 0; c < mean.size(); ++c) out[c] = (in[c] - mean[c]) / scale[c];
    }

    /// Standardized copy as row-major doubles.
    std::vector<double> transform(const FeatureMatrix& x) const {
        SYNTHACTION_REQUIRE(x.cols == mean.size(), "standardizer: dimension mismatch");
        std::vector<double> out(x.rows * x.cols);
        for (std::size_t r = 0; r < x.rows; ++r) apply_row(x.row(r), &out[r * x.cols]);
        return out;
    }
};

inline std::uint64_t checksum(const Standardizer& s) {
    Fnv1a h;
    h.update(s.mean.data(), s.mean.size() * sizeof(double));
    h.update(s.scale.data(), s.scale.size() * sizeof(double));
    return h.digest();
}

// ---------------------------------------------------------------------------

class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
    void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void f64s(const std::vector<double>& v) {
        u64(v.size());
        for (double d : v) f64(d);
    }
    void i32s(const std::vector<int>& v) {
        u64(v.size());
        for (int d : v) i32(d);
    }
    void raw(std::string_view s) { out_.append(s); }
    const std::string& bytes() const { return out_; }

private:
    std::string out_;
};

class ByteReader {
public:
    explicit ByteReader(std::string_view bytes) : b_(bytes) {}
    std::uint8_t u8() { return static_cast<std::uint8_t>(take(1)[0]); }
    std::uint32_t u32() {
        const auto* p = reinterpret_cast<const unsigned char*>(take(4));
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
        return v;
    }
    std::uint64_t u64() {
        const auto* p = reinterpret_cast<const unsigned char*>(take(8));
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
        return v;
    }
    std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
    double f64() { return std::bit_cast<double>(u64()); }
    std::vector<double> f64s() {
        const std::uint64_t n = count(8);
        std::vector<double> v(n);
        for (auto& d : v) d = f64();
        return v;
    }
    std::vector<int> i32s() {
        const std::uint64_t n = count(4);
        std::vector<int> v(n);
        for (auto& d : v) d = i32();
        return v;
    }
    std::string_view raw(std::size_t n) { return {take(n), n}; }
    bool done() const { return pos_ == b_.size(); }

private:
    const char* take(std::size_t n) {
        if (b_.size() - pos_ < n) throw IoError("model file truncated");
        const char* p = b_.data() + pos_;
        pos_ += n;
        return p;
    }
    std::uint64_t count(std::size_t elem) {
        const std::uint64_t n = u64();
        if (n > (b_.size() - pos_) / elem) throw IoError("model file truncated");
        return n;
    }
    std::string_view b_;
    std::size_t pos_ = 0;
};

inline void write_standardizer(ByteWriter& w, const Standardizer& s) {
    w.f64s(s.mean);
    w.f64s(s.scale);
}
inline Standardizer read_standardizer(ByteReader& r) {
    Standardizer s;
    s.mean = r.f64s();
    s.scale = r.f64s();
    if (s.mean.size() != s.scale.size()) throw IoError("model file: scaler size mismatch");
    return s;
}

/// Sorted distinct labels and the class index of every row.
inline std::vector<int> label_vocabulary(const std::vector<int>& y, std::vector<int>* index = nullptr) {
    std::vector<int> vocab(y);
    std::sort(vocab.begin(), vocab.end());
    vocab.erase(std::unique(vocab.begin(), vocab.end()), vocab.end());
    if (index) {
        index->resize(y.size());
        for (std::size_t i = 0; i < y.size(); ++i)
            (*index)[i] = static_cast<int>(std::lower_bound(vocab.begin(), vocab.end(), y[i]) - vocab.begin());
    }
    return vocab;
}

inline void validate_training_input(const FeatureMatrix& x, const std::vector<int>& y) {
    SYNTHACTION_REQUIRE(x.rows == y.size(), "training: rows(X) != len(y)");
    SYNTHACTION_REQUIRE(x.rows >= 2, "training: need at least 2 rows");
    SYNTHACTION_REQUIRE(x.all_finite(), "training: features contain NaN or infinity");
    SYNTHACTION_REQUIRE(label_vocabulary(y).size() >= 2, "training: need at least 2 classes");
}

}  // namespace synthaction::classify
