#pragma once

// K-means codebook (k-means++ seeding, Lloyd iterations) and bag-of-words
// encoding of SIFT descriptors.

#include <Eigen/Dense>
#include <limits>
#include <vector>

#include "synthaction/common.hpp"
#include "synthaction/features/feature_matrix.hpp"
#include "synthaction/features/sift.hpp"
#include "synthaction/rng.hpp"

namespace synthaction::features {

inline constexpr int kDefaultCodebookSize = 60;
inline constexpr int kKmeansMaxIter = 300;

struct Codebook {
    Eigen::MatrixXd centroids;  // n x dims
    double inertia = 0;
    std::vector<double> inertia_history;  // after every Lloyd update
    int iterations = 0;
    bool converged = false;

    int size() const { return static_cast<int>(centroids.rows()); }
    int dims() const { return static_cast<int>(centroids.cols()); }
};

namespace detail {

inline Eigen::MatrixXd to_eigen(const FeatureMatrix& m) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(m.cols));
    for (std::size_t r = 0; r < m.rows; ++r)
        for (std::size_t c = 0; c < m.cols; ++c) out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = m.at(r, c);
    return out;
}

inline double sqdist(const Eigen::MatrixXd& x, Eigen::Index i, const Eigen::MatrixXd& c, Eigen::Index j) {
    return (x.row(i) - c.row(j)).squaredNorm();
}

// Nearest centroid per row (ties to the lowest index) and its squared
// distance. Candidates come from the expanded-norm GEMM; the winner's
// distance is recomputed exactly.
inline void assign(const Eigen::MatrixXd& x, const Eigen::VectorXd& xnorm, const Eigen::MatrixXd& c,
                   std::vector<int>& label, std::vector<double>& dist) {
    const Eigen::Index n = x.rows(), k = c.rows();
    const Eigen::VectorXd cnorm = c.rowwise().squaredNorm();
    constexpr Eigen::Index block = 4096;
    for (Eigen::Index r0 = 0; r0 < n; r0 += block) {
        const Eigen::Index rb = std::min(block, n - r0);
        Eigen::MatrixXd d = -2.0 * (x.middleRows(r0, rb) * c.transpose());
        d.colwise() += xnorm.segment(r0, rb);
        d.rowwise() += cnorm.transpose();
        for (Eigen::Index i = 0; i < rb; ++i) {
            Eigen::Index best = 0;
            for (Eigen::Index j = 1; j < k; ++j)
                if (d(i, j) < d(i, best)) best = j;
            // resolve near-ties exactly
            const double approx = d(i, best);
            double exact = sqdist(x, r0 + i, c, best);
            for (Eigen::Index j = 0; j < k; ++j) {
                if (j == best || d(i, j) > approx + 1e-9 * (1.0 + std::abs(approx))) continue;
                const double e = sqdist(x, r0 + i, c, j);
                if (e < exact || (e == exact && j < best)) {
                    exact = e;
                    best = j;
                }
            }
            label[static_cast<std::size_t>(r0 + i)] = static_cast<int>(best);
            dist[static_cast<std::size_t>(r0 + i)] = exact;
        }
    }
}

}  // namespace detail

/// Fits an n-word codebook to the rows of `descriptors`.
inline Codebook kmeans_fit(const FeatureMatrix& descriptors, int n, std::uint64_t seed,
                           int max_iter = kKmeansMaxIter) {
    SYNTHACTION_REQUIRE(n >= 1, "kmeans_fit: n must be >= 1");
    SYNTHACTION_REQUIRE(descriptors.rows >= static_cast<std::size_t>(n), "kmeans_fit: fewer rows than clusters");
    const Eigen::MatrixXd x = detail::to_eigen(descriptors);
    const Eigen::Index rows = x.rows();
    const Eigen::VectorXd xnorm = x.rowwise().squaredNorm();
    Rng rng(seed, {0x6B6Du});

    // k-means++ seeding
    Codebook cb;
    cb.centroids.resize(n, x.cols());
    std::vector<double> d2(static_cast<std::size_t>(rows));
    Eigen::Index first = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(rows)));
    cb.centroids.row(0) = x.row(first);
    for (Eigen::Index i = 0; i < rows; ++i) d2[static_cast<std::size_t>(i)] = detail::sqdist(x, i, cb.centroids, 0);
    for (int j = 1; j < n; ++j) {
        double total = 0;
        for (double v : d2) total += v;
        Eigen::Index pick = 0;
        if (total > 0) {
            double target = rng.uniform() * total;
            pick = rows - 1;
            for (Eigen::Index i = 0; i < rows; ++i) {
                target -= d2[static_cast<std::size_t>(i)];
                if (target < 0 && d2[static_cast<std::size_t>(i)] > 0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(rows)));
        }
        cb.centroids.row(j) = x.row(pick);
        for (Eigen::Index i = 0; i < rows; ++i)
            d2[static_cast<std::size_t>(i)] = std::min(d2[static_cast<std::size_t>(i)], detail::sqdist(x, i, cb.centroids, j));
    }

    std::vector<int> label(static_cast<std::size_t>(rows), -1), prev;
    std::vector<double> dist(static_cast<std::size_t>(rows));
    detail::assign(x, xnorm, cb.centroids, label, dist);
    for (int it = 0; it < max_iter; ++it) {
        // update step
        Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(n, x.cols());
        std::vector<std::size_t> count(static_cast<std::size_t>(n), 0);
        for (Eigen::Index i = 0; i < rows; ++i) {
            sum.row(label[static_cast<std::size_t>(i)]) += x.row(i);
            ++count[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])];
        }
        for (int j = 0; j < n; ++j)
            if (count[static_cast<std::size_t>(j)]) cb.centroids.row(j) = sum.row(j) / static_cast<double>(count[static_cast<std::size_t>(j)]);
        // empty clusters take the point farthest from its centroid
        for (int j = 0; j < n; ++j) {
            if (count[static_cast<std::size_t>(j)]) continue;
            Eigen::Index far = -1;
            for (Eigen::Index i = 0; i < rows; ++i) {
                if (count[static_cast<std::size_t>(label[static_cast<std::size_t>(i)])] <= 1) continue;
                if (far < 0 || dist[static_cast<std::size_t>(i)] > dist[static_cast<std::size_t>(far)]) far = i;
            }
            if (far < 0) break;
            --count[static_cast<std::size_t>(label[static_cast<std::size_t>(far)])];
            label[static_cast<std::size_t>(far)] = j;
            count[static_cast<std::size_t>(j)] = 1;
            dist[static_cast<std::size_t>(far)] = 0;
            cb.centroids.row(j) = x.row(far);
        }
        double inertia = 0;
        for (Eigen::Index i = 0; i < rows; ++i) inertia += detail::sqdist(x, i, cb.centroids, label[static_cast<std::size_t>(i)]);
        cb.inertia_history.push_back(inertia);
        cb.iterations = it + 1;
        // assignment step
        prev = label;
        detail::assign(x, xnorm, cb.centroids, label, dist);
        if (label == prev) {
            cb.converged = true;
            break;
        }
    }
    cb.inertia = 0;
    for (double v : dist) cb.inertia += v;
    return cb;
}

inline int nearest_centroid(const Codebook& cb, const float* v) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < cb.size(); ++j) {
        double s = 0;
        for (int c = 0; c < cb.dims(); ++c) {
            const double t = v[c] - cb.centroids(j, c);
            s += t * t;
        }
        if (s < best_d) {
            best_d = s;
            best = j;
        }
    }
    return best;
}

/// Visual-word histogram: counts of descriptors per nearest centroid.
inline std::vector<float> bow_encode(const Codebook& cb, const std::vector<SiftKeypoint>& keypoints) {
    SYNTHACTION_REQUIRE(cb.dims() == kSiftDescriptorLength, "bow_encode: codebook dimension mismatch");
    std::vector<float> h(static_cast<std::size_t>(cb.size()), 0.f);
    for (const auto& kp : keypoints) h[static_cast<std::size_t>(nearest_centroid(cb, kp.descriptor.data()))] += 1.f;
    return h;
}

/// Same histogram from descriptor rows.
inline std::vector<float> bow_encode(const Codebook& cb, const FeatureMatrix& descriptors) {
    SYNTHACTION_REQUIRE(descriptors.rows == 0 || descriptors.cols == static_cast<std::size_t>(cb.dims()),
                        "bow_encode: descriptor dimension mismatch");
    std::vector<float> h(static_cast<std::size_t>(cb.size()), 0.f);
    for (std::size_t r = 0; r < descriptors.rows; ++r)
        h[static_cast<std::size_t>(nearest_centroid(cb, descriptors.row(r)))] += 1.f;
    return h;
}

inline FeatureMatrix descriptor_matrix(const std::vector<SiftKeypoint>& keypoints) {
    FeatureMatrix m(keypoints.size(), kSiftDescriptorLength);
    for (std::size_t i = 0; i < keypoints.size(); ++i)
        std::copy(keypoints[i].descriptor.begin(), keypoints[i].descriptor.end(), m.row(i));
    return m;
}

inline std::uint64_t checksum(const Codebook& cb) {
    Fnv1a h;
    h.update(cb.centroids.data(), static_cast<std::size_t>(cb.centroids.size()) * sizeof(double));
    return h.digest();
}

}  // namespace synthaction::features
