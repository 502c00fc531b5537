#pragma once

// Exact t-SNE, silhouette score, and a scatter-plot painter.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "synthaction/common.hpp"
#include "synthaction/features/feature_matrix.hpp"
#include "synthaction/image.hpp"
#include "synthaction/rng.hpp"

namespace synthaction::eval {

struct TsneParams {
    double perplexity = 30;
    int iterations = 1000;
    int exaggeration_iters = 250;
    double exaggeration = 12;
    double learning_rate = 200;
    double momentum_start = 0.5, momentum_final = 0.8;
    std::uint64_t seed = 7;  // only used when the input has no spread
};

struct TsneResult {
    std::vector<std::array<double, 2>> points;
    double initial_kl = 0, final_kl = 0;
};

namespace detail {

inline std::vector<double> squared_distances(const features::FeatureMatrix& x) {
    const std::size_t n = x.rows;
    std::vector<double> d(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0;
            for (std::size_t c = 0; c < x.cols; ++c) {
                const double t = static_cast<double>(x.at(i, c)) - x.at(j, c);
                s += t * t;
            }
            d[i * n + j] = d[j * n + i] = s;
        }
    return d;
}

// Conditional affinities p_{j|i} with per-row precision found by bisection on
// the entropy (natural log) against log(perplexity).
inline std::vector<double> conditional_affinities(const std::vector<double>& d, std::size_t n, double perplexity) {
    std::vector<double> p(n * n, 0.0);
    const double target = std::log(perplexity);
    for (std::size_t i = 0; i < n; ++i) {
        double beta = 1.0, lo = 0.0, hi = std::numeric_limits<double>::infinity();
        const double* di = &d[i * n];
        double* pi = &p[i * n];
        double dmin = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < n; ++j)
            if (j != i) dmin = std::min(dmin, di[j]);
        for (int it = 0; it < 100; ++it) {
            double sum = 0, dot = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (j == i) {
                    pi[j] = 0;
                    continue;
                }
                // shifting by the nearest distance keeps exp() away from underflow
                pi[j] = std::exp(-(di[j] - dmin) * beta);
                sum += pi[j];
                dot += (di[j] - dmin) * pi[j];
            }
            const double h = std::log(sum) + beta * dot / sum;
            for (std::size_t j = 0; j < n; ++j) pi[j] /= sum;
            const double diff = h - target;
            if (std::abs(diff) < 1e-5) break;
            if (diff > 0) {
                lo = beta;
                beta = std::isinf(hi) ? beta * 2 : 0.5 * (beta + hi);
            } else {
                hi = beta;
                beta = 0.5 * (beta + lo);
            }
        }
    }
    return p;
}

// Scores on the top two principal axes, scaled so the first has standard
// deviation 1e-4. Identical rows start at identical points.
inline std::vector<std::array<double, 2>> pca_init(const features::FeatureMatrix& x, std::uint64_t seed) {
    const auto n = static_cast<Eigen::Index>(x.rows), d = static_cast<Eigen::Index>(x.cols);
    Eigen::MatrixXd c(n, d);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < d; ++j) c(i, j) = x.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    c.rowwise() -= c.colwise().mean();
    Eigen::MatrixXd scores(n, 2);
    scores.setZero();
    if (n <= d) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c * c.transpose());
        for (int k = 0; k < 2 && k < n; ++k) {
            const Eigen::Index col = n - 1 - k;
            scores.col(k) = es.eigenvectors().col(col) * std::sqrt(std::max(es.eigenvalues()(col), 0.0));
        }
    } else {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.transpose() * c);
        for (int k = 0; k < 2 && k < d; ++k) scores.col(k) = c * es.eigenvectors().col(d - 1 - k);
    }
    // sign convention: largest-magnitude score positive
    for (int k = 0; k < 2; ++k) {
        Eigen::Index at = 0;
        scores.col(k).cwiseAbs().maxCoeff(&at);
        if (scores(at, k) < 0) scores.col(k) *= -1.0;
    }
    const double sd = std::sqrt(scores.col(0).squaredNorm() / static_cast<double>(n));
    std::vector<std::array<double, 2>> out(x.rows);
    if (!(sd > 1e-12)) {
        Rng rng(seed, {0x75E});
        for (auto& pt : out) pt = {1e-4 * rng.normal(), 1e-4 * rng.normal()};
        return out;
    }
    for (Eigen::Index i = 0; i < n; ++i)
        out[static_cast<std::size_t>(i)] = {1e-4 * scores(i, 0) / sd, 1e-4 * scores(i, 1) / sd};
    return out;
}

inline double kl_divergence(const std::vector<double>& p, const std::vector<std::array<double, 2>>& y) {
    const std::size_t n = y.size();
    double z = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (i != j) {
                const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
                z += 1.0 / (1.0 + dx * dx + dy * dy);
            }
    double kl = 0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            const double pij = p[i * n + j];
            const double dx = y[i][0] - y[j][0], dy = y[i][1] - y[j][1];
            const double q = std::max(1.0 / (1.0 + dx * dx + dy * dy) / z, 1e-300);
            kl += pij * std::log(pij / q);
        }
    return kl;
}

}  // namespace detail

inline TsneResult tsne_embed(const features::FeatureMatrix& x, const TsneParams& prm = {}) {
    SYNTHACTION_REQUIRE(prm.perplexity > 0, "tsne: perplexity must be positive");
    SYNTHACTION_REQUIRE(static_cast<double>(x.rows) >= 3.0 * prm.perplexity,
                        "tsne: need at least 3 x perplexity rows");
    SYNTHACTION_REQUIRE(x.all_finite(), "tsne: non-finite input");
    const std::size_t n = x.rows;
    const auto d = detail::squared_distances(x);
    auto p = detail::conditional_affinities(d, n, prm.perplexity);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j) {
            const double s = std::max((p[i * n + j] + p[j * n + i]) / (2.0 * static_cast<double>(n)), 1e-12);
            p[i * n + j] = p[j * n + i] = s;
        }
    for (std::size_t i = 0; i < n; ++i) p[i * n + i] = 0;

    TsneResult res;
    res.points = detail::pca_init(x, prm.seed);
    res.initial_kl = detail::kl_divergence(p, res.points);

    std::vector<std::array<double, 2>> update(n, {0, 0}), gains(n, {1, 1}), grad(n);
    std::vector<double> num(n * n);
    for (int it = 0; it < prm.iterations; ++it) {
        const bool early = it < prm.exaggeration_iters;
        const double exag = early ? prm.exaggeration : 1.0;
        const double momentum = early ? prm.momentum_start : prm.momentum_final;
        double z = 0;
        for (std::size_t i = 0; i < n; ++i) {
            num[i * n + i] = 0;
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dx = res.points[i][0] - res.points[j][0], dy = res.points[i][1] - res.points[j][1];
                const double v = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = num[j * n + i] = v;
                z += 2 * v;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            double gx = 0, gy = 0;
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                const double v = num[i * n + j];
                const double m = (exag * p[i * n + j] - v / z) * v;
                gx += m * (res.points[i][0] - res.points[j][0]);
                gy += m * (res.points[i][1] - res.points[j][1]);
            }
            grad[i] = {4 * gx, 4 * gy};
        }
        std::array<double, 2> mean{0, 0};
        for (std::size_t i = 0; i < n; ++i) {
            for (int c = 0; c < 2; ++c) {
                double& g = gains[i][c];
                g = (grad[i][c] > 0) != (update[i][c] > 0) ? g + 0.2 : g * 0.8;
                g = std::max(g, 0.01);
                update[i][c] = momentum * update[i][c] - prm.learning_rate * g * grad[i][c];
                res.points[i][c] += update[i][c];
                mean[c] += res.points[i][c];
            }
        }
        for (auto& pt : res.points)
            for (int c = 0; c < 2; ++c) pt[c] -= mean[c] / static_cast<double>(n);
    }
    res.final_kl = detail::kl_divergence(p, res.points);
    return res;
}

/// Mean silhouette of 2-D points under `labels` (Euclidean). Points alone in
/// their cluster score 0; needs at least two clusters.
inline double silhouette(const std::vector<std::array<double, 2>>& pts, const std::vector<int>& labels) {
    SYNTHACTION_REQUIRE(pts.size() == labels.size(), "silhouette: length mismatch");
    std::vector<int> ids(labels);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    SYNTHACTION_REQUIRE(ids.size() >= 2, "silhouette: need at least two clusters");
    const std::size_t n = pts.size(), k = ids.size();
    std::vector<std::size_t> cls(n);
    std::vector<double> size(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
        cls[i] = static_cast<std::size_t>(std::lower_bound(ids.begin(), ids.end(), labels[i]) - ids.begin());
        size[cls[i]] += 1;
    }
    double total = 0;
    std::vector<double> sum(k);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(sum.begin(), sum.end(), 0.0);
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            sum[cls[j]] += std::hypot(pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]);
        }
        if (size[cls[i]] <= 1) continue;
        const double a = sum[cls[i]] / (size[cls[i]] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c)
            if (c != cls[i]) b = std::min(b, sum[c] / size[c]);
        const double m = std::max(a, b);
        total += m > 0 ? (b - a) / m : 0.0;
    }
    return total / static_cast<double>(n);
}

/// Ten well-separated colors for action classes.
inline constexpr std::array<std::array<std::uint8_t, 3>, 10> kPalette = {{{31, 119, 180},
                                                                          {255, 127, 14},
                                                                          {44, 160, 44},
                                                                          {214, 39, 40},
                                                                          {148, 103, 189},
                                                                          {140, 86, 75},
                                                                          {227, 119, 194},
                                                                          {127, 127, 127},
                                                                          {188, 189, 34},
                                                                          {23, 190, 207}}};

/// White canvas with each point drawn as a filled disc colored by label, and
/// a legend column of color swatches in label order on the right.
inline Rgb8Image scatter_plot(const std::vector<std::array<double, 2>>& pts, const std::vector<int>& labels,
                              int size = 600) {
    SYNTHACTION_REQUIRE(pts.size() == labels.size(), "scatter_plot: length mismatch");
    SYNTHACTION_REQUIRE(size >= 64, "scatter_plot: canvas too small");
    const int legend = 24;
    Rgb8Image img;
    img.width = size + legend;
    img.height = size;
    img.data.assign(static_cast<std::size_t>(img.width) * img.height * 3, 255);
    auto put = [&](int x, int y, const std::array<std::uint8_t, 3>& c) {
        if (x < 0 || y < 0 || x >= img.width || y >= img.height) return;
        std::copy(c.begin(), c.end(), &img.data[(static_cast<std::size_t>(y) * img.width + x) * 3]);
    };
    auto color = [](int label) { return kPalette[static_cast<std::size_t>(((label % 10) + 10) % 10)]; };
    if (!pts.empty()) {
        double x0 = pts[0][0], x1 = x0, y0 = pts[0][1], y1 = y0;
        for (const auto& p : pts) {
            x0 = std::min(x0, p[0]);
            x1 = std::max(x1, p[0]);
            y0 = std::min(y0, p[1]);
            y1 = std::max(y1, p[1]);
        }
        const double span = std::max({x1 - x0, y1 - y0, 1e-12});
        const double margin = 0.05 * size;
        const double s = (size - 2 * margin) / span;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const int cx = static_cast<int>(std::lround(margin + (pts[i][0] - x0) * s));
            const int cy = static_cast<int>(std::lround(size - 1 - margin - (pts[i][1] - y0) * s));
            for (int dy = -2; dy <= 2; ++dy)
                for (int dx = -2; dx <= 2; ++dx)
                    if (dx * dx + dy * dy <= 5) put(cx + dx, cy + dy, color(labels[i]));
        }
    }
    std::vector<int> ids(labels);
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    for (std::size_t k = 0; k < ids.size(); ++k)
        for (int dy = 0; dy < 12; ++dy)
            for (int dx = 0; dx < 12; ++dx) put(size + 6 + dx, 8 + static_cast<int>(k) * 18 + dy, color(ids[k]));
    return img;
}

}  // namespace synthaction::eval
