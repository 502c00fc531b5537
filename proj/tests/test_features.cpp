#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>

#include "synthaction/features/bgsub.hpp"
#include "synthaction/features/feature_matrix.hpp"
#include "synthaction/features/hog.hpp"
#include "synthaction/features/kmeans.hpp"
#include "synthaction/features/pca.hpp"
#include "synthaction/features/sift.hpp"
#include "synthaction/features/skeleton.hpp"
#include "synthaction/imgproc.hpp"
#include "synthaction/scene/dataset.hpp"
#include "test_support.hpp"

using namespace synthaction;
using namespace synthaction::features;

namespace {

FeatureMatrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed, {});
    FeatureMatrix m(rows, cols);
    for (auto& v : m.data) v = static_cast<float>(scale * rng.normal());
    return m;
}

// Analysis crops of rendered easy-level avatars, mixed actions and cameras.
const std::vector<GrayImage>& avatar_corpus() {
    static const std::vector<GrayImage> corpus = [] {
        const auto m = scene::plan_dataset(scene::easy_profile(), 1, 3, 7);
        std::vector<GrayImage> out;
        for (std::size_t i = 0; i < 100; ++i) {
            const auto& e = m.entries[i];
            const auto f = scene::render_frames(e.request, e.request.frame_count / 2, 1).front();
            out.push_back(imgproc::analysis_crop(to_float(f)));
        }
        return out;
    }();
    return corpus;
}

GrayImage binarize(const GrayImage& g, float t = kSkeletonThreshold) {
    GrayImage b(g.width, g.height);
    for (std::size_t i = 0; i < g.data.size(); ++i) b.data[i] = g.data[i] >= t ? 1.f : 0.f;
    return b;
}

// 8-connected labels of pixels >= 0.5; -1 for background.
std::vector<int> label_components(const GrayImage& g, int& count) {
    const int w = g.width, h = g.height;
    std::vector<int> lab(g.data.size(), -1);
    count = 0;
    for (int s = 0; s < w * h; ++s) {
        if (g.data[static_cast<std::size_t>(s)] < 0.5f || lab[static_cast<std::size_t>(s)] >= 0) continue;
        std::vector<int> stack{s};
        lab[static_cast<std::size_t>(s)] = count;
        while (!stack.empty()) {
            const int p = stack.back();
            stack.pop_back();
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const int x = p % w + dx, y = p / w + dy;
                    if (x < 0 || y < 0 || x >= w || y >= h) continue;
                    const auto q = static_cast<std::size_t>(y * w + x);
                    if (g.data[q] >= 0.5f && lab[q] < 0) {
                        lab[q] = count;
                        stack.push_back(y * w + x);
                    }
                }
        }
        ++count;
    }
    return lab;
}

GrayImage gaussian_blob(int size, double cx, double cy, double sigma) {
    GrayImage g(size, size);
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x)
            g.at(x, y) = static_cast<float>(std::exp(-((x - cx) * (x - cx) + (y - cy) * (y - cy)) / (2 * sigma * sigma)));
    return g;
}

GrayImage rotate90(const GrayImage& g) {
    GrayImage r(g.height, g.width);
    for (int y = 0; y < g.height; ++y)
        for (int x = 0; x < g.width; ++x) r.at(g.height - 1 - y, x) = g.at(x, y);
    return r;
}

double descriptor_dist2(const SiftKeypoint& a, const SiftKeypoint& b) {
    double s = 0;
    for (int i = 0; i < kSiftDescriptorLength; ++i) {
        const double d = a.descriptor[static_cast<std::size_t>(i)] - b.descriptor[static_cast<std::size_t>(i)];
        s += d * d;
    }
    return s;
}

}  // namespace

// ---------------------------------------------------------------------------
// PCA

TEST(Pca, IdenticalRowsHaveZeroVariance) {
    FeatureMatrix x(5, 4);
    for (std::size_t r = 0; r < 5; ++r) x.set_row(r, {1, -2, 3, 0.5f});
    const auto m = pca_fit(x, 3);
    for (double e : m.eigenvalues) EXPECT_NEAR(e, 0.0, 1e-12);
    for (double v : pca_project(m, std::vector<double>{1, -2, 3, 0.5})) EXPECT_NEAR(v, 0.0, 1e-12);
}

TEST(Pca, SymmetricCloudAlongDiagonalMatchesClosedForm) {
    FeatureMatrix x(8, 2);
    const double pts[8][2] = {{3, 3}, {-3, -3}, {1, 1.4}, {-1, -1.4}, {1.4, 1}, {-1.4, -1}, {0.2, -0.2}, {-0.2, 0.2}};
    for (std::size_t r = 0; r < 8; ++r) x.set_row(r, {static_cast<float>(pts[r][0]), static_cast<float>(pts[r][1])});
    // closed-form top eigenvector of the 2x2 sample covariance
    double mx = 0, my = 0;
    for (auto& p : pts) {
        mx += p[0] / 8;
        my += p[1] / 8;
    }
    double a = 0, b = 0, c = 0;
    for (auto& p : pts) {
        a += (p[0] - mx) * (p[0] - mx) / 7;
        b += (p[0] - mx) * (p[1] - my) / 7;
        c += (p[1] - my) * (p[1] - my) / 7;
    }
    const double l1 = (a + c) / 2 + std::sqrt((a - c) * (a - c) / 4 + b * b);
    double vx = b, vy = l1 - a;
    const double n = std::hypot(vx, vy);
    vx /= n;
    vy /= n;
    EXPECT_NEAR(std::abs(vx), 1 / std::sqrt(2.0), 1e-6);
    const auto m = pca_fit(x, 2);
    EXPECT_NEAR(std::abs(m.components(0, 0) * vx + m.components(0, 1) * vy), 1.0, 1e-6);
    EXPECT_NEAR(std::abs(m.components(0, 0)), 1 / std::sqrt(2.0), 1e-6);
    EXPECT_NEAR(std::abs(m.components(0, 1)), 1 / std::sqrt(2.0), 1e-6);
    EXPECT_NEAR(m.eigenvalues[0], l1, 1e-6);
}

TEST(Pca, FrameSizedRowsGive256Projections) {
    const auto x = random_matrix(300, 6084, 1);
    const auto m = pca_fit(x, 256);
    EXPECT_EQ(m.k(), 256);
    EXPECT_EQ(m.dims(), 6084u);
    const auto p = pca_project(m, x);
    EXPECT_EQ(p.rows, 300u);
    EXPECT_EQ(p.cols, 256u);
    const Eigen::MatrixXd gram = m.components * m.components.transpose();
    EXPECT_LE((gram - Eigen::MatrixXd::Identity(256, 256)).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Pca, OrthonormalDescendingAndBoundedByTotalVariance) {
    for (std::uint64_t seed : {2, 3, 4}) {
        // anisotropic data so eigenvalues are well spread
        auto x = random_matrix(60, 25, seed);
        for (std::size_t r = 0; r < x.rows; ++r)
            for (std::size_t c = 0; c < x.cols; ++c) x.at(r, c) *= static_cast<float>(1 + c);
        const auto m = pca_fit(x, 20);
        const Eigen::MatrixXd gram = m.components * m.components.transpose();
        EXPECT_LE((gram - Eigen::MatrixXd::Identity(20, 20)).cwiseAbs().maxCoeff(), 1e-6);
        EXPECT_TRUE(std::is_sorted(m.eigenvalues.rbegin(), m.eigenvalues.rend()));
        for (double e : m.eigenvalues) EXPECT_GE(e, -1e-9);
        // total variance by brute force
        double total = 0;
        for (std::size_t c = 0; c < x.cols; ++c) {
            double mean = 0, ss = 0;
            for (std::size_t r = 0; r < x.rows; ++r) mean += x.at(r, c);
            mean /= static_cast<double>(x.rows);
            for (std::size_t r = 0; r < x.rows; ++r) ss += (x.at(r, c) - mean) * (x.at(r, c) - mean);
            total += ss / static_cast<double>(x.rows - 1);
        }
        EXPECT_NEAR(m.total_variance, total, 1e-6 * total);
        EXPECT_LE(std::accumulate(m.eigenvalues.begin(), m.eigenvalues.end(), 0.0), total * (1 + 1e-9));
    }
}

TEST(Pca, ProjectionOfMeanAndComponentOffsets) {
    const auto x = random_matrix(40, 12, 5);
    const auto m = pca_fit(x, 8);
    for (double v : pca_project(m, m.mean)) EXPECT_NEAR(v, 0.0, 1e-9);
    for (int i = 0; i < m.k(); ++i) {
        const double c = 2.5 - i;
        std::vector<double> row = m.mean;
        for (std::size_t d = 0; d < m.dims(); ++d) row[d] += c * m.components(i, static_cast<Eigen::Index>(d));
        const auto p = pca_project(m, row);
        for (int j = 0; j < m.k(); ++j) EXPECT_NEAR(p[static_cast<std::size_t>(j)], i == j ? c : 0.0, 1e-9);
    }
}

TEST(Pca, ReconstructionErrorNonIncreasingInK) {
    const auto x = random_matrix(50, 30, 6);
    const auto full = pca_fit(x, 30);
    for (std::size_t r = 0; r < 5; ++r) {
        std::vector<double> row(x.row(r), x.row(r) + x.cols);
        double prev = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= 30; ++k) {
            const auto m = pca_truncate(full, k);
            const auto proj = pca_project(m, row);
            // brute-force residual: row - mean - C^T proj
            double err = 0;
            for (std::size_t d = 0; d < row.size(); ++d) {
                double rec = m.mean[d];
                for (int i = 0; i < k; ++i) rec += m.components(i, static_cast<Eigen::Index>(d)) * proj[static_cast<std::size_t>(i)];
                err += (row[d] - rec) * (row[d] - rec);
            }
            EXPECT_LE(err, prev + 1e-9) << "k=" << k;
            prev = err;
            const auto rec = pca_reconstruct(m, proj);
            double err2 = 0;
            for (std::size_t d = 0; d < row.size(); ++d) err2 += (row[d] - rec[d]) * (row[d] - rec[d]);
            EXPECT_NEAR(err2, err, 1e-9 * (1 + err));
        }
    }
}

TEST(Pca, RejectsBadShapes) {
    const auto x = random_matrix(10, 4, 7);
    EXPECT_THROW(pca_fit(x, 5), InvalidArgument);
    EXPECT_THROW(pca_fit(random_matrix(1, 4, 8), 1), InvalidArgument);
    const auto m = pca_fit(x, 2);
    EXPECT_THROW(pca_project(m, std::vector<double>(3, 0.0)), InvalidArgument);
}

TEST(Pca, FitIsDeterministic) {
    const auto x = random_matrix(40, 30, 9);
    EXPECT_EQ(checksum(pca_fit(x, 10)), checksum(pca_fit(x, 10)));
}

// ---------------------------------------------------------------------------
// Skeletonize

TEST(Skeleton, AllBackgroundStaysBackground) {
    const auto s = skeletonize(GrayImage(20, 10, 0.2f));
    for (float v : s.data) EXPECT_EQ(v, 0.f);
}

TEST(Skeleton, SolidBarThinsToHorizontalLine) {
    // 3x7 bar at rows 1..3, columns 1..7 of a 9x5 image. Working the two
    // sub-iterations by hand leaves row 2, columns 2..5.
    GrayImage g(9, 5);
    for (int y = 1; y <= 3; ++y)
        for (int x = 1; x <= 7; ++x) g.at(x, y) = 1.f;
    const auto s = skeletonize(g);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 9; ++x) EXPECT_EQ(s.at(x, y), (y == 2 && x >= 2 && x <= 5) ? 1.f : 0.f) << x << "," << y;
}

TEST(Skeleton, SubsetAndIdempotentOnAvatarCorpus) {
    for (const auto& g : avatar_corpus()) {
        const auto s = skeletonize(g);
        const auto b = binarize(g);
        for (std::size_t i = 0; i < s.data.size(); ++i) ASSERT_LE(s.data[i], b.data[i]);
        EXPECT_EQ(skeletonize(s).data, s.data);
    }
}

TEST(Skeleton, NeverSplitsComponentsAndOnlyErasesSmallBlobs) {
    for (const auto& g : avatar_corpus()) {
        const auto b = binarize(g);
        const auto s = skeletonize(g);
        int nb = 0, ns = 0;
        const auto lb = label_components(b, nb);
        const auto ls = label_components(s, ns);
        std::vector<std::set<int>> pieces(static_cast<std::size_t>(nb));
        std::vector<int> size(static_cast<std::size_t>(nb), 0);
        for (std::size_t i = 0; i < lb.size(); ++i) {
            if (lb[i] < 0) continue;
            ++size[static_cast<std::size_t>(lb[i])];
            if (ls[i] >= 0) pieces[static_cast<std::size_t>(lb[i])].insert(ls[i]);
        }
        for (int c = 0; c < nb; ++c) {
            EXPECT_LE(pieces[static_cast<std::size_t>(c)].size(), 1u);
            if (pieces[static_cast<std::size_t>(c)].empty()) {
                EXPECT_LE(size[static_cast<std::size_t>(c)], 12);
            }
        }
        EXPECT_EQ(count_components8(s), ns);
    }
}

TEST(Skeleton, TwoByTwoBlockIsErased) {
    GrayImage g(6, 6);
    for (int y = 2; y <= 3; ++y)
        for (int x = 2; x <= 3; ++x) g.at(x, y) = 1.f;
    EXPECT_EQ(count_components8(skeletonize(g)), 0);
}

// ---------------------------------------------------------------------------
// HOG

TEST(Hog, LengthFor100SquareMatchesBlockCount) {
    std::size_t blocks = 0;
    for (int by = 0; by + 2 <= 50; ++by)
        for (int bx = 0; bx + 2 <= 50; ++bx) ++blocks;
    EXPECT_EQ(blocks * 2 * 2 * 9, 86436u);
    EXPECT_EQ(hog_length(100, 100), 86436u);
    Rng rng(1, {});
    GrayImage g(100, 100);
    for (auto& v : g.data) v = static_cast<float>(rng.uniform());
    EXPECT_EQ(hog(g).size(), 86436u);
}

TEST(Hog, LengthFormulaForDivisibleDims) {
    for (int w : {4, 6, 10, 32}) {
        for (int h : {4, 8, 14}) {
            GrayImage g(w, h, 0.3f);
            EXPECT_EQ(hog(g).size(), static_cast<std::size_t>((w / 2 - 1) * (h / 2 - 1) * 36)) << w << "x" << h;
        }
    }
    EXPECT_THROW(hog(GrayImage(9, 10)), InvalidArgument);
}

TEST(Hog, ConstantImageGivesZeros) {
    for (float v : hog(GrayImage(20, 20, 0.7f))) EXPECT_EQ(v, 0.f);
}

TEST(Hog, VerticalStepEdgeVotesIntoHorizontalGradientBin) {
    GrayImage g(20, 20);
    for (int y = 0; y < 20; ++y)
        for (int x = 10; x < 20; ++x) g.at(x, y) = 1.f;
    // per-pixel oracle: gx = I(x+1) - I(x-1) nonzero only at x = 9, 10; gy = 0
    double expected_mass = 0;
    for (int y = 0; y < 20; ++y)
        for (int x = 0; x < 20; ++x) {
            const double gx = g.at(std::min(x + 1, 19), y) - g.at(std::max(x - 1, 0), y);
            expected_mass += std::abs(gx);
        }
    const auto cells = hog_cells(g);
    const int bin = static_cast<int>(std::floor(unsigned_orientation(1, 0) / 20.0));
    double in_bin = 0, other = 0;
    for (int cy = 0; cy < cells.cells_y; ++cy)
        for (int cx = 0; cx < cells.cells_x; ++cx)
            for (int b = 0; b < cells.bins; ++b) (b == bin ? in_bin : other) += cells.at(cx, cy, b);
    EXPECT_EQ(bin, 0);
    EXPECT_NEAR(in_bin, expected_mass, 1e-9);
    EXPECT_EQ(other, 0.0);
}

TEST(Hog, BlockNormsAtMostOne) {
    Rng rng(2, {});
    GrayImage g(40, 30);
    for (auto& v : g.data) v = static_cast<float>(rng.uniform());
    const auto d = hog(g);
    for (std::size_t b = 0; b < d.size(); b += 36) {
        double ss = 0;
        for (std::size_t i = b; i < b + 36; ++i) ss += static_cast<double>(d[i]) * d[i];
        EXPECT_LE(std::sqrt(ss), 1 + 1e-6);
    }
}

// ---------------------------------------------------------------------------
// SIFT

TEST(Sift, ConstantImageHasNoKeypoints) { EXPECT_TRUE(sift(GrayImage(64, 64, 0.4f)).empty()); }

TEST(Sift, RejectsTinyImages) { EXPECT_THROW(sift(GrayImage(31, 64)), InvalidArgument); }

TEST(Sift, GaussianBlobFoundAtCenterAndScaleGrows) {
    auto strongest_scale = [](const std::vector<SiftKeypoint>& k) {
        const auto it = std::max_element(k.begin(), k.end(),
                                         [](const auto& a, const auto& b) { return a.response < b.response; });
        return it->scale;
    };
    const auto k4 = sift(gaussian_blob(96, 48, 48, 4));
    const auto k8 = sift(gaussian_blob(96, 48, 48, 8));
    ASSERT_FALSE(k4.empty());
    ASSERT_FALSE(k8.empty());
    double nearest = 1e9;
    for (const auto& k : k4) nearest = std::min(nearest, std::hypot(k.x - 48, k.y - 48));
    EXPECT_LE(nearest, 2.0);
    EXPECT_GT(strongest_scale(k8), strongest_scale(k4));
}

TEST(Sift, DescriptorsUnitNormAndDeterministic) {
    for (std::size_t i = 0; i < 10; ++i) {
        const auto& g = avatar_corpus()[i * 9];
        const auto a = sift(g), b = sift(g);
        ASSERT_EQ(a.size(), b.size());
        for (std::size_t k = 0; k < a.size(); ++k) {
            double ss = 0;
            for (float v : a[k].descriptor) ss += static_cast<double>(v) * v;
            EXPECT_NEAR(std::sqrt(ss), 1.0, 1e-6);
            EXPECT_GT(a[k].scale, 0);
            EXPECT_EQ(a[k].descriptor, b[k].descriptor);
            EXPECT_EQ(a[k].x, b[k].x);
        }
    }
}

TEST(Sift, MatchesSurviveQuarterTurn) {
    std::size_t total = 0, matched = 0;
    for (std::size_t i = 0; i < 5; ++i) {
        const auto& g = avatar_corpus()[i * 17];
        const auto a = sift(g), b = sift(rotate90(g));
        if (a.empty() || b.size() < 2) continue;
        for (const auto& ka : a) {
            double d1 = 1e18, d2 = 1e18;
            const SiftKeypoint* best = nullptr;
            for (const auto& kb : b) {
                const double d = descriptor_dist2(ka, kb);
                if (d < d1) {
                    d2 = d1;
                    d1 = d;
                    best = &kb;
                } else {
                    d2 = std::min(d2, d);
                }
            }
            ++total;
            const double ex = g.height - 1 - ka.y, ey = ka.x;
            if (std::sqrt(d1) < 0.8 * std::sqrt(d2) && std::hypot(best->x - ex, best->y - ey) <= 3.0) ++matched;
        }
    }
    ASSERT_GT(total, 20u);
    EXPECT_GE(static_cast<double>(matched) / static_cast<double>(total), 0.5) << matched << "/" << total;
}

// ---------------------------------------------------------------------------
// K-means and bag of words

TEST(Kmeans, TwoTightCloudsGiveCloudMeans) {
    Rng rng(3, {});
    FeatureMatrix x(40, 128);
    double mean_a[128] = {}, mean_b[128] = {};
    for (std::size_t r = 0; r < 40; ++r)
        for (std::size_t c = 0; c < 128; ++c) {
            const float v = static_cast<float>((r < 20 ? 0.0 : 5.0) + 1e-3 * rng.normal());
            x.at(r, c) = v;
            (r < 20 ? mean_a : mean_b)[c] += v / 20.0;
        }
    const auto cb = kmeans_fit(x, 2, 1);
    const int ia = cb.centroids(0, 0) < 2.5 ? 0 : 1;
    for (int c = 0; c < 128; ++c) {
        EXPECT_NEAR(cb.centroids(ia, c), mean_a[c], 1e-6);
        EXPECT_NEAR(cb.centroids(1 - ia, c), mean_b[c], 1e-6);
    }
}

TEST(Kmeans, AsManyClustersAsRowsGivesZeroInertia) {
    const auto x = random_matrix(15, 8, 4);
    EXPECT_NEAR(kmeans_fit(x, 15, 2).inertia, 0.0, 1e-12);
    EXPECT_THROW(kmeans_fit(x, 16, 2), InvalidArgument);
}

TEST(Kmeans, MoreClustersLowerInertia) {
    const auto x = random_matrix(600, 128, 5);
    EXPECT_LE(kmeans_fit(x, 60, 3).inertia, kmeans_fit(x, 30, 3).inertia);
}

TEST(Kmeans, InertiaMonotoneAndFixpointCentroidsAreMeans) {
    for (std::uint64_t seed : {6, 7, 8}) {
        auto x = random_matrix(300, 16, seed);
        for (std::size_t r = 0; r < x.rows; ++r) x.at(r, r % 16) += 6.f;
        const auto cb = kmeans_fit(x, 12, seed);
        for (std::size_t i = 1; i < cb.inertia_history.size(); ++i)
            EXPECT_LE(cb.inertia_history[i], cb.inertia_history[i - 1] * (1 + 1e-12));
        ASSERT_TRUE(cb.converged);
        // brute-force assignment and per-cluster means
        std::vector<std::vector<double>> sum(12, std::vector<double>(16, 0.0));
        std::vector<int> count(12, 0);
        for (std::size_t r = 0; r < x.rows; ++r) {
            int best = 0;
            double bd = 1e300;
            for (int j = 0; j < 12; ++j) {
                double d = 0;
                for (int c = 0; c < 16; ++c) d += std::pow(x.at(r, static_cast<std::size_t>(c)) - cb.centroids(j, c), 2);
                if (d < bd) {
                    bd = d;
                    best = j;
                }
            }
            ++count[static_cast<std::size_t>(best)];
            for (int c = 0; c < 16; ++c) sum[static_cast<std::size_t>(best)][static_cast<std::size_t>(c)] += x.at(r, static_cast<std::size_t>(c));
        }
        for (int j = 0; j < 12; ++j) {
            ASSERT_GT(count[static_cast<std::size_t>(j)], 0);
            for (int c = 0; c < 16; ++c)
                EXPECT_NEAR(cb.centroids(j, c), sum[static_cast<std::size_t>(j)][static_cast<std::size_t>(c)] / count[static_cast<std::size_t>(j)], 1e-6);
        }
    }
}

TEST(Kmeans, SameSeedSameCodebook) {
    const auto x = random_matrix(200, 128, 9);
    EXPECT_EQ(checksum(kmeans_fit(x, 20, 4)), checksum(kmeans_fit(x, 20, 4)));
}

TEST(Bow, EmptyAndSevenKeypoints) {
    const auto cb = kmeans_fit(random_matrix(100, 128, 10), 10, 1);
    const auto zero = bow_encode(cb, std::vector<SiftKeypoint>{});
    EXPECT_EQ(zero, std::vector<float>(10, 0.f));
    std::vector<SiftKeypoint> kps(7);
    Rng rng(11, {});
    for (auto& k : kps)
        for (auto& v : k.descriptor) v = static_cast<float>(rng.normal());
    const auto h = bow_encode(cb, kps);
    EXPECT_EQ(std::accumulate(h.begin(), h.end(), 0.f), 7.f);
}

TEST(Bow, DescriptorAtCentroidCountsThere) {
    const auto cb = kmeans_fit(random_matrix(100, 128, 12), 8, 2);
    SiftKeypoint k;
    for (int c = 0; c < 128; ++c) k.descriptor[static_cast<std::size_t>(c)] = static_cast<float>(cb.centroids(3, c));
    const auto h = bow_encode(cb, std::vector<SiftKeypoint>{k});
    for (int j = 0; j < 8; ++j) EXPECT_EQ(h[static_cast<std::size_t>(j)], j == 3 ? 1.f : 0.f);
}

TEST(Bow, MassConservationOnRandomCases) {
    Rng rng(13, {});
    const auto cb = kmeans_fit(random_matrix(200, 128, 14), 60, 3);
    for (int t = 0; t < 1000; ++t) {
        const std::size_t n = rng.below(40);
        FeatureMatrix d(n, 128);
        for (auto& v : d.data) v = static_cast<float>(rng.normal());
        const auto h = bow_encode(cb, d);
        ASSERT_EQ(h.size(), 60u);
        double s = 0;
        for (float v : h) {
            ASSERT_GE(v, 0.f);
            ASSERT_EQ(v, std::floor(v));
            s += v;
        }
        ASSERT_EQ(s, static_cast<double>(n));
    }
    EXPECT_THROW(bow_encode(cb, FeatureMatrix(2, 64)), InvalidArgument);
}

TEST(Bow, TiesGoToLowestIndex) {
    Codebook cb;
    cb.centroids = Eigen::MatrixXd::Zero(3, 128);
    cb.centroids(1, 0) = 1;
    cb.centroids(2, 0) = -1;
    SiftKeypoint k;
    EXPECT_EQ(bow_encode(cb, std::vector<SiftKeypoint>{k})[0], 1.f);
    cb.centroids(0, 0) = 5;
    EXPECT_EQ(bow_encode(cb, std::vector<SiftKeypoint>{k})[1], 1.f);
}

// ---------------------------------------------------------------------------
// Background subtraction

TEST(Bgsub, StaticSceneIsAllBackground) {
    Rng rng(15, {});
    RgbImage f(24, 24);
    for (auto& v : f.data) v = static_cast<float>(rng.uniform());
    const auto out = bg_subtract(std::vector<RgbImage>(6, f));
    for (float v : out.data) EXPECT_EQ(v, 0.f);
}

TEST(Bgsub, BrightSquareOnLastFrameIsForeground) {
    RgbImage bg(32, 32);
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x)
            for (int c = 0; c < 3; ++c) bg.data[(static_cast<std::size_t>(y) * 32 + x) * 3 + c] = 0.1f + 0.005f * x;
    std::vector<RgbImage> frames(5, bg);
    RgbImage last = bg;
    for (int y = 8; y < 18; ++y)
        for (int x = 12; x < 22; ++x)
            for (int c = 0; c < 3; ++c) last.data[(static_cast<std::size_t>(y) * 32 + x) * 3 + c] = 0.95f;
    frames.push_back(last);
    const auto out = bg_subtract(frames);
    const BgsubParams p;
    for (int y = 0; y < 32; ++y)
        for (int x = 0; x < 32; ++x) {
            // distance oracle: last pixel vs the five identical history samples
            double d2 = 0;
            for (int c = 0; c < 3; ++c) {
                const double d = last.data[(static_cast<std::size_t>(y) * 32 + x) * 3 + c] -
                                 bg.data[(static_cast<std::size_t>(y) * 32 + x) * 3 + c];
                d2 += d * d;
            }
            const bool fg = std::sqrt(d2) > p.threshold;
            EXPECT_EQ(fg, x >= 12 && x < 22 && y >= 8 && y < 18);
            if (fg) EXPECT_NEAR(out.at(x, y), 0.95f, 1e-6);
            else EXPECT_EQ(out.at(x, y), 0.f);
        }
}

TEST(Bgsub, RejectsShortClips) {
    EXPECT_THROW(bg_subtract(std::vector<RgbImage>(5, RgbImage(8, 8))), InvalidArgument);
    EXPECT_THROW(bgsub_window_start(5), InvalidArgument);
    EXPECT_EQ(bgsub_window_start(30), 10);
    EXPECT_EQ(bgsub_window_start(6), 0);
}

// ---------------------------------------------------------------------------
// Feature matrix files

TEST(FeatureMatrixFile, LayoutAndRoundTrip) {
    FeatureMatrix m(2, 3);
    m.data = {1.f, -2.5f, 3.f, 0.f, 1e-3f, 7.f};
    const std::string bytes = encode_fmx(m);
    ASSERT_EQ(bytes.size(), 4u + 4u + 4u + 6u * 4u);
    EXPECT_EQ(bytes.substr(0, 4), "FMX1");
    EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 2);
    EXPECT_EQ(static_cast<unsigned char>(bytes[8]), 3);
    float second;
    std::memcpy(&second, bytes.data() + 16, 4);
    EXPECT_EQ(second, -2.5f);
    EXPECT_EQ(decode_fmx(bytes), m);
    EXPECT_THROW(decode_fmx(bytes.substr(0, bytes.size() - 1)), IoError);
    EXPECT_THROW(decode_fmx("FMX2" + bytes.substr(4)), IoError);
}

TEST(FeatureMatrixFile, LabelsRoundTrip) {
    const std::vector<RowLabel> labels{{"camel_0_s00_c00", 0, 0}, {"lotus_3_s09_c04", 4, 3}};
    const auto text = encode_labels(labels);
    EXPECT_EQ(text, "clip_id,action,variant\ncamel_0_s00_c00,0,0\nlotus_3_s09_c04,4,3\n");
    EXPECT_EQ(decode_labels(text), labels);
}
