#pragma once

// Principal component analysis on FeatureMatrix rows.
//
// When dims <= rows the covariance matrix is diagonalized directly; otherwise
// the (rows x rows) Gram matrix of the centered data is, and components are
// mapped back through the data. Either way the mean-centered data is never
// materialized: it is streamed in column blocks.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "synthaction/common.hpp"
#include "synthaction/features/feature_matrix.hpp"

namespace synthaction::features {

inline constexpr int kDefaultPcaComponents = 256;

struct PcaModel {
    std::vector<double> mean;
    Eigen::MatrixXd components;  // k x dims, orthonormal rows
    std::vector<double> eigenvalues;  // descending
    double total_variance = 0;  // trace of the sample covariance

    std::size_t dims() const { return mean.size(); }
    int k() const { return static_cast<int>(components.rows()); }
};

namespace detail {

inline constexpr std::size_t kPcaBlock = 2048;

// Centered column block [c0, c1) of m as a rows x (c1 - c0) matrix.
inline Eigen::MatrixXd centered_block(const FeatureMatrix& m, const std::vector<double>& mean,
                                      std::size_t c0, std::size_t c1) {
    Eigen::MatrixXd b(static_cast<Eigen::Index>(m.rows), static_cast<Eigen::Index>(c1 - c0));
    for (std::size_t r = 0; r < m.rows; ++r) {
        const float* src = m.row(r);
        for (std::size_t c = c0; c < c1; ++c)
            b(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c - c0)) = src[c] - mean[c];
    }
    return b;
}

// Largest-magnitude entry positive (first one on ties).
inline void fix_sign(Eigen::Ref<Eigen::RowVectorXd, 0, Eigen::InnerStride<>> v) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (std::abs(v(i)) > std::abs(v(best))) best = i;
    if (v(best) < 0) v = -v;
}

// Modified Gram-Schmidt over rows; rows whose residual is negligible are
// replaced by the first standard basis vector that is independent of the
// rows before them.
inline void orthonormalize_rows(Eigen::MatrixXd& c, const std::vector<bool>& trusted) {
    const Eigen::Index k = c.rows(), d = c.cols();
    Eigen::Index next_basis = 0;
    for (Eigen::Index i = 0; i < k; ++i) {
        auto reduce = [&](Eigen::RowVectorXd v) {
            for (int pass = 0; pass < 2; ++pass)
                for (Eigen::Index j = 0; j < i; ++j) v -= v.dot(c.row(j)) * c.row(j);
            return v;
        };
        Eigen::RowVectorXd v = reduce(c.row(i));
        double n = v.norm();
        if (!trusted[static_cast<std::size_t>(i)] || n < 1e-6) {
            for (; next_basis < d; ++next_basis) {
                Eigen::RowVectorXd e = Eigen::RowVectorXd::Zero(d);
                e(next_basis) = 1.0;
                v = reduce(e);
                n = v.norm();
                if (n > 1e-6) {
                    ++next_basis;
                    break;
                }
            }
            SYNTHACTION_REQUIRE(n > 1e-6, "pca: cannot complete orthonormal basis");
        }
        c.row(i) = v / n;
    }
}

}  // namespace detail

/// Fits the top-k principal components of the rows of x.
inline PcaModel pca_fit(const FeatureMatrix& x, int k = kDefaultPcaComponents) {
    SYNTHACTION_REQUIRE(x.rows >= 2, "pca_fit: need at least 2 rows");
    SYNTHACTION_REQUIRE(k >= 1 && static_cast<std::size_t>(k) <= std::min(x.rows, x.cols),
                        "pca_fit: k must be in [1, min(rows, dims)]");
    const std::size_t n = x.rows, d = x.cols;
    PcaModel model;
    model.mean.assign(d, 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const float* src = x.row(r);
        for (std::size_t c = 0; c < d; ++c) model.mean[c] += src[c];
    }
    for (double& v : model.mean) v /= static_cast<double>(n);

    const double denom = static_cast<double>(n - 1);
    const bool use_cov = d <= n;
    const Eigen::Index m = static_cast<Eigen::Index>(use_cov ? d : n);
    Eigen::MatrixXd scatter = Eigen::MatrixXd::Zero(m, m);
    for (std::size_t c0 = 0; c0 < d; c0 += detail::kPcaBlock) {
        const std::size_t c1 = std::min(d, c0 + detail::kPcaBlock);
        const Eigen::MatrixXd b = detail::centered_block(x, model.mean, c0, c1);
        if (use_cov) {
            for (std::size_t c2 = 0; c2 < d; c2 += detail::kPcaBlock) {
                const std::size_t c3 = std::min(d, c2 + detail::kPcaBlock);
                const Eigen::MatrixXd b2 = c2 == c0 ? b : detail::centered_block(x, model.mean, c2, c3);
                scatter.block(static_cast<Eigen::Index>(c0), static_cast<Eigen::Index>(c2),
                              static_cast<Eigen::Index>(c1 - c0), static_cast<Eigen::Index>(c3 - c2)) =
                    b.transpose() * b2;
            }
        } else {
            scatter.selfadjointView<Eigen::Lower>().rankUpdate(b);
        }
    }
    if (!use_cov) scatter = scatter.selfadjointView<Eigen::Lower>();
    scatter /= denom;
    model.total_variance = scatter.trace();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(scatter);
    SYNTHACTION_REQUIRE(eig.info() == Eigen::Success, "pca_fit: eigen-decomposition failed");
    const Eigen::VectorXd& vals = eig.eigenvalues();  // ascending
    const Eigen::MatrixXd& vecs = eig.eigenvectors();
    const double lmax = std::max(0.0, vals(m - 1));
    const double floor = std::max(lmax * 1e-10, 1e-300);

    model.components.resize(k, static_cast<Eigen::Index>(d));
    std::vector<bool> trusted(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        const Eigen::Index src = m - 1 - i;
        const double lambda = std::max(0.0, vals(src));
        trusted[static_cast<std::size_t>(i)] = lambda > floor;
        model.eigenvalues.push_back(trusted[static_cast<std::size_t>(i)] ? lambda : 0.0);
        if (use_cov) model.components.row(i) = vecs.col(src).transpose();
    }
    if (!use_cov) {
        // u_i = Xc^T v_i / sqrt((n - 1) lambda_i)
        Eigen::MatrixXd v(static_cast<Eigen::Index>(n), k);
        for (int i = 0; i < k; ++i) {
            const double lambda = model.eigenvalues[static_cast<std::size_t>(i)];
            v.col(i) = vecs.col(m - 1 - i) * (lambda > 0 ? 1.0 / std::sqrt(denom * lambda) : 0.0);
        }
        for (std::size_t c0 = 0; c0 < d; c0 += detail::kPcaBlock) {
            const std::size_t c1 = std::min(d, c0 + detail::kPcaBlock);
            const Eigen::MatrixXd b = detail::centered_block(x, model.mean, c0, c1);
            model.components.middleCols(static_cast<Eigen::Index>(c0), static_cast<Eigen::Index>(c1 - c0)) =
                v.transpose() * b;
        }
    }
    detail::orthonormalize_rows(model.components, trusted);
    for (int i = 0; i < k; ++i) detail::fix_sign(model.components.row(i));
    return model;
}

inline std::vector<double> pca_project(const PcaModel& model, const std::vector<double>& row) {
    SYNTHACTION_REQUIRE(row.size() == model.dims(), "pca_project: dimension mismatch");
    Eigen::VectorXd centered(static_cast<Eigen::Index>(row.size()));
    for (std::size_t i = 0; i < row.size(); ++i) centered(static_cast<Eigen::Index>(i)) = row[i] - model.mean[i];
    const Eigen::VectorXd p = model.components * centered;
    return {p.data(), p.data() + p.size()};
}

/// Projects every row; the result has k columns.
inline FeatureMatrix pca_project(const PcaModel& model, const FeatureMatrix& x) {
    SYNTHACTION_REQUIRE(x.cols == model.dims(), "pca_project: dimension mismatch");
    const std::size_t d = x.cols;
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(x.rows), model.k());
    for (std::size_t c0 = 0; c0 < d; c0 += detail::kPcaBlock) {
        const std::size_t c1 = std::min(d, c0 + detail::kPcaBlock);
        acc += detail::centered_block(x, model.mean, c0, c1) *
               model.components.middleCols(static_cast<Eigen::Index>(c0), static_cast<Eigen::Index>(c1 - c0))
                   .transpose();
    }
    FeatureMatrix out(x.rows, static_cast<std::size_t>(model.k()));
    for (std::size_t r = 0; r < x.rows; ++r)
        for (int c = 0; c < model.k(); ++c)
            out.at(r, static_cast<std::size_t>(c)) = static_cast<float>(acc(static_cast<Eigen::Index>(r), c));
    return out;
}

/// Maps projection coefficients back to input space.
inline std::vector<double> pca_reconstruct(const PcaModel& model, const std::vector<double>& coeffs) {
    SYNTHACTION_REQUIRE(coeffs.size() == static_cast<std::size_t>(model.k()), "pca_reconstruct: length mismatch");
    const Eigen::Map<const Eigen::VectorXd> c(coeffs.data(), static_cast<Eigen::Index>(coeffs.size()));
    const Eigen::VectorXd r = model.components.transpose() * c;
    std::vector<double> out(model.dims());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = r(static_cast<Eigen::Index>(i)) + model.mean[i];
    return out;
}

/// First `k` components of a fitted model.
inline PcaModel pca_truncate(const PcaModel& model, int k) {
    SYNTHACTION_REQUIRE(k >= 1 && k <= model.k(), "pca_truncate: bad k");
    PcaModel out = model;
    out.components = model.components.topRows(k);
    out.eigenvalues.resize(static_cast<std::size_t>(k));
    return out;
}

inline std::uint64_t checksum(const PcaModel& m) {
    Fnv1a h;
    h.update(m.mean.data(), m.mean.size() * sizeof(double));
    h.update(m.components.data(), static_cast<std::size_t>(m.components.size()) * sizeof(double));
    h.update(m.eigenvalues.data(), m.eigenvalues.size() * sizeof(double));
    return h.digest();
}

}  // namespace synthaction::features
