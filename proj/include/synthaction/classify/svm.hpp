#pragma once

// One-vs-rest RBF support vector classifier. Each binary problem is solved
// with SMO using second-order working-set selection on a shared precomputed
// kernel matrix.

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "synthaction/classify/scaler.hpp"
#include "synthaction/common.hpp"

namespace synthaction::classify {

struct SvmParams {
    double c = 1.0;
    std::optional<double> gamma;  // nullopt: auto-scale
    int max_iter = 50;            // SMO working-set (pair) updates per binary problem
    double tol = 1e-3;
    bool operator==(const SvmParams&) const = default;
};

struct SvmModel {
    double gamma = 0;
    std::size_t dims = 0;
    std::vector<double> support;       // n_sv x dims, standardized
    std::vector<double> coef;          // n_classes x n_sv, alpha_i * y_i
    std::vector<double> rho;           // per class
    std::vector<int> sv_index;         // training row of each support vector
    std::vector<int> iterations;       // SMO iterations per class
    std::vector<std::vector<double>> alpha;  // per class, all training rows (not serialized)

    std::size_t n_sv() const { return dims ? support.size() / dims : 0; }
};

/// 1 / (dims * mean per-feature variance) of row-major data.
inline double auto_gamma(const std::vector<double>& x, std::size_t rows, std::size_t dims) {
    double total = 0;
    for (std::size_t c = 0; c < dims; ++c) {
        double m = 0, v = 0;
        for (std::size_t r = 0; r < rows; ++r) m += x[r * dims + c];
        m /= static_cast<double>(rows);
        for (std::size_t r = 0; r < rows; ++r) {
            const double d = x[r * dims + c] - m;
            v += d * d;
        }
        total += v / static_cast<double>(rows);
    }
    const double mean_var = total / static_cast<double>(dims);
    return mean_var > 0 ? 1.0 / (static_cast<double>(dims) * mean_var) : 1.0;
}

inline double rbf(const double* a, const double* b, std::size_t d, double gamma) {
    double s = 0;
    for (std::size_t i = 0; i < d; ++i) {
        const double t = a[i] - b[i];
        s += t * t;
    }
    return std::exp(-gamma * s);
}

namespace detail {

struct BinarySolution {
    std::vector<double> alpha;
    double rho = 0;
    int iterations = 0;
};

// SMO for min 0.5 a'Qa - e'a, 0 <= a <= C, y'a = 0 with Q_ij = y_i y_j K_ij.
inline BinarySolution smo(const std::vector<double>& kernel, const std::vector<signed char>& y, double c,
                          double tol, long max_iterations) {
    const std::size_t n = y.size();
    constexpr double tau = 1e-12;
    std::vector<double> a(n, 0.0), grad(n, -1.0);
    auto K = [&](std::size_t i, std::size_t j) { return kernel[i * n + j]; };
    auto up = [&](std::size_t t) { return (y[t] > 0 && a[t] < c) || (y[t] < 0 && a[t] > 0); };
    auto low = [&](std::size_t t) { return (y[t] > 0 && a[t] > 0) || (y[t] < 0 && a[t] < c); };
    BinarySolution sol;
    long it = 0;
    for (; it < max_iterations; ++it) {
        // i: maximal violating index in I_up (first on ties)
        double gmax = -std::numeric_limits<double>::infinity(), gmin2 = std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t = 0; t < n; ++t)
            if (up(t) && -y[t] * grad[t] > gmax) {
                gmax = -y[t] * grad[t];
                i = t;
            }
        if (i == n) break;
        std::size_t j = n;
        double best = std::numeric_limits<double>::infinity();
        for (std::size_t t = 0; t < n; ++t) {
            if (!low(t)) continue;
            const double v = -y[t] * grad[t];
            gmin2 = std::min(gmin2, v);
            const double b = gmax - v;
            if (b > 0) {
                double q = K(i, i) + K(t, t) - 2.0 * K(i, t);
                if (q <= 0) q = tau;
                const double obj = -(b * b) / q;
                if (obj < best) {
                    best = obj;
                    j = t;
                }
            }
        }
        if (gmax - gmin2 < tol || j == n) break;

        const double old_ai = a[i], old_aj = a[j];
        const double kii = K(i, i), kjj = K(j, j), kij = K(i, j);
        if (y[i] != y[j]) {
            double q = kii + kjj - 2.0 * kij;
            if (q <= 0) q = tau;
            const double delta = (-grad[i] - grad[j]) / q;
            const double diff = a[i] - a[j];
            a[i] += delta;
            a[j] += delta;
            if (diff > 0) {
                if (a[j] < 0) {
                    a[j] = 0;
                    a[i] = diff;
                }
            } else if (a[i] < 0) {
                a[i] = 0;
                a[j] = -diff;
            }
            if (diff > 0) {
                if (a[i] > c) {
                    a[i] = c;
                    a[j] = c - diff;
                }
            } else if (a[j] > c) {
                a[j] = c;
                a[i] = c + diff;
            }
        } else {
            double q = kii + kjj - 2.0 * kij;
            if (q <= 0) q = tau;
            const double delta = (grad[i] - grad[j]) / q;
            const double sum = a[i] + a[j];
            a[i] -= delta;
            a[j] += delta;
            if (sum > c) {
                if (a[i] > c) {
                    a[i] = c;
                    a[j] = sum - c;
                }
            } else if (a[j] < 0) {
                a[j] = 0;
                a[i] = sum;
            }
            if (sum > c) {
                if (a[j] > c) {
                    a[j] = c;
                    a[i] = sum - c;
                }
            } else if (a[i] < 0) {
                a[i] = 0;
                a[j] = sum;
            }
        }
        const double dai = a[i] - old_ai, daj = a[j] - old_aj;
        for (std::size_t t = 0; t < n; ++t)
            grad[t] += y[t] * (y[i] * K(t, i) * dai + y[j] * K(t, j) * daj);
    }
    sol.iterations = static_cast<int>(it);

    // rho: mean of y_t * grad_t over free vectors, else midpoint of the bounds
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity(), sum = 0;
    int nfree = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * grad[t];
        if (a[t] >= c) {
            if (y[t] < 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else if (a[t] <= 0) {
            if (y[t] > 0) ub = std::min(ub, yg);
            else lb = std::max(lb, yg);
        } else {
            ++nfree;
            sum += yg;
        }
    }
    sol.rho = nfree > 0 ? sum / nfree : (std::isfinite(ub) && std::isfinite(lb) ? 0.5 * (ub + lb) : 0.0);
    sol.alpha = std::move(a);
    return sol;
}

}  // namespace detail

/// Trains on standardized row-major data; `cls` holds class indices 0..k-1.
inline SvmModel svm_fit(const std::vector<double>& x, std::size_t rows, std::size_t dims, const std::vector<int>& cls,
                        int n_classes, const SvmParams& p, unsigned jobs = 1) {
    SYNTHACTION_REQUIRE(p.c > 0, "svm: C must be positive");
    SYNTHACTION_REQUIRE(p.max_iter >= 1, "svm: max_iter must be >= 1");
    SYNTHACTION_REQUIRE(!p.gamma || *p.gamma > 0, "svm: gamma must be positive");
    SvmModel m;
    m.dims = dims;
    m.gamma = p.gamma ? *p.gamma : auto_gamma(x, rows, dims);
    std::vector<double> kernel(rows * rows);
    parallel_for(rows, jobs, [&](std::size_t i) {
        for (std::size_t j = 0; j <= i; ++j) kernel[i * rows + j] = rbf(&x[i * dims], &x[j * dims], dims, m.gamma);
    });
    for (std::size_t i = 0; i < rows; ++i)
        for (std::size_t j = i + 1; j < rows; ++j) kernel[i * rows + j] = kernel[j * rows + i];

    const long cap = p.max_iter;
    std::vector<detail::BinarySolution> sols(static_cast<std::size_t>(n_classes));
    parallel_for(static_cast<std::size_t>(n_classes), jobs, [&](std::size_t k) {
        std::vector<signed char> y(rows);
        for (std::size_t i = 0; i < rows; ++i) y[i] = cls[i] == static_cast<int>(k) ? 1 : -1;
        sols[k] = detail::smo(kernel, y, p.c, p.tol, cap);
    });

    std::vector<int> sv_of_row(rows, -1);
    for (std::size_t i = 0; i < rows; ++i)
        for (const auto& s : sols)
            if (s.alpha[i] > 0) {
                sv_of_row[i] = static_cast<int>(m.sv_index.size());
                m.sv_index.push_back(static_cast<int>(i));
                m.support.insert(m.support.end(), &x[i * dims], &x[i * dims] + dims);
                break;
            }
    const std::size_t nsv = m.sv_index.size();
    m.coef.assign(static_cast<std::size_t>(n_classes) * nsv, 0.0);
    for (int k = 0; k < n_classes; ++k) {
        const auto& s = sols[static_cast<std::size_t>(k)];
        for (std::size_t i = 0; i < rows; ++i)
            if (sv_of_row[i] >= 0) {
                const double yi = cls[i] == k ? 1.0 : -1.0;
                m.coef[static_cast<std::size_t>(k) * nsv + static_cast<std::size_t>(sv_of_row[i])] = s.alpha[i] * yi;
            }
        m.rho.push_back(s.rho);
        m.iterations.push_back(s.iterations);
        m.alpha.push_back(s.alpha);
    }
    return m;
}

/// One-vs-rest margins of a standardized row.
inline std::vector<double> svm_decision(const SvmModel& m, const double* row) {
    const std::size_t nsv = m.n_sv(), k = m.rho.size();
    std::vector<double> kv(nsv);
    for (std::size_t s = 0; s < nsv; ++s) kv[s] = rbf(&m.support[s * m.dims], row, m.dims, m.gamma);
    std::vector<double> out(k);
    for (std::size_t c = 0; c < k; ++c) {
        double f = -m.rho[c];
        for (std::size_t s = 0; s < nsv; ++s) f += m.coef[c * nsv + s] * kv[s];
        out[c] = f;
    }
    return out;
}

inline void write_svm(ByteWriter& w, const SvmModel& m) {
    w.f64(m.gamma);
    w.u64(m.dims);
    w.f64s(m.support);
    w.f64s(m.coef);
    w.f64s(m.rho);
    w.i32s(m.sv_index);
    w.i32s(m.iterations);
}

inline SvmModel read_svm(ByteReader& r) {
    SvmModel m;
    m.gamma = r.f64();
    m.dims = r.u64();
    m.support = r.f64s();
    m.coef = r.f64s();
    m.rho = r.f64s();
    m.sv_index = r.i32s();
    m.iterations = r.i32s();
    if (m.dims == 0 || m.support.size() % m.dims || m.coef.size() != m.rho.size() * m.n_sv())
        throw IoError("model file: inconsistent SVM blob");
    return m;
}

}  // namespace synthaction::classify
