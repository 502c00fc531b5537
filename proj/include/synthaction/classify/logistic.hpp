#pragma once

// Multinomial logistic regression with an L2 penalty, trained by L-BFGS.
//
// Objective over n rows and k classes (intercepts unpenalized):
//   f(W, b) = (1/n) sum_i -log softmax(W x_i + b)[y_i] + ||W||^2 / (2 C n)

#include <cmath>
#include <deque>
#include <vector>

#include "synthaction/classify/scaler.hpp"
#include "synthaction/common.hpp"

namespace synthaction::classify {

struct LogisticParams {
    double inv_reg_c = 1.0;
    int max_iter = 100;
    double tol = 1e-5;  // on the gradient infinity norm
    bool operator==(const LogisticParams&) const = default;
};

struct LogisticModel {
    std::size_t dims = 0;
    int n_classes = 0;
    std::vector<double> weights;  // k x dims
    std::vector<double> bias;     // k
    int iterations = 0;
    double final_objective = 0;
    double final_grad_norm = 0;
};

/// Parameter layout: k*dims weights (row-major) followed by k intercepts.
struct LogisticProblem {
    const std::vector<double>* x = nullptr;  // rows x dims
    std::size_t rows = 0, dims = 0;
    const std::vector<int>* cls = nullptr;
    int n_classes = 0;
    double c = 1.0;

    std::size_t n_params() const { return static_cast<std::size_t>(n_classes) * (dims + 1); }

    double objective(const std::vector<double>& w, std::vector<double>* grad) const {
        const std::size_t k = static_cast<std::size_t>(n_classes), d = dims;
        const double* bias = &w[k * d];
        if (grad) grad->assign(w.size(), 0.0);
        std::vector<double> z(k);
        double loss = 0;
        for (std::size_t r = 0; r < rows; ++r) {
            const double* xr = &(*x)[r * d];
            double zmax = -1e300;
            for (std::size_t c = 0; c < k; ++c) {
                double s = bias[c];
                const double* wc = &w[c * d];
                for (std::size_t j = 0; j < d; ++j) s += wc[j] * xr[j];
                z[c] = s;
                zmax = std::max(zmax, s);
            }
            double sum = 0;
            for (std::size_t c = 0; c < k; ++c) sum += std::exp(z[c] - zmax);
            const double lse = zmax + std::log(sum);
            const std::size_t yr = static_cast<std::size_t>((*cls)[r]);
            loss += lse - z[yr];
            if (grad) {
                for (std::size_t c = 0; c < k; ++c) {
                    const double g = std::exp(z[c] - lse) - (c == yr ? 1.0 : 0.0);
                    double* gc = &(*grad)[c * d];
                    for (std::size_t j = 0; j < d; ++j) gc[j] += g * xr[j];
                    (*grad)[k * d + c] += g;
                }
            }
        }
        const double n = static_cast<double>(rows);
        double reg = 0;
        for (std::size_t i = 0; i < k * d; ++i) reg += w[i] * w[i];
        if (grad) {
            for (double& g : *grad) g /= n;
            for (std::size_t i = 0; i < k * d; ++i) (*grad)[i] += w[i] / (c * n);
        }
        return loss / n + reg / (2.0 * c * n);
    }
};

namespace detail {

inline double dotv(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double inf_norm(const std::vector<double>& a) {
    double m = 0;
    for (double v : a) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace detail

inline LogisticModel logistic_fit(const std::vector<double>& x, std::size_t rows, std::size_t dims,
                                  const std::vector<int>& cls, int n_classes, const LogisticParams& p) {
    SYNTHACTION_REQUIRE(p.inv_reg_c > 0, "logistic: C must be positive");
    SYNTHACTION_REQUIRE(p.max_iter >= 1, "logistic: max_iter must be >= 1");
    LogisticProblem prob{&x, rows, dims, &cls, n_classes, p.inv_reg_c};
    std::vector<double> w(prob.n_params(), 0.0), g;
    double f = prob.objective(w, &g);

    constexpr std::size_t memory = 10;
    std::deque<std::vector<double>> s_hist, y_hist;
    std::deque<double> rho_hist;
    int it = 0;
    for (; it < p.max_iter && detail::inf_norm(g) >= p.tol; ++it) {
        // two-loop recursion
        std::vector<double> q = g;
        std::vector<double> alpha(s_hist.size());
        for (std::size_t m = s_hist.size(); m-- > 0;) {
            alpha[m] = rho_hist[m] * detail::dotv(s_hist[m], q);
            for (std::size_t i = 0; i < q.size(); ++i) q[i] -= alpha[m] * y_hist[m][i];
        }
        double gamma = 1.0;
        if (!s_hist.empty()) gamma = detail::dotv(s_hist.back(), y_hist.back()) / detail::dotv(y_hist.back(), y_hist.back());
        for (double& v : q) v *= gamma;
        for (std::size_t m = 0; m < s_hist.size(); ++m) {
            const double beta = rho_hist[m] * detail::dotv(y_hist[m], q);
            for (std::size_t i = 0; i < q.size(); ++i) q[i] += s_hist[m][i] * (alpha[m] - beta);
        }
        std::vector<double> dir(q.size());
        for (std::size_t i = 0; i < q.size(); ++i) dir[i] = -q[i];
        double slope = detail::dotv(dir, g);
        if (!(slope < 0)) {  // not a descent direction: restart from steepest descent
            s_hist.clear();
            y_hist.clear();
            rho_hist.clear();
            for (std::size_t i = 0; i < dir.size(); ++i) dir[i] = -g[i];
            slope = detail::dotv(dir, g);
        }
        // Armijo backtracking
        double step = s_hist.empty() ? std::min(1.0, 1.0 / std::max(detail::inf_norm(g), 1e-12)) : 1.0;
        std::vector<double> wn(w.size()), gn;
        double fn = f;
        bool accepted = false;
        for (int bt = 0; bt < 40; ++bt) {
            for (std::size_t i = 0; i < w.size(); ++i) wn[i] = w[i] + step * dir[i];
            fn = prob.objective(wn, &gn);
            if (fn <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        std::vector<double> s(w.size()), yv(w.size());
        for (std::size_t i = 0; i < w.size(); ++i) {
            s[i] = wn[i] - w[i];
            yv[i] = gn[i] - g[i];
        }
        const double sy = detail::dotv(s, yv);
        if (sy > 1e-12) {
            s_hist.push_back(std::move(s));
            y_hist.push_back(std::move(yv));
            rho_hist.push_back(1.0 / sy);
            if (s_hist.size() > memory) {
                s_hist.pop_front();
                y_hist.pop_front();
                rho_hist.pop_front();
            }
        }
        w.swap(wn);
        g.swap(gn);
        f = fn;
    }
    LogisticModel m;
    m.dims = dims;
    m.n_classes = n_classes;
    const std::size_t kd = static_cast<std::size_t>(n_classes) * dims;
    m.weights.assign(w.begin(), w.begin() + static_cast<std::ptrdiff_t>(kd));
    m.bias.assign(w.begin() + static_cast<std::ptrdiff_t>(kd), w.end());
    m.iterations = it;
    m.final_objective = f;
    m.final_grad_norm = detail::inf_norm(g);
    return m;
}

inline std::vector<double> logistic_scores(const LogisticModel& m, const double* row) {
    std::vector<double> z(static_cast<std::size_t>(m.n_classes));
    for (std::size_t c = 0; c < z.size(); ++c) {
        double s = m.bias[c];
        for (std::size_t j = 0; j < m.dims; ++j) s += m.weights[c * m.dims + j] * row[j];
        z[c] = s;
    }
    return z;
}

/// Softmax of raw scores.
inline std::vector<double> softmax(const std::vector<double>& z) {
    double zmax = -1e300;
    for (double v : z) zmax = std::max(zmax, v);
    std::vector<double> p(z.size());
    double sum = 0;
    for (std::size_t i = 0; i < z.size(); ++i) sum += p[i] = std::exp(z[i] - zmax);
    for (double& v : p) v /= sum;
    return p;
}

inline void write_logistic(ByteWriter& w, const LogisticModel& m) {
    w.u64(m.dims);
    w.i32(m.n_classes);
    w.f64s(m.weights);
    w.f64s(m.bias);
    w.i32(m.iterations);
    w.f64(m.final_objective);
    w.f64(m.final_grad_norm);
}

inline LogisticModel read_logistic(ByteReader& r) {
    LogisticModel m;
    m.dims = r.u64();
    m.n_classes = r.i32();
    m.weights = r.f64s();
    m.bias = r.f64s();
    m.iterations = r.i32();
    m.final_objective = r.f64();
    m.final_grad_norm = r.f64();
    if (m.n_classes < 1 || m.weights.size() != m.dims * static_cast<std::size_t>(m.n_classes) ||
        m.bias.size() != static_cast<std::size_t>(m.n_classes))
        throw IoError("model file: inconsistent logistic blob");
    return m;
}

}  // namespace synthaction::classify
