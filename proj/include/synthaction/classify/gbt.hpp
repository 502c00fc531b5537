#pragma once

// Multiclass gradient-boosted regression trees with softmax loss.
//
// Scores start at the log class priors. Each round fits one tree per class to
// the residuals y_k - p_k with exact greedy variance-reduction splits, grown
// level by level over presorted feature columns. Leaves take the one-step
// Newton value (K-1)/K * sum r / sum |r|(1-|r|), shrunk by the learning rate.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "synthaction/classify/scaler.hpp"
#include "synthaction/common.hpp"
#include "synthaction/features/feature_matrix.hpp"

namespace synthaction::classify {

struct GbtParams {
    int n_estimators = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    int early_stopping_rounds = 0;  // 0: off; needs validation data when on
    bool operator==(const GbtParams&) const = default;
};

struct RegressionTree {
    std::vector<int> feature;  // -1 marks a leaf
    std::vector<double> threshold;
    std::vector<int> left, right;
    std::vector<double> value;

    double eval(const float* row) const {
        int n = 0;
        while (feature[static_cast<std::size_t>(n)] >= 0) {
            const auto i = static_cast<std::size_t>(n);
            n = row[feature[i]] <= threshold[i] ? left[i] : right[i];
        }
        return value[static_cast<std::size_t>(n)];
    }
};

struct GbtModel {
    std::size_t dims = 0;
    int n_classes = 0;
    std::vector<double> init;               // log priors
    std::vector<RegressionTree> trees;      // round-major: trees[round * K + k]
    std::vector<double> train_loss;         // before round 1, then after each round
    std::vector<double> val_loss;           // when early stopping is on

    int rounds() const { return n_classes ? static_cast<int>(trees.size()) / n_classes : 0; }
};

/// Mean multiclass log-loss of raw scores F (rows x K).
inline double softmax_log_loss(const std::vector<double>& f, const std::vector<int>& cls, int k) {
    double total = 0;
    const auto K = static_cast<std::size_t>(k);
    for (std::size_t r = 0; r < cls.size(); ++r) {
        const double* fr = &f[r * K];
        const double m = *std::max_element(fr, fr + K);
        double s = 0;
        for (std::size_t c = 0; c < K; ++c) s += std::exp(fr[c] - m);
        total += m + std::log(s) - fr[static_cast<std::size_t>(cls[r])];
    }
    return cls.empty() ? 0.0 : total / static_cast<double>(cls.size());
}

namespace detail {

// Per-feature row order and values, sorted ascending (stable on row index).
struct Presorted {
    std::size_t rows = 0, dims = 0;
    std::vector<int> order;     // dims x rows
    std::vector<float> values;  // dims x rows

    Presorted(const features::FeatureMatrix& x, unsigned jobs) : rows(x.rows), dims(x.cols) {
        order.resize(rows * dims);
        values.resize(rows * dims);
        parallel_for(dims, jobs, [&](std::size_t f) {
            int* o = &order[f * rows];
            std::iota(o, o + rows, 0);
            std::stable_sort(o, o + rows, [&](int a, int b) {
                return x.at(static_cast<std::size_t>(a), f) < x.at(static_cast<std::size_t>(b), f);
            });
            for (std::size_t i = 0; i < rows; ++i) values[f * rows + i] = x.at(static_cast<std::size_t>(o[i]), f);
        });
    }
};

struct SplitChoice {
    double gain = 0;
    int feature = -1;
    double threshold = 0;
};

// Grows one tree on residuals `res`; `leaf_of` receives each row's leaf node.
inline RegressionTree grow_tree(const Presorted& ps, const std::vector<double>& res, int max_depth, int n_classes,
                                double learning_rate, std::vector<int>& leaf_of) {
    const std::size_t n = ps.rows;
    RegressionTree t;
    auto add_node = [&] {
        t.feature.push_back(-1);
        t.threshold.push_back(0);
        t.left.push_back(-1);
        t.right.push_back(-1);
        t.value.push_back(0);
        return static_cast<int>(t.feature.size()) - 1;
    };
    add_node();
    std::vector<int> node_of(n, 0);
    std::vector<int> level_nodes{0};

    for (int depth = 0; depth < max_depth && !level_nodes.empty(); ++depth) {
        const std::size_t m = level_nodes.size();
        std::vector<int> slot(t.feature.size(), -1);
        for (std::size_t i = 0; i < m; ++i) slot[static_cast<std::size_t>(level_nodes[i])] = static_cast<int>(i);
        std::vector<double> tot_s(m, 0.0);
        std::vector<long> tot_n(m, 0);
        std::vector<int> row_slot(n, -1);
        for (std::size_t r = 0; r < n; ++r) {
            const int s = node_of[r] >= 0 ? slot[static_cast<std::size_t>(node_of[r])] : -1;
            row_slot[r] = s;
            if (s >= 0) {
                tot_s[static_cast<std::size_t>(s)] += res[r];
                ++tot_n[static_cast<std::size_t>(s)];
            }
        }
        std::vector<SplitChoice> best(m);
        std::vector<double> acc_s(m);
        std::vector<long> acc_n(m);
        std::vector<float> last(m);
        for (std::size_t f = 0; f < ps.dims; ++f) {
            std::fill(acc_s.begin(), acc_s.end(), 0.0);
            std::fill(acc_n.begin(), acc_n.end(), 0L);
            const int* ord = &ps.order[f * n];
            const float* val = &ps.values[f * n];
            for (std::size_t i = 0; i < n; ++i) {
                const int s = row_slot[static_cast<std::size_t>(ord[i])];
                if (s < 0) continue;
                const auto su = static_cast<std::size_t>(s);
                if (acc_n[su] > 0 && val[i] > last[su]) {
                    const double sl = acc_s[su], sr = tot_s[su] - sl;
                    const double nl = static_cast<double>(acc_n[su]), nr = static_cast<double>(tot_n[su] - acc_n[su]);
                    const double gain = sl * sl / nl + sr * sr / nr - tot_s[su] * tot_s[su] / static_cast<double>(tot_n[su]);
                    if (gain > best[su].gain + 1e-12 * std::abs(best[su].gain)) {
                        best[su].gain = gain;
                        best[su].feature = static_cast<int>(f);
                        best[su].threshold = 0.5 * (static_cast<double>(last[su]) + static_cast<double>(val[i]));
                        // midpoint of two adjacent floats may round up to the larger one
                        if (!(best[su].threshold < val[i])) best[su].threshold = last[su];
                    }
                }
                acc_s[su] += res[static_cast<std::size_t>(ord[i])];
                ++acc_n[su];
                last[su] = val[i];
            }
        }
        std::vector<int> next;
        for (std::size_t i = 0; i < m; ++i) {
            if (best[i].feature < 0 || !(best[i].gain > 0)) continue;
            const auto nd = static_cast<std::size_t>(level_nodes[i]);
            const int l = add_node(), r = add_node();
            t.feature[nd] = best[i].feature;
            t.threshold[nd] = best[i].threshold;
            t.left[nd] = l;
            t.right[nd] = r;
            next.push_back(l);
            next.push_back(r);
        }
        if (next.empty()) break;
        // route rows of split nodes using the presorted column values
        for (std::size_t i = 0; i < m; ++i) {
            const auto nd = static_cast<std::size_t>(level_nodes[i]);
            if (t.feature[nd] < 0) continue;
            const auto f = static_cast<std::size_t>(t.feature[nd]);
            const int* ord = &ps.order[f * n];
            const float* val = &ps.values[f * n];
            for (std::size_t k = 0; k < n; ++k) {
                const auto r = static_cast<std::size_t>(ord[k]);
                if (node_of[r] != static_cast<int>(nd)) continue;
                node_of[r] = val[k] <= t.threshold[nd] ? t.left[nd] : t.right[nd];
            }
        }
        level_nodes = std::move(next);
    }

    // Newton leaf values
    const double kf = static_cast<double>(n_classes);
    std::vector<double> num(t.feature.size(), 0.0), den(t.feature.size(), 0.0);
    for (std::size_t r = 0; r < n; ++r) {
        const auto nd = static_cast<std::size_t>(node_of[r]);
        num[nd] += res[r];
        den[nd] += std::abs(res[r]) * (1.0 - std::abs(res[r]));
    }
    for (std::size_t nd = 0; nd < t.feature.size(); ++nd) {
        if (t.feature[nd] >= 0) continue;
        const double v = den[nd] < 1e-150 ? 0.0 : (kf - 1.0) / kf * num[nd] / den[nd];
        t.value[nd] = learning_rate * v;
    }
    leaf_of = std::move(node_of);
    return t;
}

inline void softmax_rows(const std::vector<double>& f, std::size_t rows, std::size_t k, std::vector<double>& p) {
    p.resize(rows * k);
    for (std::size_t r = 0; r < rows; ++r) {
        const double* fr = &f[r * k];
        const double m = *std::max_element(fr, fr + k);
        double s = 0;
        for (std::size_t c = 0; c < k; ++c) s += p[r * k + c] = std::exp(fr[c] - m);
        for (std::size_t c = 0; c < k; ++c) p[r * k + c] /= s;
    }
}

}  // namespace detail

/// Raw per-class scores of one row.
inline std::vector<double> gbt_scores(const GbtModel& m, const float* row) {
    std::vector<double> f(m.init);
    const auto K = static_cast<std::size_t>(m.n_classes);
    for (std::size_t t = 0; t < m.trees.size(); ++t) f[t % K] += m.trees[t].eval(row);
    return f;
}

/// `val_x`/`val_cls` are only consulted when early stopping is on.
inline GbtModel gbt_fit(const features::FeatureMatrix& x, const std::vector<int>& cls, int n_classes,
                        const GbtParams& p, unsigned jobs = 1, const features::FeatureMatrix* val_x = nullptr,
                        const std::vector<int>* val_cls = nullptr) {
    SYNTHACTION_REQUIRE(p.n_estimators >= 1, "gbt: n_estimators must be >= 1");
    SYNTHACTION_REQUIRE(p.max_depth >= 1, "gbt: max_depth must be >= 1");
    SYNTHACTION_REQUIRE(p.learning_rate >= 0, "gbt: learning_rate must be >= 0");
    SYNTHACTION_REQUIRE(p.early_stopping_rounds >= 0, "gbt: early_stopping_rounds must be >= 0");
    const bool early = p.early_stopping_rounds > 0;
    if (early)
        SYNTHACTION_REQUIRE(val_x && val_cls && val_x->rows == val_cls->size() && val_x->rows > 0 && val_x->cols == x.cols,
                            "gbt: early stopping needs a validation set");
    const std::size_t n = x.rows, K = static_cast<std::size_t>(n_classes);
    GbtModel m;
    m.dims = x.cols;
    m.n_classes = n_classes;
    m.init.assign(K, 0.0);
    {
        std::vector<double> count(K, 0.0);
        for (int c : cls) count[static_cast<std::size_t>(c)] += 1;
        for (std::size_t c = 0; c < K; ++c) m.init[c] = std::log(std::max(count[c], 1e-300) / static_cast<double>(n));
    }
    std::vector<double> f(n * K), prob;
    for (std::size_t r = 0; r < n; ++r) std::copy(m.init.begin(), m.init.end(), &f[r * K]);
    std::vector<double> fv;
    if (early) {
        fv.resize(val_x->rows * K);
        for (std::size_t r = 0; r < val_x->rows; ++r) std::copy(m.init.begin(), m.init.end(), &fv[r * K]);
        m.val_loss.push_back(softmax_log_loss(fv, *val_cls, n_classes));
    }
    m.train_loss.push_back(softmax_log_loss(f, cls, n_classes));

    const detail::Presorted ps(x, jobs);
    int best_round = 0;
    for (int round = 0; round < p.n_estimators; ++round) {
        detail::softmax_rows(f, n, K, prob);
        std::vector<RegressionTree> round_trees(K);
        std::vector<std::vector<int>> leaves(K);
        parallel_for(K, jobs, [&](std::size_t k) {
            std::vector<double> res(n);
            for (std::size_t r = 0; r < n; ++r)
                res[r] = (cls[r] == static_cast<int>(k) ? 1.0 : 0.0) - prob[r * K + k];
            round_trees[k] = detail::grow_tree(ps, res, p.max_depth, n_classes, p.learning_rate, leaves[k]);
        });
        for (std::size_t k = 0; k < K; ++k) {
            for (std::size_t r = 0; r < n; ++r)
                f[r * K + k] += round_trees[k].value[static_cast<std::size_t>(leaves[k][r])];
            m.trees.push_back(std::move(round_trees[k]));
        }
        m.train_loss.push_back(softmax_log_loss(f, cls, n_classes));
        if (early) {
            const std::size_t first = m.trees.size() - K;
            for (std::size_t r = 0; r < val_x->rows; ++r)
                for (std::size_t k = 0; k < K; ++k) fv[r * K + k] += m.trees[first + k].eval(val_x->row(r));
            m.val_loss.push_back(softmax_log_loss(fv, *val_cls, n_classes));
            if (m.val_loss.back() < m.val_loss[static_cast<std::size_t>(best_round)]) best_round = round + 1;
            if (round + 1 - best_round >= p.early_stopping_rounds) break;
        }
    }
    if (early) {
        m.trees.resize(static_cast<std::size_t>(best_round) * K);
        m.train_loss.resize(static_cast<std::size_t>(best_round) + 1);
    }
    return m;
}

inline void write_gbt(ByteWriter& w, const GbtModel& m) {
    w.u64(m.dims);
    w.i32(m.n_classes);
    w.f64s(m.init);
    w.u64(m.trees.size());
    for (const auto& t : m.trees) {
        w.i32s(t.feature);
        w.f64s(t.threshold);
        w.i32s(t.left);
        w.i32s(t.right);
        w.f64s(t.value);
    }
    w.f64s(m.train_loss);
    w.f64s(m.val_loss);
}

inline GbtModel read_gbt(ByteReader& r) {
    GbtModel m;
    m.dims = r.u64();
    m.n_classes = r.i32();
    m.init = r.f64s();
    const std::uint64_t nt = r.u64();
    if (m.n_classes < 1 || m.init.size() != static_cast<std::size_t>(m.n_classes) || nt % m.init.size())
        throw IoError("model file: inconsistent GBT blob");
    for (std::uint64_t i = 0; i < nt; ++i) {
        RegressionTree t;
        t.feature = r.i32s();
        t.threshold = r.f64s();
        t.left = r.i32s();
        t.right = r.i32s();
        t.value = r.f64s();
        const std::size_t sz = t.feature.size();
        if (sz == 0 || t.threshold.size() != sz || t.left.size() != sz || t.right.size() != sz || t.value.size() != sz)
            throw IoError("model file: inconsistent GBT tree");
        for (std::size_t k = 0; k < sz; ++k)
            if (t.feature[k] >= 0 && (static_cast<std::size_t>(t.feature[k]) >= m.dims || t.left[k] <= static_cast<int>(k) ||
                                      t.right[k] <= static_cast<int>(k) || static_cast<std::size_t>(t.left[k]) >= sz ||
                                      static_cast<std::size_t>(t.right[k]) >= sz))
                throw IoError("model file: malformed GBT tree");
        m.trees.push_back(std::move(t));
    }
    m.train_loss = r.f64s();
    m.val_loss = r.f64s();
    return m;
}

}  // namespace synthaction::classify
