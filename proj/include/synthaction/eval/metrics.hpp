#pragma once

// Classification metrics over a fixed class list.

#include <string>
#include <vector>

#include "synthaction/common.hpp"

namespace synthaction::eval {

struct ClassStats {
    double precision = 0, recall = 0, f1 = 0;
    long support = 0;
};

struct Metrics {
    std::vector<int> classes;              // label values, ascending
    std::vector<std::vector<long>> confusion;  // [true][predicted]
    std::vector<ClassStats> per_class;
    double accuracy = 0;
    double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
    double weighted_precision = 0, weighted_recall = 0, weighted_f1 = 0;
    long total = 0;
};

/// `classes` fixes the confusion layout; every truth and prediction must be in it.
/// Precision of a never-predicted class and recall of an absent class are 0.
inline Metrics compute_metrics(const std::vector<int>& truth, const std::vector<int>& pred,
                               const std::vector<int>& classes) {
    SYNTHACTION_REQUIRE(truth.size() == pred.size(), "metrics: length mismatch");
    Metrics m;
    m.classes = classes;
    const std::size_t k = classes.size();
    auto index_of = [&](int label) {
        for (std::size_t i = 0; i < k; ++i)
            if (classes[i] == label) return i;
        throw InvalidArgument("metrics: label " + std::to_string(label) + " outside the class list");
    };
    m.confusion.assign(k, std::vector<long>(k, 0));
    for (std::size_t i = 0; i < truth.size(); ++i) ++m.confusion[index_of(truth[i])][index_of(pred[i])];
    m.total = static_cast<long>(truth.size());
    long correct = 0;
    m.per_class.resize(k);
    std::size_t present = 0;
    for (std::size_t c = 0; c < k; ++c) {
        long col = 0, row = 0;
        for (std::size_t j = 0; j < k; ++j) {
            row += m.confusion[c][j];
            col += m.confusion[j][c];
        }
        const long tp = m.confusion[c][c];
        correct += tp;
        auto& s = m.per_class[c];
        s.support = row;
        s.precision = col > 0 ? static_cast<double>(tp) / static_cast<double>(col) : 0.0;
        s.recall = row > 0 ? static_cast<double>(tp) / static_cast<double>(row) : 0.0;
        s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
        m.macro_precision += s.precision;
        m.macro_recall += s.recall;
        m.macro_f1 += s.f1;
        m.weighted_precision += s.precision * static_cast<double>(row);
        m.weighted_recall += s.recall * static_cast<double>(row);
        m.weighted_f1 += s.f1 * static_cast<double>(row);
        ++present;
    }
    if (present) {
        m.macro_precision /= static_cast<double>(present);
        m.macro_recall /= static_cast<double>(present);
        m.macro_f1 /= static_cast<double>(present);
    }
    if (m.total) {
        const double n = static_cast<double>(m.total);
        m.accuracy = static_cast<double>(correct) / n;
        m.weighted_precision /= n;
        m.weighted_recall /= n;
        m.weighted_f1 /= n;
    }
    return m;
}

inline double accuracy(const std::vector<int>& truth, const std::vector<int>& pred) {
    SYNTHACTION_REQUIRE(truth.size() == pred.size(), "accuracy: length mismatch");
    if (truth.empty()) return 0.0;
    long c = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) c += truth[i] == pred[i];
    return static_cast<double>(c) / static_cast<double>(truth.size());
}

}  // namespace synthaction::eval
