#pragma once

// Exhaustive hyperparameter search scored on the validation split.

#include <functional>
#include <string>
#include <vector>

#include "synthaction/eval/experiment.hpp"

namespace synthaction::eval {

/// Scores one parameter set; higher is better.
using Evaluator = std::function<double(const ModelParams&)>;

struct GridPoint {
    ModelParams params;
    double score = 0;
};

struct SearchResult {
    std::vector<GridPoint> table;  // enumeration order
    std::size_t best = 0;
    ExperimentResult best_test;     // winner retrained and scored on test
    ExperimentResult default_test;  // default parameters on test, for comparison
};

/// Default grids; each contains the default parameters of its model.
inline std::vector<ModelParams> default_grid(ModelKind kind) {
    std::vector<ModelParams> g;
    switch (kind) {
        case ModelKind::Svm:
            for (double c : {0.03, 0.1, 0.3, 1.0, 3.0})
                for (double gamma : {0.001, 0.01, 0.1, -1.0}) {
                    classify::SvmParams p;
                    p.c = c;
                    if (gamma > 0) p.gamma = gamma;
                    g.push_back(p);
                }
            break;
        case ModelKind::Logistic:
            for (double c : {0.01, 0.03, 0.1, 0.3, 1.0}) {
                classify::LogisticParams p;
                p.inv_reg_c = c;
                g.push_back(p);
            }
            break;
        case ModelKind::Gbt:
            for (int depth : {2, 3})
                for (int n : {50, 100})
                    for (double lr : {0.03, 0.1}) {
                        classify::GbtParams p;
                        p.max_depth = depth;
                        p.n_estimators = n;
                        p.learning_rate = lr;
                        g.push_back(p);
                    }
            break;
    }
    return g;
}

/// Scores every point; the first maximal score wins.
inline std::vector<GridPoint> score_grid(const std::vector<ModelParams>& grid, const Evaluator& eval) {
    SYNTHACTION_REQUIRE(!grid.empty(), "grid search: empty grid");
    std::vector<GridPoint> table;
    for (const auto& p : grid) table.push_back({p, eval(p)});
    return table;
}

inline std::size_t select_best(const std::vector<GridPoint>& table) {
    SYNTHACTION_REQUIRE(!table.empty(), "grid search: empty grid");
    std::size_t best = 0;
    for (std::size_t i = 1; i < table.size(); ++i)
        if (table[i].score > table[best].score) best = i;
    return best;
}

/// Searches `grid` for `spec`'s model on validation accuracy (or `eval` when
/// given), then reports the winner and the defaults on the test split.
inline SearchResult grid_search(Workbench& wb, const ExperimentSpec& spec, const std::vector<ModelParams>& grid,
                                Evaluator eval = {}) {
    for (const auto& p : grid)
        SYNTHACTION_REQUIRE(classify::kind_of(p) == spec.model, "grid search: grid point for a different model");
    if (!eval) eval = [&](const ModelParams& p) { return wb.validation_accuracy(spec, p); };
    SearchResult r;
    r.table = score_grid(grid, eval);
    r.best = select_best(r.table);
    ExperimentSpec s = spec;
    s.params = r.table[r.best].params;
    r.best_test = wb.run(s);
    s.params.reset();
    r.default_test = wb.run(s);
    return r;
}

}  // namespace synthaction::eval
