#pragma once

// Named experiment matrices and a runner that groups experiments by
// (level, chain) so each block's features are built once and then freed.

#include <functional>
#include <string>
#include <vector>

#include "synthaction/eval/experiment.hpp"

namespace synthaction::eval {

struct MatrixCell {
    Chain chain;
    std::vector<std::string> levels;
};

/// Non-dash cells of the classic-model results table.
inline std::vector<MatrixCell> classic_cells() {
    return {{Chain::Downsize, {"easy", "medium"}},
            {Chain::BgsubDownsize, {"medium"}},
            {Chain::Pca, {"easy", "medium"}},
            {Chain::SkeletonPca, {"easy", "medium"}},
            {Chain::HogPca, {"easy", "medium"}},
            {Chain::SiftKmean, {"easy", "medium", "hard"}},
            {Chain::BgsubSiftKmean, {"medium"}}};
}

inline std::vector<std::string> matrix_names() { return {"baseline", "table2-classic"}; }

/// Specs of a named matrix in table order.
inline std::vector<ExperimentSpec> matrix_specs(const std::string& name, std::uint64_t seed) {
    std::vector<ExperimentSpec> out;
    auto add = [&](const std::string& level, Chain c, ModelKind m) {
        for (LabelMode mode : {LabelMode::Action, LabelMode::ActionPlusType}) {
            ExperimentSpec s;
            s.level = level;
            s.chain = c;
            s.model = m;
            s.label_mode = mode;
            s.seed = seed;
            out.push_back(s);
        }
    };
    if (name == "baseline") {
        add("easy", Chain::Downsize, ModelKind::Svm);
    } else if (name == "table2-classic") {
        for (const auto& cell : classic_cells())
            for (ModelKind m : {ModelKind::Svm, ModelKind::Logistic, ModelKind::Gbt})
                for (const auto& level : cell.levels) add(level, cell.chain, m);
    } else {
        throw InvalidArgument("unknown matrix '" + name + "' (expected baseline or table2-classic)");
    }
    std::stable_sort(out.begin(), out.end(), spec_less);
    return out;
}

/// Runs `specs` block by block. `on_chain` sees each fitted chain once,
/// after its block's experiments ran and before its features are released.
inline std::vector<ExperimentResult> run_specs(
    Workbench& wb, const std::vector<ExperimentSpec>& specs,
    const std::function<void(const ExperimentResult&)>& on_result = {},
    const std::function<void(const std::string&, std::uint64_t, const FittedChain&)>& on_chain = {}) {
    std::vector<ExperimentResult> results;
    std::vector<bool> done(specs.size(), false);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (done[i]) continue;
        const auto& head = specs[i];
        for (std::size_t j = i; j < specs.size(); ++j) {
            const auto& s = specs[j];
            if (done[j] || s.level != head.level || s.chain != head.chain || s.seed != head.seed) continue;
            results.push_back(wb.run(s));
            if (on_result) on_result(results.back());
            done[j] = true;
        }
        if (on_chain) on_chain(head.level, head.seed, wb.chain(head.level, head.chain, head.seed));
        wb.release_chains();
    }
    return results;
}

}  // namespace synthaction::eval
