#pragma once

// Experiment specs and the runner that shares extracted/fitted features
// between experiments on the same (level, chain, seed).

#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "synthaction/classify/model.hpp"
#include "synthaction/eval/metrics.hpp"
#include "synthaction/eval/pipeline.hpp"
#include "synthaction/eval/split.hpp"
#include "synthaction/scene/dataset.hpp"

namespace synthaction::eval {

using classify::ModelKind;
using classify::ModelParams;

enum class LabelMode : std::uint8_t { Action = 0, ActionPlusType = 1 };

inline const char* label_mode_name(LabelMode m) { return m == LabelMode::Action ? "action" : "action_plus_type"; }

inline LabelMode parse_label_mode(const std::string& s) {
    if (s == "action") return LabelMode::Action;
    if (s == "action_plus_type" || s == "a+t" || s == "at") return LabelMode::ActionPlusType;
    throw InvalidArgument("unknown label mode '" + s + "' (expected action or action_plus_type)");
}

inline int class_count(LabelMode m) { return m == LabelMode::Action ? scene::kActionCount : scene::kLabelCount; }

inline int label_of(const scene::ManifestEntry& e, LabelMode m) { return m == LabelMode::Action ? e.action() : e.label(); }

/// Coarse action of a 40-class label.
inline int action_of_label(int label) { return label / scene::kVariantCount; }

inline constexpr std::array<const char*, 3> kLevels = {"easy", "medium", "hard"};

inline int level_rank(const std::string& level) {
    for (std::size_t i = 0; i < kLevels.size(); ++i)
        if (level == kLevels[i]) return static_cast<int>(i);
    return static_cast<int>(kLevels.size());
}

struct ExperimentSpec {
    std::string level = "easy";
    Chain chain = Chain::Downsize;
    ModelKind model = ModelKind::Svm;
    LabelMode label_mode = LabelMode::Action;
    std::uint64_t seed = 7;
    std::optional<ModelParams> params;  // defaults when empty

    ModelParams effective_params() const { return params ? *params : classify::default_params(model); }
};

/// File-safe identifier, e.g. "easy_bgsub-downsize_gbt_action".
inline std::string spec_key(const ExperimentSpec& s) {
    return s.level + "_" + chain_slug(s.chain) + "_" + classify::model_name(s.model) + "_" +
           (s.label_mode == LabelMode::Action ? "action" : "at");
}

/// Table order: chain, model, level, label mode.
inline bool spec_less(const ExperimentSpec& a, const ExperimentSpec& b) {
    return std::make_tuple(static_cast<int>(a.chain), static_cast<int>(a.model), level_rank(a.level), a.level,
                           static_cast<int>(a.label_mode)) <
           std::make_tuple(static_cast<int>(b.chain), static_cast<int>(b.model), level_rank(b.level), b.level,
                           static_cast<int>(b.label_mode));
}

struct ExperimentResult {
    ExperimentSpec spec;
    ModelParams params;
    Metrics metrics;              // on the test split, in the spec's label mode
    double action_accuracy = 0;   // test accuracy after mapping predictions to actions
    std::size_t n_train = 0, n_val = 0, n_test = 0;
    std::vector<std::string> test_clips;
    std::vector<int> test_truth, test_pred;
    std::uint64_t feature_checksum = 0;  // all rows after the chain
    std::uint64_t state_checksum = 0;    // PCA basis or codebook
    std::uint64_t model_checksum = 0;    // FNV-1a of the model file
    std::shared_ptr<const classify::TrainedModel> model;
    double seconds_features = 0, seconds_train = 0;  // wall clock, not part of deterministic outputs
};

struct LevelData {
    scene::DatasetManifest manifest;
    std::shared_ptr<const scene::ClipSource> source;
    SplitAssignment split;
    std::uint64_t split_seed = 0;
};

struct WorkbenchOptions {
    std::filesystem::path root;  // dataset root for levels loaded on demand
    bool replay = false;         // re-render clips instead of reading frames
    unsigned jobs = 1;
    std::ostream* progress = nullptr;
};

class Workbench {
public:
    explicit Workbench(WorkbenchOptions opt = {}) : opt_(std::move(opt)) {}

    /// Registers an in-memory level (tests, replay without a manifest on disk).
    void add_level(const std::string& name, scene::DatasetManifest manifest,
                   std::shared_ptr<const scene::ClipSource> source) {
        levels_[name] = Registered{std::move(manifest), std::move(source)};
        for (auto it = data_.begin(); it != data_.end();)
            it = it->first.first == name ? data_.erase(it) : std::next(it);
        for (auto it = chains_.begin(); it != chains_.end();)
            it = std::get<0>(it->first) == name ? chains_.erase(it) : std::next(it);
    }

    const LevelData& level(const std::string& name, std::uint64_t seed) {
        const auto key = std::make_pair(name, seed);
        if (auto it = data_.find(key); it != data_.end()) return it->second;
        auto reg = levels_.find(name);
        if (reg == levels_.end()) {
            Registered r;
            r.manifest = scene::load_dataset_manifest(opt_.root, name);
            r.source = scene::make_clip_source(opt_.root, name, opt_.replay);
            reg = levels_.emplace(name, std::move(r)).first;
        }
        LevelData d;
        d.manifest = reg->second.manifest;
        d.source = reg->second.source;
        d.split = split(d.manifest.entries, seed);
        d.split_seed = seed;
        return data_.emplace(key, std::move(d)).first->second;
    }

    const FittedChain& chain(const std::string& level_name, Chain c, std::uint64_t seed) {
        const auto key = std::make_tuple(level_name, c, seed);
        if (auto it = chains_.find(key); it != chains_.end()) return it->second;
        const LevelData& d = level(level_name, seed);
        log("extracting " + chain_name(c) + " on " + level_name + " (" + std::to_string(d.manifest.entries.size()) +
            " clips)");
        const auto t0 = std::chrono::steady_clock::now();
        const ExtractedSet set = extract_all(c, *d.source, d.manifest.entries, opt_.jobs);
        FittedChain fc = fit_chain(set, d.split.indices(Part::Train), seed);
        chain_seconds_[key] = seconds_since(t0);
        return chains_.emplace(key, std::move(fc)).first->second;
    }

    /// Drops cached chain features (memory control between matrix blocks).
    void release_chains() { chains_.clear(); }

    /// Trains on the train split and scores the test split.
    ExperimentResult run(const ExperimentSpec& spec) {
        const LevelData& d = level(spec.level, spec.seed);
        const FittedChain& fc = chain(spec.level, spec.chain, spec.seed);
        ExperimentResult r;
        r.spec = spec;
        r.params = spec.effective_params();
        SYNTHACTION_REQUIRE(classify::kind_of(r.params) == spec.model, "experiment: params do not match the model");
        r.seconds_features = chain_seconds_[std::make_tuple(spec.level, spec.chain, spec.seed)];
        const auto train = d.split.indices(Part::Train), val = d.split.indices(Part::Val),
                   test = d.split.indices(Part::Test);
        r.n_train = train.size();
        r.n_val = val.size();
        r.n_test = test.size();
        r.feature_checksum = features::checksum(fc.features);
        r.state_checksum = fc.state_checksum();

        log("training " + spec_key(spec));
        const auto t0 = std::chrono::steady_clock::now();
        auto model = std::make_shared<classify::TrainedModel>(train_on(d, fc, spec, r.params, train, val));
        r.seconds_train = seconds_since(t0);
        {
            Fnv1a h;
            const std::string bytes = classify::encode_model(*model);
            h.update(bytes.data(), bytes.size());
            r.model_checksum = h.digest();
        }
        const FeatureMatrix xt = fc.features.select_rows(test);
        r.test_pred = classify::predict(*model, xt);
        for (std::size_t i : test) {
            r.test_truth.push_back(label_of(d.manifest.entries[i], spec.label_mode));
            r.test_clips.push_back(d.manifest.entries[i].clip_id);
        }
        std::vector<int> classes(static_cast<std::size_t>(class_count(spec.label_mode)));
        std::iota(classes.begin(), classes.end(), 0);
        r.metrics = compute_metrics(r.test_truth, r.test_pred, classes);
        if (spec.label_mode == LabelMode::ActionPlusType) {
            std::vector<int> ta, pa;
            for (int v : r.test_truth) ta.push_back(action_of_label(v));
            for (int v : r.test_pred) pa.push_back(action_of_label(v));
            r.action_accuracy = accuracy(ta, pa);
        } else {
            r.action_accuracy = r.metrics.accuracy;
        }
        r.model = std::move(model);
        return r;
    }

    /// Validation accuracy of `params` (trained on train only); grid-search helper.
    double validation_accuracy(const ExperimentSpec& spec, const ModelParams& params) {
        const LevelData& d = level(spec.level, spec.seed);
        const FittedChain& fc = chain(spec.level, spec.chain, spec.seed);
        const auto train = d.split.indices(Part::Train), val = d.split.indices(Part::Val);
        SYNTHACTION_REQUIRE(!val.empty(), "validation split is empty");
        const auto model = train_on(d, fc, spec, params, train, val);
        std::vector<int> truth;
        for (std::size_t i : val) truth.push_back(label_of(d.manifest.entries[i], spec.label_mode));
        return accuracy(truth, classify::predict(model, fc.features.select_rows(val)));
    }

    const WorkbenchOptions& options() const { return opt_; }

private:
    struct Registered {
        scene::DatasetManifest manifest;
        std::shared_ptr<const scene::ClipSource> source;
    };

    classify::TrainedModel train_on(const LevelData& d, const FittedChain& fc, const ExperimentSpec& spec,
                                    const ModelParams& params, const std::vector<std::size_t>& train,
                                    const std::vector<std::size_t>& val) const {
        const FeatureMatrix x = fc.features.select_rows(train);
        std::vector<int> y;
        for (std::size_t i : train) y.push_back(label_of(d.manifest.entries[i], spec.label_mode));
        const FeatureMatrix xv = fc.features.select_rows(val);
        std::vector<int> yv;
        for (std::size_t i : val) yv.push_back(label_of(d.manifest.entries[i], spec.label_mode));
        return classify::train_model(x, y, params, opt_.jobs, {&xv, &yv});
    }

    void log(const std::string& msg) const {
        if (opt_.progress) *opt_.progress << msg << '\n' << std::flush;
    }

    static double seconds_since(std::chrono::steady_clock::time_point t0) {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    }

    WorkbenchOptions opt_;
    std::map<std::string, Registered> levels_;
    std::map<std::pair<std::string, std::uint64_t>, LevelData> data_;
    std::map<std::tuple<std::string, Chain, std::uint64_t>, FittedChain> chains_;
    std::map<std::tuple<std::string, Chain, std::uint64_t>, double> chain_seconds_;
};

}  // namespace synthaction::eval
