#pragma once

// Result tables, per-experiment CSVs, eigen-image sheets and provenance
// sidecars.

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "synthaction/common.hpp"
#include "synthaction/eval/experiment.hpp"
#include "synthaction/features/hog.hpp"
#include "synthaction/features/pca.hpp"
#include "synthaction/image.hpp"

namespace synthaction::eval {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Provenance

struct Provenance {
    std::uint64_t seed = 0;
    std::uint64_t config_hash = 0;
};

inline std::string format_provenance(const Provenance& p) {
    return "tool=" + std::string(kToolVersion) + "\nseed=" + std::to_string(p.seed) +
           "\nconfig=" + hex64(p.config_hash) + "\n";
}

/// Hash of a canonical configuration text plus an artifact-specific key.
inline std::uint64_t config_hash(std::string_view config_text, std::string_view artifact_key = {}) {
    Fnv1a h;
    h.update(config_text.data(), config_text.size());
    h.update("\n", 1);
    h.update(artifact_key.data(), artifact_key.size());
    return h.digest();
}

/// Writes the provenance sidecar `path` + ".prov".
inline void write_provenance(const fs::path& path, const Provenance& p) {
    write_file_bytes(fs::path(path.string() + ".prov"), format_provenance(p));
}

/// Writes `bytes` to `path` and its provenance sidecar.
inline void write_artifact(const fs::path& path, std::string_view bytes, const Provenance& p) {
    write_file_bytes(path, bytes);
    write_provenance(path, p);
}

// ---------------------------------------------------------------------------
// Label names

inline std::string class_name(LabelMode mode, int label) {
    if (mode == LabelMode::Action) return std::string(scene::kActionNames[static_cast<std::size_t>(label)]);
    return std::string(scene::kActionNames[static_cast<std::size_t>(action_of_label(label))]) + "_" +
           std::to_string(label % scene::kVariantCount);
}

inline std::string fixed(double v, int digits = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

// ---------------------------------------------------------------------------
// results.csv

struct ResultRow {
    std::string level;
    Chain chain = Chain::Downsize;
    ModelKind model = ModelKind::Svm;
    LabelMode label_mode = LabelMode::Action;
    std::size_t n_train = 0, n_val = 0, n_test = 0;
    double accuracy = 0, action_accuracy = 0;
    double macro_precision = 0, macro_recall = 0, macro_f1 = 0;
    double weighted_precision = 0, weighted_recall = 0, weighted_f1 = 0;
    std::string params;
    std::string feature_checksum, state_checksum, model_checksum;
    std::uint64_t seed = 0;

    ExperimentSpec spec() const {
        ExperimentSpec s;
        s.level = level;
        s.chain = chain;
        s.model = model;
        s.label_mode = label_mode;
        s.seed = seed;
        return s;
    }
};

inline ResultRow to_row(const ExperimentResult& r) {
    ResultRow row;
    row.level = r.spec.level;
    row.chain = r.spec.chain;
    row.model = r.spec.model;
    row.label_mode = r.spec.label_mode;
    row.n_train = r.n_train;
    row.n_val = r.n_val;
    row.n_test = r.n_test;
    row.accuracy = r.metrics.accuracy;
    row.action_accuracy = r.action_accuracy;
    row.macro_precision = r.metrics.macro_precision;
    row.macro_recall = r.metrics.macro_recall;
    row.macro_f1 = r.metrics.macro_f1;
    row.weighted_precision = r.metrics.weighted_precision;
    row.weighted_recall = r.metrics.weighted_recall;
    row.weighted_f1 = r.metrics.weighted_f1;
    row.params = classify::describe(r.params);
    row.feature_checksum = hex64(r.feature_checksum);
    row.state_checksum = hex64(r.state_checksum);
    row.model_checksum = hex64(r.model_checksum);
    row.seed = r.spec.seed;
    return row;
}

inline constexpr const char* kResultsHeader =
    "level,filter,model,label_mode,n_train,n_val,n_test,accuracy,action_accuracy,macro_precision,macro_recall,"
    "macro_f1,weighted_precision,weighted_recall,weighted_f1,params,feature_checksum,state_checksum,"
    "model_checksum,seed";

inline void sort_rows(std::vector<ResultRow>& rows) {
    std::stable_sort(rows.begin(), rows.end(),
                     [](const ResultRow& a, const ResultRow& b) { return spec_less(a.spec(), b.spec()); });
}

/// Rows in table order (chain, model, level, label mode).
inline std::string format_results_csv(std::vector<ResultRow> rows) {
    sort_rows(rows);
    std::ostringstream os;
    os << kResultsHeader << '\n';
    for (const auto& r : rows)
        os << r.level << ',' << chain_name(r.chain) << ',' << classify::model_name(r.model) << ','
           << label_mode_name(r.label_mode) << ',' << r.n_train << ',' << r.n_val << ',' << r.n_test << ','
           << fixed(r.accuracy) << ',' << fixed(r.action_accuracy) << ',' << fixed(r.macro_precision) << ','
           << fixed(r.macro_recall) << ',' << fixed(r.macro_f1) << ',' << fixed(r.weighted_precision) << ','
           << fixed(r.weighted_recall) << ',' << fixed(r.weighted_f1) << ',' << r.params << ','
           << r.feature_checksum << ',' << r.state_checksum << ',' << r.model_checksum << ',' << r.seed << '\n';
    return os.str();
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::vector<ResultRow> parse_results_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<ResultRow> rows;
    if (!std::getline(in, line)) return rows;
    if (line != kResultsHeader) throw IoError("results.csv: unexpected header");
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 20) throw IoError("results.csv line " + std::to_string(lineno) + ": expected 20 fields");
        try {
            ResultRow r;
            r.level = f[0];
            r.chain = parse_chain(f[1]);
            r.model = classify::parse_model_kind(f[2]);
            r.label_mode = parse_label_mode(f[3]);
            r.n_train = std::stoul(f[4]);
            r.n_val = std::stoul(f[5]);
            r.n_test = std::stoul(f[6]);
            double* d[] = {&r.accuracy,           &r.action_accuracy, &r.macro_precision, &r.macro_recall,
                           &r.macro_f1,           &r.weighted_precision, &r.weighted_recall, &r.weighted_f1};
            for (int i = 0; i < 8; ++i) *d[i] = std::stod(f[static_cast<std::size_t>(7 + i)]);
            r.params = f[15];
            r.feature_checksum = f[16];
            r.state_checksum = f[17];
            r.model_checksum = f[18];
            r.seed = std::stoull(f[19]);
            rows.push_back(std::move(r));
        } catch (const std::logic_error& e) {
            throw IoError("results.csv line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    return rows;
}

// ---------------------------------------------------------------------------
// table.txt

inline const char* model_title(ModelKind k) {
    switch (k) {
        case ModelKind::Svm: return "SVM";
        case ModelKind::Logistic: return "Logistic";
        case ModelKind::Gbt: return "GBT";
    }
    return "?";
}

/// Accuracy grid with one line per (model, filter) that has any run, columns
/// Action and A+T per level; "-" marks runs not made.
inline std::string format_table(std::vector<ResultRow> rows) {
    sort_rows(rows);
    auto cell = [&](ModelKind m, Chain c, const char* level, LabelMode mode) -> std::string {
        for (const auto& r : rows)
            if (r.model == m && r.chain == c && r.level == level && r.label_mode == mode)
                return fixed(100 * r.accuracy, 1) + "%";
        return "-";
    };
    char buf[256];
    std::ostringstream os;
    std::snprintf(buf, sizeof buf, "%-9s %-17s %-15s %-15s %-15s\n", "Model", "Filter", "Easy", "Medium", "Hard");
    os << buf;
    std::snprintf(buf, sizeof buf, "%-9s %-17s %-7s %-7s %-7s %-7s %-7s %-7s\n", "", "", "Action", "A+T", "Action",
                  "A+T", "Action", "A+T");
    os << buf;
    for (Chain c : kAllChains)
        for (ModelKind m : {ModelKind::Svm, ModelKind::Logistic, ModelKind::Gbt}) {
            bool any = false;
            for (const auto& r : rows) any |= r.model == m && r.chain == c;
            if (!any) continue;
            std::string line;
            std::snprintf(buf, sizeof buf, "%-9s %-17s", model_title(m), chain_title(c).c_str());
            line = buf;
            for (const char* level : kLevels)
                for (LabelMode mode : {LabelMode::Action, LabelMode::ActionPlusType}) {
                    std::snprintf(buf, sizeof buf, " %-7s", cell(m, c, level, mode).c_str());
                    line += buf;
                }
            while (!line.empty() && line.back() == ' ') line.pop_back();
            os << line << '\n';
        }
    return os.str();
}

// ---------------------------------------------------------------------------
// Per-experiment CSVs

/// Counts with true classes as rows and predicted classes as columns.
inline std::string format_confusion_csv(const Metrics& m, LabelMode mode) {
    std::ostringstream os;
    os << "true\\predicted";
    for (int c : m.classes) os << ',' << class_name(mode, c);
    os << '\n';
    for (std::size_t i = 0; i < m.classes.size(); ++i) {
        os << class_name(mode, m.classes[i]);
        for (long v : m.confusion[i]) os << ',' << v;
        os << '\n';
    }
    return os.str();
}

inline std::string format_f1_csv(const Metrics& m, LabelMode mode) {
    std::ostringstream os;
    os << "class,precision,recall,f1,support\n";
    for (std::size_t i = 0; i < m.classes.size(); ++i) {
        const auto& s = m.per_class[i];
        os << class_name(mode, m.classes[i]) << ',' << fixed(s.precision) << ',' << fixed(s.recall) << ','
           << fixed(s.f1) << ',' << s.support << '\n';
    }
    os << "macro_avg," << fixed(m.macro_precision) << ',' << fixed(m.macro_recall) << ',' << fixed(m.macro_f1)
       << ',' << m.total << '\n';
    os << "weighted_avg," << fixed(m.weighted_precision) << ',' << fixed(m.weighted_recall) << ','
       << fixed(m.weighted_f1) << ',' << m.total << '\n';
    return os.str();
}

inline std::string format_predictions_csv(const ExperimentResult& r) {
    std::ostringstream os;
    os << "clip_id,true,predicted\n";
    for (std::size_t i = 0; i < r.test_clips.size(); ++i)
        os << r.test_clips[i] << ',' << class_name(r.spec.label_mode, r.test_truth[i]) << ','
           << class_name(r.spec.label_mode, r.test_pred[i]) << '\n';
    return os.str();
}

inline std::string format_timings_csv(const std::vector<ExperimentResult>& results) {
    std::ostringstream os;
    os << "experiment,feature_seconds,train_seconds\n";
    for (const auto& r : results)
        os << spec_key(r.spec) << ',' << fixed(r.seconds_features, 3) << ',' << fixed(r.seconds_train, 3) << '\n';
    return os.str();
}

// ---------------------------------------------------------------------------
// Eigen images

inline constexpr int kEigenSheetCount = 16;

/// Min-max normalizes `v` to [0, 1] (constant input maps to 0).
inline std::vector<float> normalize_unit(const std::vector<double>& v) {
    std::vector<float> out(v.size(), 0.f);
    if (v.empty()) return out;
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    const double span = *hi - *lo;
    if (span > 0)
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>((v[i] - *lo) / span);
    return out;
}

/// Tiles up to 16 images in a 4-wide grid with 2 px white gutters.
inline GrayImage tile_sheet(const std::vector<GrayImage>& tiles) {
    SYNTHACTION_REQUIRE(!tiles.empty(), "tile_sheet: no tiles");
    const int tw = tiles[0].width, th = tiles[0].height, gap = 2;
    const int cols = std::min<int>(4, static_cast<int>(tiles.size()));
    const int rows = (static_cast<int>(tiles.size()) + cols - 1) / cols;
    GrayImage sheet(cols * tw + (cols - 1) * gap, rows * th + (rows - 1) * gap, 1.f);
    for (std::size_t i = 0; i < tiles.size(); ++i) {
        SYNTHACTION_REQUIRE(tiles[i].width == tw && tiles[i].height == th, "tile_sheet: tile size mismatch");
        const int ox = static_cast<int>(i % 4) * (tw + gap), oy = static_cast<int>(i / 4) * (th + gap);
        for (int y = 0; y < th; ++y)
            for (int x = 0; x < tw; ++x) sheet.at(ox + x, oy + y) = tiles[i].at(x, y);
    }
    return sheet;
}

inline std::vector<double> component(const features::PcaModel& pca, int i) {
    const Eigen::RowVectorXd row = pca.components.row(i);
    return {row.data(), row.data() + row.size()};
}

/// First 16 components reshaped to width x height, each min-max normalized.
inline GrayImage eigen_images(const features::PcaModel& pca, int width, int height) {
    SYNTHACTION_REQUIRE(width > 0 && height > 0 && pca.dims() == static_cast<std::size_t>(width) * height,
                        "eigen_images: components do not reshape to " + std::to_string(width) + "x" +
                            std::to_string(height));
    std::vector<GrayImage> tiles;
    for (int i = 0; i < std::min(kEigenSheetCount, pca.k()); ++i) {
        GrayImage t(width, height);
        t.data = normalize_unit(component(pca, i));
        tiles.push_back(std::move(t));
    }
    return tile_sheet(tiles);
}

/// First 16 components of a PCA over HOG vectors, each drawn as block glyphs.
inline GrayImage hog_eigen_images(const features::PcaModel& pca, int width = features::kHogCropSize,
                                  int height = features::kHogCropSize) {
    SYNTHACTION_REQUIRE(pca.dims() == features::hog_length(width, height),
                        "hog_eigen_images: components are not HOG vectors of the given size");
    std::vector<GrayImage> tiles;
    for (int i = 0; i < std::min(kEigenSheetCount, pca.k()); ++i)
        tiles.push_back(features::hog_tile_image(component(pca, i), width, height));
    return tile_sheet(tiles);
}

}  // namespace synthaction::eval
