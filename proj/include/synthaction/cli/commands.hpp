#pragma once

// Subcommand implementations behind the synthaction executable. Each command
// writes data to `out`, progress and diagnostics to `err`, and returns an
// exit code.

#include <cstdlib>
#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "synthaction/classify/model.hpp"
#include "synthaction/common.hpp"
#include "synthaction/eval/analysis.hpp"
#include "synthaction/eval/matrix.hpp"
#include "synthaction/eval/report.hpp"
#include "synthaction/eval/search.hpp"
#include "synthaction/scene/dataset.hpp"

namespace synthaction::cli {

namespace fs = std::filesystem;
using eval::Chain;
using eval::LabelMode;

inline constexpr const char* kRootEnv = "SYNTHACTION_ROOT";

/// --root when given, else $SYNTHACTION_ROOT, else ./data.
inline fs::path resolve_root(const std::string& flag) {
    if (!flag.empty()) return flag;
    if (const char* env = std::getenv(kRootEnv); env && *env) return env;
    return "data";
}

struct CommonOptions {
    fs::path root = "data";
    fs::path out;  // empty: <root>/results
    std::uint64_t seed = 7;
    unsigned jobs = 1;
    bool replay = false;

    fs::path out_dir() const { return out.empty() ? root / "results" : out; }
};

/// Canonical "key=value" lines, sorted by key.
inline std::string canonical_config(const std::map<std::string, std::string>& kv) {
    std::string s;
    for (const auto& [k, v] : kv) s += k + "=" + v + "\n";
    return s;
}

inline std::string manifest_digest(const scene::DatasetManifest& m) {
    Fnv1a h;
    const std::string text = scene::format_manifest(m);
    h.update(text.data(), text.size());
    return hex64(h.digest());
}

inline eval::WorkbenchOptions workbench_options(const CommonOptions& c, std::ostream& err) {
    eval::WorkbenchOptions o;
    o.root = c.root;
    o.replay = c.replay;
    o.jobs = c.jobs;
    o.progress = &err;
    return o;
}

// ---------------------------------------------------------------------------
// gen

struct GenOptions {
    std::string level = "easy";
    int styles = 10;
    int cameras = 5;
    int frames = 30;
    int size = 351;
    fs::path profiles;  // empty: built-in profiles
    bool overwrite = false;
    bool dry_run = false;
};

inline scene::DifficultyProfile find_profile(const fs::path& file, const std::string& level) {
    if (file.empty()) return scene::profile_by_name(level);
    for (const auto& p : scene::load_profiles(file))
        if (p.name == level) return p;
    throw InvalidArgument("profile '" + level + "' not found in " + file.string());
}

inline int cmd_gen(const CommonOptions& c, const GenOptions& g, std::ostream& out, std::ostream& err) {
    SYNTHACTION_REQUIRE(g.styles >= 1 && g.cameras >= 1, "gen: --styles and --cameras must be >= 1");
    const auto profile = find_profile(g.profiles, g.level);
    scene::GenerateOptions opt;
    opt.root = c.root;
    opt.frame_count = g.frames;
    opt.size = g.size;
    opt.jobs = c.jobs;
    opt.overwrite = g.overwrite;
    opt.dry_run = g.dry_run;
    std::size_t last_pct = 0;
    opt.progress = [&](std::size_t done, std::size_t total) {
        const std::size_t pct = done * 100 / total;
        if (pct >= last_pct + 10 || done == total) {
            last_pct = pct;
            err << "rendered " << done << "/" << total << " clips\n" << std::flush;
        }
    };
    const auto m = scene::generate_dataset(profile, g.styles, g.cameras, c.seed, opt);
    std::map<int, int> per_label, per_action;
    for (const auto& e : m.entries) {
        ++per_label[e.label()];
        ++per_action[e.action()];
    }
    int lo = per_label.empty() ? 0 : per_label.begin()->second, hi = lo;
    for (const auto& [k, v] : per_label) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    out << "level=" << profile.name << " clips=" << m.entries.size() << " labels=" << per_label.size()
        << " clips_per_label=" << (lo == hi ? std::to_string(lo) : std::to_string(lo) + ".." + std::to_string(hi))
        << " clips_per_action=" << (per_action.empty() ? 0 : per_action.begin()->second)
        << " frames_written=" << (g.dry_run ? 0 : m.entries.size() * static_cast<std::size_t>(g.frames))
        << " manifest=" << scene::manifest_path(c.root, profile.name).string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// run

struct RunOptions {
    std::string matrix;  // baseline | table2-classic; empty: single experiment
    std::string level = "easy";
    std::string filter = "downsize";
    std::string model = "svm";
    std::string label_mode;  // empty: both
    bool save_features = true;
    bool save_models = true;
};

inline std::vector<eval::ExperimentSpec> run_specs_for(const RunOptions& r, std::uint64_t seed) {
    if (!r.matrix.empty()) return eval::matrix_specs(r.matrix, seed);
    std::vector<eval::ExperimentSpec> specs;
    std::vector<LabelMode> modes;
    if (r.label_mode.empty()) modes = {LabelMode::Action, LabelMode::ActionPlusType};
    else modes = {eval::parse_label_mode(r.label_mode)};
    for (LabelMode m : modes) {
        eval::ExperimentSpec s;
        s.level = r.level;
        s.chain = eval::parse_chain(r.filter);
        s.model = classify::parse_model_kind(r.model);
        s.label_mode = m;
        s.seed = seed;
        specs.push_back(s);
    }
    return specs;
}

inline std::vector<features::RowLabel> row_labels(const scene::DatasetManifest& m) {
    std::vector<features::RowLabel> out;
    for (const auto& e : m.entries) out.push_back({e.clip_id, e.action(), e.variant()});
    return out;
}

inline int cmd_run(const CommonOptions& c, const RunOptions& r, std::ostream& out, std::ostream& err) {
    const auto specs = run_specs_for(r, c.seed);
    eval::Workbench wb(workbench_options(c, err));
    std::map<std::string, std::string> cfg{{"command", "run"},
                                           {"matrix", r.matrix.empty() ? "single" : r.matrix},
                                           {"seed", std::to_string(c.seed)}};
    for (const auto& s : specs) {
        cfg["manifest." + s.level] = manifest_digest(wb.level(s.level, s.seed).manifest);
        cfg["experiment." + eval::spec_key(s)] = classify::describe(s.effective_params());
    }
    const std::string cfg_text = canonical_config(cfg);
    const fs::path dir = c.out_dir();
    auto prov = [&](const std::string& key) { return eval::Provenance{c.seed, eval::config_hash(cfg_text, key)}; };

    auto on_result = [&](const eval::ExperimentResult& res) {
        const std::string key = eval::spec_key(res.spec);
        eval::write_artifact(dir / ("confusion_" + key + ".csv"),
                             eval::format_confusion_csv(res.metrics, res.spec.label_mode), prov("confusion_" + key));
        eval::write_artifact(dir / ("f1_" + key + ".csv"), eval::format_f1_csv(res.metrics, res.spec.label_mode),
                             prov("f1_" + key));
        eval::write_artifact(dir / ("predictions_" + key + ".csv"), eval::format_predictions_csv(res),
                             prov("predictions_" + key));
        if (r.save_models)
            eval::write_artifact(dir / "models" / (key + ".mdl"), classify::encode_model(*res.model),
                                 prov("model_" + key));
        err << key << ": accuracy " << eval::fixed(100 * res.metrics.accuracy, 1) << "%\n" << std::flush;
    };
    auto on_chain = [&](const std::string& level, std::uint64_t seed, const eval::FittedChain& fc) {
        const std::string key = level + "_" + eval::chain_slug(fc.chain);
        if (r.save_features) {
            eval::write_artifact(dir / "features" / (key + ".fmx"), features::encode_fmx(fc.features),
                                 prov("features_" + key));
            eval::write_artifact(dir / "features" / (key + ".labels.csv"),
                                 features::encode_labels(row_labels(wb.level(level, seed).manifest)),
                                 prov("labels_" + key));
        }
        if (fc.chain == Chain::Pca && fc.pca && fc.pca->dims() == 78u * 78u) {
            const fs::path img = dir / ("eigen_" + level + ".pgm");
            write_pgm(img, eval::eigen_images(*fc.pca, 78, 78));
            eval::write_provenance(img, prov("eigen_" + level));
        }
        if (fc.chain == Chain::HogPca && fc.pca) {
            const fs::path img = dir / (level + "_hog_pca.pgm");
            write_pgm(img, eval::hog_eigen_images(*fc.pca));
            eval::write_provenance(img, prov(level + "_hog_pca"));
        }
    };
    const auto results = eval::run_specs(wb, specs, on_result, on_chain);
    std::vector<eval::ResultRow> rows;
    for (const auto& res : results) rows.push_back(eval::to_row(res));
    eval::write_artifact(dir / "results.csv", eval::format_results_csv(rows), prov("results"));
    const std::string table = eval::format_table(rows);
    eval::write_artifact(dir / "table.txt", table, prov("table"));
    write_file_bytes(dir / "timings.csv", eval::format_timings_csv(results));
    out << table;
    return 0;
}

// ---------------------------------------------------------------------------
// search

struct SearchOptions {
    std::string model = "svm";
    std::string level = "hard";
    std::string filter = "sift_kmean";
};

inline std::string search_summary_row(const eval::SearchResult& s, const eval::ExperimentResult& at) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%-9s %-17s %-7s %-7s %s\n", eval::model_title(s.best_test.spec.model),
                  eval::chain_title(s.best_test.spec.chain).c_str(),
                  (eval::fixed(100 * s.best_test.metrics.accuracy, 1) + "%").c_str(),
                  (eval::fixed(100 * at.metrics.accuracy, 1) + "%").c_str(),
                  classify::describe(s.table[s.best].params).c_str());
    return buf;
}

inline int cmd_search(const CommonOptions& c, const SearchOptions& so, std::ostream& out, std::ostream& err) {
    eval::Workbench wb(workbench_options(c, err));
    eval::ExperimentSpec spec;
    spec.level = so.level;
    spec.chain = eval::parse_chain(so.filter);
    spec.model = classify::parse_model_kind(so.model);
    spec.label_mode = LabelMode::Action;
    spec.seed = c.seed;
    const auto grid = eval::default_grid(spec.model);
    const auto res = eval::grid_search(wb, spec, grid);
    eval::ExperimentSpec at = spec;
    at.label_mode = LabelMode::ActionPlusType;
    at.params = res.table[res.best].params;
    const auto at_res = wb.run(at);

    const std::string key = so.level + "_" + eval::chain_slug(spec.chain) + "_" + classify::model_name(spec.model);
    const std::map<std::string, std::string> cfg{{"command", "search"},
                                                 {"key", key},
                                                 {"manifest", manifest_digest(wb.level(so.level, c.seed).manifest)},
                                                 {"seed", std::to_string(c.seed)}};
    const std::string cfg_text = canonical_config(cfg);
    std::ostringstream csv;
    csv << "params,val_accuracy,selected\n";
    for (std::size_t i = 0; i < res.table.size(); ++i)
        csv << classify::describe(res.table[i].params) << ',' << eval::fixed(res.table[i].score) << ','
            << (i == res.best ? 1 : 0) << '\n';
    const fs::path dir = c.out_dir();
    eval::write_artifact(dir / ("search_" + key + ".csv"), csv.str(), {c.seed, eval::config_hash(cfg_text, "csv")});
    std::ostringstream txt;
    txt << "Model     Filter            Action  A+T     Parameters\n" << search_summary_row(res, at_res);
    txt << "default parameters: action " << eval::fixed(100 * res.default_test.metrics.accuracy, 1) << "%\n";
    eval::write_artifact(dir / ("search_" + key + ".txt"), txt.str(), {c.seed, eval::config_hash(cfg_text, "txt")});
    out << txt.str();
    return 0;
}

// ---------------------------------------------------------------------------
// tsne

struct TsneOptions {
    std::string level = "easy";
    std::string filter = "sift_kmean";
    double perplexity = 30;
    int iterations = 1000;
    std::size_t max_points = eval::kTsneMaxPoints;
};

inline int cmd_tsne(const CommonOptions& c, const TsneOptions& t, std::ostream& out, std::ostream& err) {
    eval::Workbench wb(workbench_options(c, err));
    eval::TsneParams p;
    p.perplexity = t.perplexity;
    p.iterations = t.iterations;
    p.exaggeration_iters = std::min(p.exaggeration_iters, t.iterations);
    err << "embedding " << t.level << "\n" << std::flush;
    const auto map = eval::tsne_for_level(wb, t.level, eval::parse_chain(t.filter), c.seed, p, t.max_points);
    const std::map<std::string, std::string> cfg{
        {"command", "tsne"},          {"filter", eval::chain_name(eval::parse_chain(t.filter))},
        {"iterations", std::to_string(t.iterations)}, {"level", t.level},
        {"manifest", manifest_digest(wb.level(t.level, c.seed).manifest)},
        {"max_points", std::to_string(t.max_points)}, {"perplexity", eval::fixed(t.perplexity)},
        {"seed", std::to_string(c.seed)}};
    const std::string cfg_text = canonical_config(cfg);
    const fs::path dir = c.out_dir();
    const fs::path img = dir / ("tsne_" + t.level + ".ppm");
    write_ppm(img, eval::scatter_plot(map.embedding.points, map.actions));
    eval::write_provenance(img, {c.seed, eval::config_hash(cfg_text, "ppm")});
    std::ostringstream csv;
    csv << "clip_id,action,x,y\n";
    for (std::size_t i = 0; i < map.clips.size(); ++i)
        csv << map.clips[i] << ',' << scene::kActionNames[static_cast<std::size_t>(map.actions[i])] << ','
            << eval::fixed(map.embedding.points[i][0]) << ',' << eval::fixed(map.embedding.points[i][1]) << '\n';
    eval::write_artifact(dir / ("tsne_" + t.level + ".csv"), csv.str(), {c.seed, eval::config_hash(cfg_text, "csv")});
    out << "level=" << t.level << " points=" << map.clips.size() << " silhouette=" << eval::fixed(map.silhouette)
        << " initial_kl=" << eval::fixed(map.embedding.initial_kl) << " final_kl=" << eval::fixed(map.embedding.final_kl)
        << " image=" << img.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// report

inline int cmd_report(const CommonOptions& c, std::ostream& out, std::ostream& err) {
    const fs::path dir = c.out_dir();
    const fs::path csv = dir / "results.csv";
    std::vector<eval::ResultRow> rows;
    if (fs::exists(csv)) rows = eval::parse_results_csv(read_file_bytes(csv));
    else err << "no results at " << csv.string() << "; reporting an empty table\n";
    out << eval::format_table(rows);
    return 0;
}

// ---------------------------------------------------------------------------
// inspect

struct InspectOptions {
    std::string clip_id;
    std::string level;  // empty: search easy, medium, hard
};

inline int cmd_inspect(const CommonOptions& c, const InspectOptions& io, std::ostream& out, std::ostream& err) {
    std::vector<std::string> levels;
    if (io.level.empty()) levels.assign(eval::kLevels.begin(), eval::kLevels.end());
    else levels = {io.level};
    for (const auto& level : levels) {
        if (!fs::exists(scene::manifest_path(c.root, level))) continue;
        const auto m = scene::load_dataset_manifest(c.root, level);
        for (const auto& e : m.entries) {
            if (e.clip_id != io.clip_id) continue;
            out << scene::to_json(e, m).dump() << "\n";
            const auto src = scene::make_clip_source(c.root, level, c.replay);
            const auto mid = src->mid_frame(e);
            const GrayImage crop = eval::mid_analysis_image(*src, e);
            const GrayImage bg = eval::bgsub_analysis_image(*src, e);
            const auto hog = features::hog(imgproc::center_crop(crop, features::kHogCropSize, features::kHogCropSize));
            const auto kps = features::sift(crop);
            const fs::path dir = c.out_dir() / "inspect" / e.clip_id;
            write_ppm(dir / "mid_frame.ppm", mid);
            write_pgm(dir / "crop.pgm", crop);
            write_pgm(dir / "downsize.pgm", imgproc::scale(crop, eval::kDownsizeFraction));
            write_pgm(dir / "skeleton.pgm", features::skeletonize(crop));
            write_pgm(dir / "bgsub.pgm", bg);
            write_pgm(dir / "hog.pgm",
                      features::hog_tile_image(std::vector<double>(hog.begin(), hog.end()), features::kHogCropSize,
                                               features::kHogCropSize));
            out << "level=" << level << " mid_frame=" << imgproc::mid_frame_index(static_cast<std::size_t>(e.request.frame_count))
                << " hog_length=" << hog.size() << " sift_keypoints=" << kps.size() << " images=" << dir.string()
                << "\n";
            return 0;
        }
    }
    err << "clip '" << io.clip_id << "' not found under " << c.root.string() << "\n";
    return 2;
}

}  // namespace synthaction::cli
