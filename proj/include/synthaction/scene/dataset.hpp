#pragma once

// Dataset generation: enumerates (label, style, camera) scenes for a
// difficulty profile, renders them to PPM frame stacks and records every
// ClipRequest in a JSONL manifest so clips can be re-rendered on demand.
//
// Random streams are keyed by (purpose, label, style slot, camera slot) only,
// never by profile name, so easy and medium datasets generated with the same
// seed share styles, cameras and clip seeds.

#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "json.hpp"
#include "synthaction/common.hpp"
#include "synthaction/image.hpp"
#include "synthaction/imgproc.hpp"
#include "synthaction/rng.hpp"
#include "synthaction/scene/camera.hpp"
#include "synthaction/scene/pose.hpp"
#include "synthaction/scene/render.hpp"

namespace synthaction::scene {

namespace fs = std::filesystem;

struct ManifestEntry {
    std::string clip_id;
    std::string rel_dir;  // relative to the dataset directory
    ClipRequest request;

    int label() const { return request.pose.label(); }
    int action() const { return request.pose.action_id; }
    int variant() const { return request.pose.variant_id; }
};

struct DatasetManifest {
    std::string level;
    std::uint64_t seed = 0;
    int styles_per_label = 0;
    int cameras_per_scene = 0;
    std::vector<ManifestEntry> entries;  // sorted by clip_id
};

struct GenerateOptions {
    fs::path root;  // dataset written to root/<profile name>
    int frame_count = kDefaultFrameCount;
    int size = kDefaultFrameSize;
    unsigned jobs = 1;
    bool overwrite = false;
    bool dry_run = false;  // write the manifest only
    std::function<void(std::size_t done, std::size_t total)> progress;
};

inline std::string clip_id_for(int action, int variant, int style_slot, int camera_slot) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "_%d_s%02d_c%02d", variant, style_slot, camera_slot);
    return std::string(kActionNames[static_cast<std::size_t>(action)]) + buf;
}

inline std::string frame_file_name(int index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%03d.ppm", index);
    return buf;
}

inline fs::path dataset_dir(const fs::path& root, const std::string& level) { return root / level; }
inline fs::path manifest_path(const fs::path& root, const std::string& level) {
    return dataset_dir(root, level) / "manifest.jsonl";
}

/// Per-label style draws: without replacement from the 64 combinations when
/// possible, otherwise with replacement.
inline std::vector<AvatarStyle> sample_styles(std::uint64_t seed, int label, int count) {
    Rng rng(seed, {1, static_cast<std::uint64_t>(label)});
    std::vector<AvatarStyle> out;
    if (count <= kStyleCombinations) {
        std::vector<int> idx(kStyleCombinations);
        std::iota(idx.begin(), idx.end(), 0);
        rng.shuffle(idx);
        for (int i = 0; i < count; ++i) out.push_back(AvatarStyle::from_index(idx[static_cast<std::size_t>(i)]));
    } else {
        for (int i = 0; i < count; ++i)
            out.push_back(AvatarStyle::from_index(static_cast<int>(rng.below(kStyleCombinations))));
    }
    return out;
}

/// Enumerates every clip of a dataset without rendering.
inline DatasetManifest plan_dataset(const DifficultyProfile& profile, int styles_per_label,
                                    int cameras_per_scene, std::uint64_t seed,
                                    int frame_count = kDefaultFrameCount, int size = kDefaultFrameSize) {
    SYNTHACTION_REQUIRE(styles_per_label >= 1, "styles_per_label must be >= 1");
    SYNTHACTION_REQUIRE(cameras_per_scene >= 1, "cameras_per_scene must be >= 1");
    const auto library = build_pose_library();
    DatasetManifest m;
    m.level = profile.name;
    m.seed = seed;
    m.styles_per_label = styles_per_label;
    m.cameras_per_scene = cameras_per_scene;
    m.entries.reserve(static_cast<std::size_t>(kLabelCount) * styles_per_label * cameras_per_scene);
    for (const auto& pose : library) {
        const int label = pose.label();
        const auto styles = sample_styles(seed, label, styles_per_label);
        for (int s = 0; s < styles_per_label; ++s) {
            Rng cam_rng(seed, {2, static_cast<std::uint64_t>(label), static_cast<std::uint64_t>(s)});
            for (int c = 0; c < cameras_per_scene; ++c) {
                ManifestEntry e;
                e.clip_id = clip_id_for(pose.action_id, pose.variant_id, s, c);
                e.rel_dir = std::string(kActionNames[static_cast<std::size_t>(pose.action_id)]) + "_" +
                            std::to_string(pose.variant_id) + "/" + e.clip_id;
                e.request.pose = pose;
                e.request.style = styles[static_cast<std::size_t>(s)];
                e.request.camera = sample_camera(profile, cam_rng);
                e.request.profile = profile;
                e.request.seed = derive_seed(seed, {3, static_cast<std::uint64_t>(label),
                                                    static_cast<std::uint64_t>(s),
                                                    static_cast<std::uint64_t>(c)});
                e.request.frame_count = frame_count;
                e.request.width = e.request.height = size;
                m.entries.push_back(std::move(e));
            }
        }
    }
    std::sort(m.entries.begin(), m.entries.end(),
              [](const ManifestEntry& a, const ManifestEntry& b) { return a.clip_id < b.clip_id; });
    return m;
}

// ---------------------------------------------------------------------------
// Manifest JSONL

inline nlohmann::json to_json(const ManifestEntry& e, const DatasetManifest& m) {
    using nlohmann::json;
    const auto& r = e.request;
    json angles = json::object();
    for (int j = 0; j < kJointCount; ++j) {
        const auto& a = r.pose.joint_angles[static_cast<std::size_t>(j)];
        angles[std::string(kJointNames[static_cast<std::size_t>(j)])] = {a.x, a.y, a.z};
    }
    json profile = {
        {"name", r.profile.name},
        {"zoom", {r.profile.zoom.lo, r.profile.zoom.hi}},
        {"x_offset", {r.profile.x_offset.lo, r.profile.x_offset.hi}},
        {"y_offset", {r.profile.y_offset.lo, r.profile.y_offset.hi}},
        {"x_angle", {r.profile.x_angle.lo, r.profile.x_angle.hi}},
        {"y_angle", {r.profile.y_angle.lo, r.profile.y_angle.hi}},
        {"static_background", r.profile.static_background},
        {"dynamic_background", r.profile.dynamic_background},
    };
    return {
        {"clip_id", e.clip_id},
        {"dir", e.rel_dir},
        {"action", std::string(kActionNames[static_cast<std::size_t>(r.pose.action_id)])},
        {"action_id", r.pose.action_id},
        {"variant_id", r.pose.variant_id},
        {"label", r.pose.label()},
        {"joint_angles", angles},
        {"root_offset", {r.pose.root_offset.x, r.pose.root_offset.y, r.pose.root_offset.z}},
        {"style", {{"hair", r.style.hair_style}, {"cloth", r.style.cloth_style}, {"pants", r.style.pants_style}}},
        {"camera",
         {{"zoom_pct", r.camera.zoom_pct},
          {"offset_x", r.camera.offset_x},
          {"offset_y", r.camera.offset_y},
          {"angle_x", r.camera.angle_x},
          {"angle_y", r.camera.angle_y}}},
        {"profile", profile},
        {"seed", r.seed},
        {"dataset_seed", m.seed},
        {"frame_count", r.frame_count},
        {"width", r.width},
        {"height", r.height},
        {"resize_to", imgproc::kExtractSize},
    };
}

inline ManifestEntry entry_from_json(const nlohmann::json& j) {
    try {
        ManifestEntry e;
        e.clip_id = j.at("clip_id").get<std::string>();
        e.rel_dir = j.at("dir").get<std::string>();
        auto& r = e.request;
        r.pose.action_id = j.at("action_id").get<int>();
        r.pose.variant_id = j.at("variant_id").get<int>();
        const auto& angles = j.at("joint_angles");
        for (int k = 0; k < kJointCount; ++k) {
            const auto& a = angles.at(std::string(kJointNames[static_cast<std::size_t>(k)]));
            r.pose.joint_angles[static_cast<std::size_t>(k)] = {a.at(0).get<double>(), a.at(1).get<double>(),
                                                                a.at(2).get<double>()};
        }
        const auto& ro = j.at("root_offset");
        r.pose.root_offset = {ro.at(0).get<double>(), ro.at(1).get<double>(), ro.at(2).get<double>()};
        const auto& st = j.at("style");
        r.style = {st.at("hair").get<int>(), st.at("cloth").get<int>(), st.at("pants").get<int>()};
        const auto& c = j.at("camera");
        r.camera = {c.at("zoom_pct").get<double>(), c.at("offset_x").get<double>(),
                    c.at("offset_y").get<double>(), c.at("angle_x").get<double>(),
                    c.at("angle_y").get<double>()};
        const auto& p = j.at("profile");
        auto iv = [&](const char* k) {
            return Interval{p.at(k).at(0).get<double>(), p.at(k).at(1).get<double>()};
        };
        r.profile.name = p.at("name").get<std::string>();
        r.profile.zoom = iv("zoom");
        r.profile.x_offset = iv("x_offset");
        r.profile.y_offset = iv("y_offset");
        r.profile.x_angle = iv("x_angle");
        r.profile.y_angle = iv("y_angle");
        r.profile.static_background = p.at("static_background").get<bool>();
        r.profile.dynamic_background = p.at("dynamic_background").get<bool>();
        r.seed = j.at("seed").get<std::uint64_t>();
        r.frame_count = j.at("frame_count").get<int>();
        r.width = j.at("width").get<int>();
        r.height = j.at("height").get<int>();
        return e;
    } catch (const nlohmann::json::exception& ex) {
        throw IoError(std::string("malformed manifest entry: ") + ex.what());
    }
}

inline std::string format_manifest(const DatasetManifest& m) {
    std::string out;
    for (const auto& e : m.entries) {
        out += to_json(e, m).dump();
        out += '\n';
    }
    return out;
}

inline void write_manifest(const fs::path& path, const DatasetManifest& m) {
    const std::string text = format_manifest(m);
    write_file_bytes(path, text);
}

inline DatasetManifest read_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open manifest: " + path.string());
    DatasetManifest m;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& ex) {
            throw IoError(path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
        }
        if (m.entries.empty()) {
            m.level = j.value("profile", nlohmann::json::object()).value("name", "");
            m.seed = j.value("dataset_seed", std::uint64_t{0});
        }
        m.entries.push_back(entry_from_json(j));
    }
    if (m.entries.empty()) throw IoError("empty manifest: " + path.string());
    return m;
}

inline DatasetManifest load_dataset_manifest(const fs::path& root, const std::string& level) {
    return read_manifest(manifest_path(root, level));
}

// ---------------------------------------------------------------------------
// Generation

/// Renders and stores a full dataset under options.root/<profile name>.
inline DatasetManifest generate_dataset(const DifficultyProfile& profile, int styles_per_label,
                                        int cameras_per_scene, std::uint64_t seed,
                                        const GenerateOptions& opt) {
    DatasetManifest m =
        plan_dataset(profile, styles_per_label, cameras_per_scene, seed, opt.frame_count, opt.size);
    // validate every request up front so nothing is written on bad input
    for (const auto& e : m.entries) {
        try {
            validate_request(e.request);
        } catch (const InvalidArgument& ex) {
            throw InvalidArgument("clip " + e.clip_id + ": " + ex.what());
        }
    }
    const fs::path dir = dataset_dir(opt.root, profile.name);
    if (fs::exists(dir) && !fs::is_empty(dir)) {
        if (!opt.overwrite)
            throw IoError("output directory exists: " + dir.string() + " (pass --overwrite to replace)");
        fs::remove_all(dir);
    }
    fs::create_directories(dir);
    {
        const std::string cfg = format_profiles({profile});
        write_file_bytes(dir / "profile.cfg", cfg);
    }
    if (!opt.dry_run) {
        std::atomic<std::size_t> done{0};
        parallel_for(m.entries.size(), opt.jobs, [&](std::size_t i) {
            const auto& e = m.entries[i];
            try {
                const auto clip = render_clip(e.request, e.clip_id);
                for (std::size_t f = 0; f < clip.frames.size(); ++f)
                    write_ppm(dir / e.rel_dir / frame_file_name(static_cast<int>(f)), clip.frames[f]);
            } catch (const std::exception& ex) {
                throw IoError("rendering " + e.clip_id + " failed: " + ex.what());
            }
            const std::size_t d = ++done;
            if (opt.progress) opt.progress(d, m.entries.size());
        });
    }
    write_manifest(dir / "manifest.jsonl", m);
    return m;
}

// ---------------------------------------------------------------------------
// Clip access

/// Supplies frame ranges of manifest clips, either from disk or by
/// re-rendering the recorded request.
class ClipSource {
public:
    virtual ~ClipSource() = default;
    virtual std::vector<Rgb8Image> frames(const ManifestEntry& e, int first, int count) const = 0;

    Rgb8Image mid_frame(const ManifestEntry& e) const {
        return frames(e, static_cast<int>(imgproc::mid_frame_index(static_cast<std::size_t>(e.request.frame_count))),
                      1)
            .front();
    }
};

class DiskClipSource final : public ClipSource {
public:
    explicit DiskClipSource(fs::path dataset_dir) : dir_(std::move(dataset_dir)) {}
    std::vector<Rgb8Image> frames(const ManifestEntry& e, int first, int count) const override {
        SYNTHACTION_REQUIRE(first >= 0 && first + count <= e.request.frame_count, "frame range outside clip");
        std::vector<Rgb8Image> out;
        for (int i = first; i < first + count; ++i) out.push_back(read_ppm(dir_ / e.rel_dir / frame_file_name(i)));
        return out;
    }

private:
    fs::path dir_;
};

class RenderClipSource final : public ClipSource {
public:
    std::vector<Rgb8Image> frames(const ManifestEntry& e, int first, int count) const override {
        return render_frames(e.request, first, count);
    }
};

inline std::unique_ptr<ClipSource> make_clip_source(const fs::path& root, const std::string& level, bool replay) {
    if (replay) return std::make_unique<RenderClipSource>();
    return std::make_unique<DiskClipSource>(dataset_dir(root, level));
}

}  // namespace synthaction::scene
