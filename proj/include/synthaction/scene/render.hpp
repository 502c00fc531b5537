#pragma once

// Deterministic software renderer for pose clips.
//
// Each pixel casts a pinhole-camera ray. The avatar's capsules and spheres
// are intersected analytically inside their projected bounding boxes and
// resolved with a per-pixel depth buffer; the background (clear color, or
// sky gradient + checkered ground + fixed boxes) is traced once per clip
// because the camera is static within a clip. Drifting distractor shapes are
// composited between background and avatar.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "synthaction/common.hpp"
#include "synthaction/image.hpp"
#include "synthaction/rng.hpp"
#include "synthaction/scene/camera.hpp"
#include "synthaction/scene/geometry.hpp"
#include "synthaction/scene/pose.hpp"

namespace synthaction::scene {

inline constexpr int kDefaultFrameCount = 30;
inline constexpr int kDefaultFrameSize = 351;
inline constexpr int kMinFrameCount = 6;

struct ClipRequest {
    PoseSpec pose;
    AvatarStyle style;
    CameraConfig camera;
    DifficultyProfile profile;
    std::uint64_t seed = 0;
    int frame_count = kDefaultFrameCount;
    int width = kDefaultFrameSize;
    int height = kDefaultFrameSize;
};

struct VideoClip {
    std::vector<Rgb8Image> frames;
    ClipRequest request;
    std::string clip_id;
};

// ---------------------------------------------------------------------------
// Camera model

inline constexpr double kOrbitRadius = 8.0;           // meters from the target
inline constexpr double kFrameHeightMeters = 4.0;     // visible height at the target, zoom 100%
inline constexpr Vec3 kCameraTarget{0.0, 0.975, 0.0};  // neutral-stance foreground centroid

struct PinholeCamera {
    Vec3 position, forward, right, up;
    double focal_px = 1;
    int width = 1, height = 1;

    /// Orbit position from the angles, shifted by the offsets in the
    /// camera's right/up plane, then re-aimed at the target.
    static PinholeCamera from_config(const CameraConfig& c, int width, int height) {
        PinholeCamera cam;
        cam.width = width;
        cam.height = height;
        const double ax = deg2rad(c.angle_x), ay = deg2rad(c.angle_y);
        const Vec3 dir{std::sin(ay) * std::cos(ax), std::sin(ax), std::cos(ay) * std::cos(ax)};
        Vec3 pos = kCameraTarget + dir * kOrbitRadius;
        cam.aim(pos);
        pos = pos + cam.right * c.offset_x + cam.up * c.offset_y;
        cam.aim(pos);
        cam.focal_px = (c.zoom_pct / 100.0) * height * kOrbitRadius / kFrameHeightMeters;
        return cam;
    }

    Vec3 ray(double px, double py) const {
        return normalized(forward * focal_px + right * (px - width * 0.5) - up * (py - height * 0.5));
    }

    // Returns false when the point is behind the camera.
    bool project(const Vec3& p, double& sx, double& sy) const {
        const Vec3 d = p - position;
        const double z = dot(d, forward);
        if (z <= 1e-6) return false;
        sx = width * 0.5 + focal_px * dot(d, right) / z;
        sy = height * 0.5 - focal_px * dot(d, up) / z;
        return true;
    }

private:
    void aim(const Vec3& pos) {
        position = pos;
        forward = normalized(kCameraTarget - pos);
        right = normalized(cross(forward, Vec3{0, 1, 0}));
        up = cross(right, forward);
    }
};

// ---------------------------------------------------------------------------
// Materials

using Color = std::array<float, 3>;

namespace detail {

inline constexpr Color kClearColor{0.12f, 0.12f, 0.12f};
inline constexpr Color kSkin{0.87f, 0.69f, 0.56f};
inline constexpr Color kShoe{0.15f, 0.15f, 0.17f};
inline constexpr std::array<Color, 4> kHair{{{0.25f, 0.16f, 0.10f},
                                             {0.08f, 0.07f, 0.07f},
                                             {0.85f, 0.72f, 0.40f},
                                             {0.55f, 0.22f, 0.10f}}};

struct Fabric {
    Color primary, secondary;
};
// index = pattern: 0 solid, 1 stripes, 2 checker, 3 dots
inline constexpr std::array<Fabric, 4> kCloth{{{{0.80f, 0.20f, 0.20f}, {0.80f, 0.20f, 0.20f}},
                                               {{0.20f, 0.35f, 0.80f}, {0.95f, 0.95f, 0.95f}},
                                               {{0.20f, 0.65f, 0.30f}, {0.95f, 0.85f, 0.25f}},
                                               {{0.55f, 0.25f, 0.65f}, {0.95f, 0.95f, 0.95f}}}};
inline constexpr std::array<Fabric, 4> kPants{{{{0.15f, 0.20f, 0.40f}, {0.15f, 0.20f, 0.40f}},
                                               {{0.55f, 0.55f, 0.55f}, {0.10f, 0.10f, 0.10f}},
                                               {{0.45f, 0.30f, 0.18f}, {0.80f, 0.68f, 0.50f}},
                                               {{0.10f, 0.55f, 0.55f}, {0.92f, 0.92f, 0.92f}}}};

inline const Vec3 kLightDir = normalized(Vec3{0.4, 0.8, 0.45});
inline constexpr double kAmbient = 0.35;

inline bool pattern_secondary(int pattern, double u, double arc) {
    constexpr double cell = 0.05;
    switch (pattern) {
        case 1: return static_cast<long>(std::floor(u / cell)) % 2 != 0;
        case 2:
            return (static_cast<long>(std::floor(u / cell)) + static_cast<long>(std::floor(arc / cell))) %
                       2 != 0;
        case 3: {
            constexpr double pitch = 0.06;
            const double fu = u / pitch - std::floor(u / pitch) - 0.5;
            const double fv = arc / pitch - std::floor(arc / pitch) - 0.5;
            return fu * fu + fv * fv < 0.09;
        }
        default: return false;
    }
}

inline Color shade(const Color& c, const Vec3& n) {
    const float k = static_cast<float>(kAmbient + (1.0 - kAmbient) * std::max(0.0, dot(n, kLightDir)));
    return {c[0] * k, c[1] * k, c[2] * k};
}

// Texture coordinates: distance along the primitive axis and arc length
// around it, measured from the bone frame's x axis.
inline void surface_coords(const Primitive& p, const Vec3& hit, const Vec3& normal, double& u,
                           double& arc) {
    Vec3 axis = p.b - p.a;
    const double len = norm(axis);
    axis = len > 1e-9 ? axis * (1.0 / len) : p.frame.column(1);
    u = dot(hit - p.a, axis);
    Vec3 ref = p.frame.column(0);
    if (std::abs(dot(ref, axis)) > 0.9) ref = p.frame.column(2);
    ref = normalized(ref - axis * dot(ref, axis));
    const Vec3 ref2 = cross(axis, ref);
    arc = std::atan2(dot(normal, ref2), dot(normal, ref)) * p.radius;
}

inline Color material_color(const Primitive& p, const AvatarStyle& style, const Vec3& hit,
                            const Vec3& normal) {
    const Fabric* fabric = nullptr;
    int pattern = 0;
    switch (p.material) {
        case Material::Skin: return kSkin;
        case Material::Shoe: return kShoe;
        case Material::Hair: return kHair[static_cast<std::size_t>(style.hair_style & 3)];
        case Material::Shirt:
            pattern = style.cloth_style & 3;
            fabric = &kCloth[static_cast<std::size_t>(pattern)];
            break;
        case Material::Pants:
            pattern = style.pants_style & 3;
            fabric = &kPants[static_cast<std::size_t>(pattern)];
            break;
    }
    double u, arc;
    surface_coords(p, hit, normal, u, arc);
    return pattern_secondary(pattern, u, arc) ? fabric->secondary : fabric->primary;
}

// Nearest positive ray parameter for a capsule (sphere when a == b), or -1.
inline double intersect(const Primitive& p, const Vec3& ro, const Vec3& rd) {
    auto sphere_hit = [&](const Vec3& c) {
        const Vec3 oc = ro - c;
        const double b = dot(rd, oc);
        const double cc = dot(oc, oc) - p.radius * p.radius;
        const double h = b * b - cc;
        if (h < 0) return -1.0;
        const double t = -b - std::sqrt(h);
        return t > 0 ? t : -1.0;
    };
    const Vec3 ba = p.b - p.a;
    const double baba = dot(ba, ba);
    if (p.kind == Primitive::Kind::Sphere || baba < 1e-12) return sphere_hit(p.a);
    const Vec3 oa = ro - p.a;
    const double bard = dot(ba, rd), baoa = dot(ba, oa), rdoa = dot(rd, oa), oaoa = dot(oa, oa);
    const double a = baba - bard * bard;
    const double b = baba * rdoa - baoa * bard;
    const double c = baba * oaoa - baoa * baoa - p.radius * p.radius * baba;
    const double h = b * b - a * c;
    if (a > 1e-12 && h >= 0) {
        const double t = (-b - std::sqrt(h)) / a;
        const double y = baoa + t * bard;
        if (y > 0 && y < baba) return t > 0 ? t : -1.0;
    }
    const double ta = sphere_hit(p.a), tb = sphere_hit(p.b);
    if (ta < 0) return tb;
    if (tb < 0) return ta;
    return std::min(ta, tb);
}

inline Vec3 surface_normal(const Primitive& p, const Vec3& hit) {
    const Vec3 ba = p.b - p.a;
    const double baba = dot(ba, ba);
    double h = baba > 1e-12 ? std::clamp(dot(hit - p.a, ba) / baba, 0.0, 1.0) : 0.0;
    return normalized(hit - (p.a + ba * h));
}

struct Box {
    Vec3 lo, hi;
    Color color;
};
inline const std::array<Box, 3> kProps{{{{-3.2, 0.0, -3.5}, {-2.0, 1.2, -2.3}, {0.70f, 0.30f, 0.25f}},
                                        {{2.2, 0.0, -3.0}, {3.0, 2.0, -2.2}, {0.85f, 0.75f, 0.30f}},
                                        {{-0.5, 0.0, -6.0}, {1.5, 0.8, -5.0}, {0.25f, 0.55f, 0.60f}}}};

inline Color static_background(const Vec3& ro, const Vec3& rd) {
    double best = std::numeric_limits<double>::infinity();
    Color color{};
    // ground plane y = 0, 0.5 m checker
    if (rd.y < -1e-9) {
        const double t = -ro.y / rd.y;
        if (t > 0 && t < 60.0) {
            const Vec3 h = ro + rd * t;
            const bool dark = (static_cast<long>(std::floor(h.x / 0.5)) +
                               static_cast<long>(std::floor(h.z / 0.5))) % 2 != 0;
            best = t;
            color = shade(dark ? Color{0.35f, 0.48f, 0.28f} : Color{0.47f, 0.62f, 0.37f}, {0, 1, 0});
        }
    }
    for (const auto& box : kProps) {
        double t0 = 0, t1 = best;
        int axis = -1;
        bool hit = true;
        for (int k = 0; k < 3 && hit; ++k) {
            const double o = k == 0 ? ro.x : k == 1 ? ro.y : ro.z;
            const double d = k == 0 ? rd.x : k == 1 ? rd.y : rd.z;
            const double lo = k == 0 ? box.lo.x : k == 1 ? box.lo.y : box.lo.z;
            const double hi = k == 0 ? box.hi.x : k == 1 ? box.hi.y : box.hi.z;
            if (std::abs(d) < 1e-12) {
                if (o < lo || o > hi) hit = false;
                continue;
            }
            double ta = (lo - o) / d, tb = (hi - o) / d;
            if (ta > tb) std::swap(ta, tb);
            if (ta > t0) {
                t0 = ta;
                axis = k;
            }
            t1 = std::min(t1, tb);
            if (t0 > t1) hit = false;
        }
        if (hit && axis >= 0 && t0 < best) {
            best = t0;
            Vec3 n{};
            const double d = axis == 0 ? rd.x : axis == 1 ? rd.y : rd.z;
            (axis == 0 ? n.x : axis == 1 ? n.y : n.z) = d > 0 ? -1.0 : 1.0;
            color = shade(box.color, n);
        }
    }
    if (std::isfinite(best)) return color;
    const float k = static_cast<float>(std::clamp(rd.y * 2.5, 0.0, 1.0));
    const Color horizon{0.75f, 0.85f, 0.95f}, zenith{0.30f, 0.50f, 0.85f};
    return {horizon[0] + k * (zenith[0] - horizon[0]), horizon[1] + k * (zenith[1] - horizon[1]),
            horizon[2] + k * (zenith[2] - horizon[2])};
}

struct Distractor {
    bool circle;
    double u0, v0, du, dv, size;
    Color color;
};

inline std::vector<Distractor> make_distractors(std::uint64_t clip_seed) {
    Rng rng(clip_seed, {0xD157u});
    std::vector<Distractor> out;
    for (int i = 0; i < 4; ++i) {
        Distractor d;
        d.circle = i % 2 == 0;
        d.u0 = rng.uniform();
        d.v0 = rng.uniform();
        const double heading = rng.uniform(0, 2 * kPi);
        const double speed = rng.uniform(0.004, 0.015);
        d.du = speed * std::cos(heading);
        d.dv = speed * std::sin(heading);
        d.size = rng.uniform(0.04, 0.09);
        d.color = {static_cast<float>(rng.uniform(0.1, 1.0)), static_cast<float>(rng.uniform(0.1, 1.0)),
                   static_cast<float>(rng.uniform(0.1, 1.0))};
        out.push_back(d);
    }
    return out;
}

// Wrapped screen-space position of a distractor at a frame, in [0, 1).
inline void distractor_center(const Distractor& d, int frame, double& u, double& v) {
    u = d.u0 + d.du * frame;
    v = d.v0 + d.dv * frame;
    u -= std::floor(u);
    v -= std::floor(v);
}

inline bool distractor_covers(const Distractor& d, int frame, double px, double py) {
    double cu, cv;
    distractor_center(d, frame, cu, cv);
    // torus distance so shapes wrap smoothly across edges
    double du = std::abs(px - cu), dv = std::abs(py - cv);
    du = std::min(du, 1.0 - du);
    dv = std::min(dv, 1.0 - dv);
    return d.circle ? du * du + dv * dv <= d.size * d.size : du <= d.size && dv <= d.size;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Animation

inline constexpr double kIdleSwayMeters = 0.04;

/// Frame index by which the pose is fully reached: floor(0.3 * frame_count).
inline int pose_completion_frame(int frame_count) { return (3 * frame_count) / 10; }

/// Ease-in (quadratic) interpolation parameter of frame `i`.
inline double pose_blend(int i, int frame_count) {
    const int end = pose_completion_frame(frame_count);
    if (end <= 0 || i >= end) return 1.0;
    const double u = static_cast<double>(i) / end;
    return u * u;
}

/// Lateral idle sway of the root; zero at the mid frame so the representative
/// frame shows the exact authored pose, but neighbouring frames move.
inline double idle_sway(int i, int frame_count) {
    const int mid = frame_count / 2;
    return kIdleSwayMeters * std::sin(2.0 * kPi * (i - mid) / frame_count);
}

inline Skeleton animated_skeleton(const PoseSpec& target, int i, int frame_count) {
    const double s = pose_blend(i, frame_count);
    const PoseSpec neutral = neutral_pose();
    JointAngles angles{};
    for (int j = 0; j < kJointCount; ++j) angles[j] = target.joint_angles[j] * s;
    Vec3 root = lerp(neutral.root_offset, target.root_offset, s);
    root.x += idle_sway(i, frame_count);
    return forward_kinematics(angles, root);
}

// ---------------------------------------------------------------------------
// Rendering

inline void validate_request(const ClipRequest& r) {
    SYNTHACTION_REQUIRE(r.frame_count >= kMinFrameCount,
                        "render_clip: frame_count must be >= 6 (background subtraction window)");
    SYNTHACTION_REQUIRE(r.width == r.height, "render_clip: frames must be square");
    SYNTHACTION_REQUIRE(r.width >= 8, "render_clip: frame size too small");
    const bool neutral = r.pose.action_id == -1 && r.pose.variant_id == -1;
    SYNTHACTION_REQUIRE(neutral || (r.pose.action_id >= 0 && r.pose.action_id < kActionCount &&
                                    r.pose.variant_id >= 0 && r.pose.variant_id < kVariantCount),
                        "render_clip: pose not in library");
    for (const auto& a : r.pose.joint_angles)
        SYNTHACTION_REQUIRE(std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z),
                            "render_clip: non-finite joint angle");
    SYNTHACTION_REQUIRE(r.profile.admits(r.camera), "render_clip: camera outside profile bounds");
    for (int s : {r.style.hair_style, r.style.cloth_style, r.style.pants_style})
        SYNTHACTION_REQUIRE(s >= 0 && s < 4, "render_clip: style index out of range");
}

/// Stateful per-clip renderer; caches rays and the static background.
class ClipRenderer {
public:
    explicit ClipRenderer(const ClipRequest& request)
        : req_(request), cam_(PinholeCamera::from_config(request.camera, request.width, request.height)) {
        validate_request(request);
        const int w = req_.width, h = req_.height;
        rays_.resize(static_cast<std::size_t>(w) * h);
        background_.resize(rays_.size());
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                rays_[i] = cam_.ray(x + 0.5, y + 0.5);
                background_[i] = req_.profile.static_background
                                     ? detail::static_background(cam_.position, rays_[i])
                                     : detail::kClearColor;
            }
        if (req_.profile.dynamic_background) distractors_ = detail::make_distractors(req_.seed);
    }

    Rgb8Image frame(int index) const {
        SYNTHACTION_REQUIRE(index >= 0 && index < req_.frame_count, "frame index out of range");
        const int w = req_.width, h = req_.height;
        const auto prims =
            body_primitives(animated_skeleton(req_.pose, index, req_.frame_count), req_.style);

        std::vector<double> depth(rays_.size(), std::numeric_limits<double>::infinity());
        std::vector<int> owner(rays_.size(), -1);
        for (std::size_t k = 0; k < prims.size(); ++k) {
            int x0, y0, x1, y1;
            if (!screen_bounds(prims[k], x0, y0, x1, y1)) continue;
            for (int y = y0; y <= y1; ++y)
                for (int x = x0; x <= x1; ++x) {
                    const std::size_t i = static_cast<std::size_t>(y) * w + x;
                    const double t = detail::intersect(prims[k], cam_.position, rays_[i]);
                    if (t > 0 && t < depth[i]) {
                        depth[i] = t;
                        owner[i] = static_cast<int>(k);
                    }
                }
        }

        Rgb8Image img(w, h);
        for (int y = 0; y < h; ++y)
            for (int x = 0; x < w; ++x) {
                const std::size_t i = static_cast<std::size_t>(y) * w + x;
                Color c;
                if (owner[i] >= 0) {
                    const Primitive& p = prims[static_cast<std::size_t>(owner[i])];
                    const Vec3 hit = cam_.position + rays_[i] * depth[i];
                    const Vec3 n = detail::surface_normal(p, hit);
                    c = detail::shade(detail::material_color(p, req_.style, hit, n), n);
                } else {
                    c = background_[i];
                    const double px = (x + 0.5) / w, py = (y + 0.5) / h;
                    for (const auto& d : distractors_)
                        if (detail::distractor_covers(d, index, px, py)) c = d.color;
                }
                std::uint8_t* out = img.at(x, y);
                for (int ch = 0; ch < 3; ++ch) out[ch] = quantize_unit(c[static_cast<std::size_t>(ch)]);
            }
        return img;
    }

    const PinholeCamera& camera() const { return cam_; }

private:
    bool screen_bounds(const Primitive& p, int& x0, int& y0, int& x1, int& y1) const {
        const double r = p.radius;
        const Vec3 lo{std::min(p.a.x, p.b.x) - r, std::min(p.a.y, p.b.y) - r, std::min(p.a.z, p.b.z) - r};
        const Vec3 hi{std::max(p.a.x, p.b.x) + r, std::max(p.a.y, p.b.y) + r, std::max(p.a.z, p.b.z) + r};
        double minx = 1e300, miny = 1e300, maxx = -1e300, maxy = -1e300;
        for (int c = 0; c < 8; ++c) {
            const Vec3 corner{c & 1 ? hi.x : lo.x, c & 2 ? hi.y : lo.y, c & 4 ? hi.z : lo.z};
            double sx, sy;
            if (!cam_.project(corner, sx, sy)) {
                // straddles the camera plane: fall back to the full frame
                minx = miny = 0;
                maxx = cam_.width;
                maxy = cam_.height;
                break;
            }
            minx = std::min(minx, sx);
            maxx = std::max(maxx, sx);
            miny = std::min(miny, sy);
            maxy = std::max(maxy, sy);
        }
        x0 = std::max(0, static_cast<int>(std::floor(minx)) - 1);
        y0 = std::max(0, static_cast<int>(std::floor(miny)) - 1);
        x1 = std::min(cam_.width - 1, static_cast<int>(std::ceil(maxx)) + 1);
        y1 = std::min(cam_.height - 1, static_cast<int>(std::ceil(maxy)) + 1);
        return x0 <= x1 && y0 <= y1;
    }

    ClipRequest req_;
    PinholeCamera cam_;
    std::vector<Vec3> rays_;
    std::vector<Color> background_;
    std::vector<detail::Distractor> distractors_;
};

/// Renders frames [first, first + count) of a clip.
inline std::vector<Rgb8Image> render_frames(const ClipRequest& request, int first, int count) {
    ClipRenderer renderer(request);
    SYNTHACTION_REQUIRE(first >= 0 && count >= 0 && first + count <= request.frame_count,
                        "render_frames: range outside clip");
    std::vector<Rgb8Image> frames;
    frames.reserve(static_cast<std::size_t>(count));
    for (int i = first; i < first + count; ++i) frames.push_back(renderer.frame(i));
    return frames;
}

inline VideoClip render_clip(const ClipRequest& request, std::string clip_id = {}) {
    VideoClip clip;
    clip.frames = render_frames(request, 0, request.frame_count);
    clip.request = request;
    clip.clip_id = std::move(clip_id);
    return clip;
}

inline bool is_clear_color(const std::uint8_t* px) {
    for (int c = 0; c < 3; ++c)
        if (px[c] != quantize_unit(detail::kClearColor[static_cast<std::size_t>(c)])) return false;
    return true;
}

}  // namespace synthaction::scene
