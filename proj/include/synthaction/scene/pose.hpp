#pragma once

// Articulated capsule avatar: joint set, forward kinematics, and the
// authored library of ten yoga poses with four variants each.

#include <algorithm>
#include <array>
#include <cmath>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "synthaction/common.hpp"
#include "synthaction/scene/geometry.hpp"

namespace synthaction::scene {

enum class Joint : int {
    Root,
    Spine,
    Neck,
    Head,
    LShoulder,
    RShoulder,
    LElbow,
    RElbow,
    LHip,
    RHip,
    LKnee,
    RKnee,
    LAnkle,
    RAnkle,
};
inline constexpr int kJointCount = 14;

inline constexpr std::array<std::string_view, kJointCount> kJointNames = {
    "root",       "spine",   "neck",    "head",  "l_shoulder", "r_shoulder", "l_elbow",
    "r_elbow",    "l_hip",   "r_hip",   "l_knee", "r_knee",     "l_ankle",    "r_ankle"};

inline constexpr int kActionCount = 10;
inline constexpr int kVariantCount = 4;
inline constexpr int kLabelCount = kActionCount * kVariantCount;

inline constexpr std::array<std::string_view, kActionCount> kActionNames = {
    "camel", "chair",    "childs",     "lord_of_the_dance", "lotus",
    "thunderbolt", "triangle", "upward_dog", "warrior_ii",  "warrior_iii"};

inline constexpr int label_of(int action_id, int variant_id) {
    return action_id * kVariantCount + variant_id;
}

using JointAngles = std::array<Vec3, kJointCount>;  // degrees, (x, y, z) per joint

struct PoseSpec {
    int action_id = 0;
    int variant_id = 0;
    JointAngles joint_angles{};
    Vec3 root_offset{};

    std::string name() const {
        return std::string(kActionNames[static_cast<std::size_t>(action_id)]) + "_" +
               std::to_string(variant_id);
    }
    int label() const { return label_of(action_id, variant_id); }
};

/// Aggregate L2 distance over all joint angles, in degrees.
inline double angle_distance(const PoseSpec& a, const PoseSpec& b) {
    double s = 0;
    for (int j = 0; j < kJointCount; ++j) {
        const Vec3 d = a.joint_angles[j] - b.joint_angles[j];
        s += dot(d, d);
    }
    return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// Body geometry

enum class Material : int { Skin, Shirt, Pants, Hair, Shoe };

struct Primitive {
    enum class Kind { Sphere, Capsule } kind = Kind::Sphere;
    Vec3 a, b;           // sphere center in a; capsule segment a-b
    double radius = 0;
    Material material = Material::Skin;
    Mat3 frame;          // texture frame of the owning bone
};

struct Skeleton {
    std::array<Vec3, kJointCount> position{};
    std::array<Mat3, kJointCount> rotation{};  // world rotation of each joint frame
};

namespace detail {

inline constexpr int parent_of(Joint j) {
    switch (j) {
        case Joint::Root: return -1;
        case Joint::Spine: return static_cast<int>(Joint::Root);
        case Joint::Neck: return static_cast<int>(Joint::Spine);
        case Joint::Head: return static_cast<int>(Joint::Neck);
        case Joint::LShoulder:
        case Joint::RShoulder: return static_cast<int>(Joint::Spine);
        case Joint::LElbow: return static_cast<int>(Joint::LShoulder);
        case Joint::RElbow: return static_cast<int>(Joint::RShoulder);
        case Joint::LHip:
        case Joint::RHip: return static_cast<int>(Joint::Root);
        case Joint::LKnee: return static_cast<int>(Joint::LHip);
        case Joint::RKnee: return static_cast<int>(Joint::RHip);
        case Joint::LAnkle: return static_cast<int>(Joint::LKnee);
        case Joint::RAnkle: return static_cast<int>(Joint::RKnee);
    }
    return -1;
}

// Rest offset of each joint in its parent's frame (meters). +x is the
// avatar's left, +y up, +z the facing direction.
inline constexpr Vec3 rest_offset(Joint j) {
    switch (j) {
        case Joint::Root: return {0, 0, 0};
        case Joint::Spine: return {0, 0.22, 0};
        case Joint::Neck: return {0, 0.30, 0};
        case Joint::Head: return {0, 0.09, 0};
        case Joint::LShoulder: return {0.19, 0.26, 0};
        case Joint::RShoulder: return {-0.19, 0.26, 0};
        case Joint::LElbow:
        case Joint::RElbow: return {0, -0.28, 0};
        case Joint::LHip: return {0.10, -0.06, 0};
        case Joint::RHip: return {-0.10, -0.06, 0};
        case Joint::LKnee:
        case Joint::RKnee: return {0, -0.43, 0};
        case Joint::LAnkle:
        case Joint::RAnkle: return {0, -0.42, 0};
    }
    return {};
}

inline constexpr Vec3 kWristOffset{0, -0.25, 0};
inline constexpr Vec3 kToeOffset{0, -0.05, 0.15};
inline constexpr Vec3 kHeadCenterOffset{0, 0.11, 0};

}  // namespace detail

/// Forward kinematics; the root sits at `root_position`.
inline Skeleton forward_kinematics(const JointAngles& angles, const Vec3& root_position) {
    Skeleton s;
    for (int j = 0; j < kJointCount; ++j) {
        const auto joint = static_cast<Joint>(j);
        const Mat3 local = euler_xzy(angles[j]);
        const int p = detail::parent_of(joint);
        if (p < 0) {
            s.position[j] = root_position;
            s.rotation[j] = local;
        } else {
            s.position[j] = s.position[p] + s.rotation[p] * detail::rest_offset(joint);
            s.rotation[j] = s.rotation[p] * local;
        }
    }
    return s;
}

struct AvatarStyle {
    int hair_style = 0;   // 0..3
    int cloth_style = 0;  // 0..3: solid, stripes, checker, dots
    int pants_style = 0;  // 0..3: solid, stripes, checker, dots

    int index() const { return hair_style * 16 + cloth_style * 4 + pants_style; }
    static AvatarStyle from_index(int i) { return {i / 16, (i / 4) % 4, i % 4}; }
    bool operator==(const AvatarStyle&) const = default;
};
inline constexpr int kStyleCombinations = 64;

/// Capsule/sphere primitives for a posed skeleton.
inline std::vector<Primitive> body_primitives(const Skeleton& s, const AvatarStyle& style) {
    using K = Primitive::Kind;
    std::vector<Primitive> out;
    auto P = [&](Joint j) { return s.position[static_cast<int>(j)]; };
    auto R = [&](Joint j) { return s.rotation[static_cast<int>(j)]; };
    auto capsule = [&](Vec3 a, Vec3 b, double r, Material m, const Mat3& f) {
        out.push_back({K::Capsule, a, b, r, m, f});
    };
    auto sphere = [&](Vec3 c, double r, Material m, const Mat3& f) {
        out.push_back({K::Sphere, c, c, r, m, f});
    };

    // torso
    capsule(P(Joint::LHip), P(Joint::RHip), 0.11, Material::Pants, R(Joint::Root));
    capsule(P(Joint::Root), P(Joint::Spine), 0.13, Material::Shirt, R(Joint::Root));
    const Vec3 chest_top = P(Joint::Spine) + R(Joint::Spine) * Vec3{0, 0.21, 0};
    capsule(P(Joint::Spine), chest_top, 0.15, Material::Shirt, R(Joint::Spine));
    capsule(P(Joint::LShoulder), P(Joint::RShoulder), 0.065, Material::Shirt, R(Joint::Spine));

    // neck and head
    capsule(P(Joint::Neck), P(Joint::Head), 0.05, Material::Skin, R(Joint::Neck));
    const Mat3& hr = R(Joint::Head);
    const Vec3 head = P(Joint::Head) + hr * detail::kHeadCenterOffset;
    sphere(head, 0.11, Material::Skin, hr);
    // hair cap sits up and back so the face stays exposed
    sphere(head + hr * Vec3{0, 0.025, -0.03}, 0.113, Material::Hair, hr);
    switch (style.hair_style) {
        case 1:  // long
            capsule(head + hr * Vec3{0, 0.0, -0.06}, head + hr * Vec3{0, -0.26, -0.09}, 0.085,
                    Material::Hair, hr);
            break;
        case 2:  // bun
            sphere(head + hr * Vec3{0, 0.10, -0.08}, 0.06, Material::Hair, hr);
            break;
        case 3:  // ponytail
            capsule(head + hr * Vec3{0, 0.05, -0.12}, head + hr * Vec3{0, -0.20, -0.19}, 0.035,
                    Material::Hair, hr);
            break;
        default:  // short
            break;
    }

    // arms
    for (auto [sh, el] : {std::pair{Joint::LShoulder, Joint::LElbow},
                          std::pair{Joint::RShoulder, Joint::RElbow}}) {
        const Vec3 wrist = P(el) + R(el) * detail::kWristOffset;
        capsule(P(sh), P(el), 0.055, Material::Shirt, R(sh));
        capsule(P(el), wrist, 0.042, Material::Skin, R(el));
        sphere(wrist + R(el) * Vec3{0, -0.045, 0}, 0.048, Material::Skin, R(el));
    }
    // legs
    for (auto [hp, kn, an] : {std::tuple{Joint::LHip, Joint::LKnee, Joint::LAnkle},
                              std::tuple{Joint::RHip, Joint::RKnee, Joint::RAnkle}}) {
        capsule(P(hp), P(kn), 0.078, Material::Pants, R(hp));
        capsule(P(kn), P(an), 0.056, Material::Pants, R(kn));
        capsule(P(an), P(an) + R(an) * detail::kToeOffset, 0.042, Material::Shoe, R(an));
    }
    return out;
}

/// Lowest point of the body surface (hair excluded).
inline double lowest_point(const std::vector<Primitive>& prims) {
    double lo = 1e300;
    for (const auto& p : prims) {
        if (p.material == Material::Hair) continue;
        lo = std::min({lo, p.a.y - p.radius, p.b.y - p.radius});
    }
    return lo;
}

// ---------------------------------------------------------------------------
// Pose authoring

namespace detail {

// Semantic setters. `side` is +1 for left, -1 for right; mirrored joints
// flip the sign of twist and abduction.
class PoseBuilder {
public:
    PoseBuilder& root(double pitch_fwd, double yaw = 0, double lean_left = 0) {
        return set(Joint::Root, {pitch_fwd, yaw, -lean_left});
    }
    PoseBuilder& spine(double bend_fwd, double twist = 0, double lean_left = 0) {
        return set(Joint::Spine, {bend_fwd, twist, -lean_left});
    }
    PoseBuilder& neck(double bend_fwd, double turn = 0, double tilt_left = 0) {
        return set(Joint::Neck, {bend_fwd, turn, -tilt_left});
    }
    PoseBuilder& head(double bend_fwd, double turn = 0, double tilt_left = 0) {
        return set(Joint::Head, {bend_fwd, turn, -tilt_left});
    }
    PoseBuilder& shoulder(int side, double flex_fwd, double abduct = 0, double twist = 0) {
        return set(side > 0 ? Joint::LShoulder : Joint::RShoulder,
                   {-flex_fwd, side * twist, side * abduct});
    }
    PoseBuilder& elbow(int side, double flex) {
        return set(side > 0 ? Joint::LElbow : Joint::RElbow, {-flex, 0, 0});
    }
    PoseBuilder& hip(int side, double flex_fwd, double abduct = 0, double twist_out = 0) {
        return set(side > 0 ? Joint::LHip : Joint::RHip, {-flex_fwd, side * twist_out, side * abduct});
    }
    PoseBuilder& knee(int side, double flex) {
        return set(side > 0 ? Joint::LKnee : Joint::RKnee, {flex, 0, 0});
    }
    PoseBuilder& ankle(int side, double point) {
        return set(side > 0 ? Joint::LAnkle : Joint::RAnkle, {point, 0, 0});
    }
    // both sides at once
    PoseBuilder& shoulders(double flex_fwd, double abduct = 0, double twist = 0) {
        return shoulder(1, flex_fwd, abduct, twist).shoulder(-1, flex_fwd, abduct, twist);
    }
    PoseBuilder& elbows(double flex) { return elbow(1, flex).elbow(-1, flex); }
    PoseBuilder& hips(double flex_fwd, double abduct = 0, double twist_out = 0) {
        return hip(1, flex_fwd, abduct, twist_out).hip(-1, flex_fwd, abduct, twist_out);
    }
    PoseBuilder& knees(double flex) { return knee(1, flex).knee(-1, flex); }
    PoseBuilder& ankles(double point) { return ankle(1, point).ankle(-1, point); }

    const JointAngles& angles() const { return a_; }

private:
    PoseBuilder& set(Joint j, Vec3 v) {
        a_[static_cast<int>(j)] = v;
        return *this;
    }
    JointAngles a_{};
};

constexpr int L = 1, R = -1;

// Each action: a base pose and three variants that perturb a few joints of it.
inline std::array<PoseBuilder, kVariantCount> author_action(int action) {
    PoseBuilder base;
    switch (action) {
        case 0:  // camel: kneeling back-bend, hands toward the heels
            base.root(-15).hips(-15).knees(90).ankles(30).spine(-35).neck(-20).head(-20)
                .shoulders(-45, 10);
            break;
        case 1:  // chair: deep knee bend, hips back, arms raised
            base.root(35).hips(95).knees(90).ankles(-25).shoulders(170).neck(-15);
            break;
        case 2:  // childs: sitting back on the heels, folded forward
            base.root(70).hips(110).knees(135).ankles(40).spine(20).neck(10).shoulders(170, 10);
            break;
        case 3:  // lord of the dance: one-leg balance, rear leg lifted and held
            base.root(30).spine(-10).neck(-10).hip(R, 30).hip(L, -40).knee(L, 110)
                .shoulder(L, -60).shoulder(R, 150);
            break;
        case 4:  // lotus: seated cross-legged
            base.hips(90, 45, 70).knees(140).ankles(20).shoulders(20, 20).elbows(30);
            break;
        case 5:  // thunderbolt: upright kneel-sit on the heels
            base.hips(90, 5).knees(170).ankles(40).shoulders(30, 5).elbows(45);
            break;
        case 6:  // triangle: wide stance, side bend, arms vertical
            base.root(0, 0, -40).hip(L, 0, 75).hip(R, 0, -5).ankles(-10).shoulders(0, 90)
                .shoulder(R, 0, 95).neck(0, 40);
            break;
        case 7:  // upward dog: prone with chest lifted on straight arms
            base.root(75).ankles(60).hips(-10).spine(-40).neck(-20).shoulders(40);
            break;
        case 8:  // warrior II: lunge with arms extended sideways
            base.hip(L, 30, 40, 40).knee(L, 70).hip(R, 0, 40, 20).ankles(-15).shoulders(0, 90)
                .neck(0, 70);
            break;
        case 9:  // warrior III: balance with torso and rear leg horizontal
            base.root(80).hip(R, 80).hip(L, -5).ankles(-10).shoulders(170).neck(-30);
            break;
        default: break;
    }
    std::array<PoseBuilder, kVariantCount> v{base, base, base, base};
    switch (action) {
        case 0:
            v[1].elbows(35);
            v[2].shoulder(L, 0, 10);
            v[3].spine(-15).neck(-5).head(-10);
            break;
        case 1:
            v[1].shoulders(135);
            v[2].shoulders(170, 30);
            v[3].spine(0, 30);
            break;
        case 2:
            v[1].shoulders(140, 10).elbows(25);
            v[2].hips(110, 25);
            v[3].spine(20, 0, 20).neck(10, 25);
            break;
        case 3:
            v[1].shoulder(R, 110, 25);
            v[2].root(50).hip(R, 50);
            v[3].knee(L, 140).shoulder(L, -35);
            break;
        case 4:
            v[1].elbows(90);
            v[2].shoulders(55, 35);
            v[3].spine(25).neck(15);
            break;
        case 5:
            v[1].elbows(100);
            v[2].shoulders(65, 10);
            v[3].spine(-15).neck(-15);
            break;
        case 6:
            v[1].spine(0, 30);
            v[2].shoulder(L, 0, 135);
            v[3].elbow(L, 45).neck(0, 10);
            break;
        case 7:
            v[1].shoulders(40, 20).elbows(25);
            v[2].spine(-20).neck(-5);
            v[3].spine(-55).neck(-35);
            break;
        case 8:
            v[1].spine(-20);
            v[2].shoulders(0, 120);
            v[3].knee(L, 35).hip(L, 15, 40, 40);
            break;
        case 9:
            v[1].shoulders(135, 20);
            v[2].neck(0, 35);
            v[3].knee(R, 30).hip(R, 95);
            break;
        default: break;
    }
    return v;
}

inline Vec3 grounding_offset(const JointAngles& angles) {
    const Skeleton s = forward_kinematics(angles, {});
    return {0, -lowest_point(body_primitives(s, {})), 0};
}

}  // namespace detail

/// Neutral standing stance: all joint angles zero, feet on the ground.
inline PoseSpec neutral_pose() {
    PoseSpec p;
    p.action_id = -1;
    p.variant_id = -1;
    p.root_offset = detail::grounding_offset(p.joint_angles);
    return p;
}

/// The 40 authored (action, variant) poses in label order.
inline std::vector<PoseSpec> build_pose_library() {
    std::vector<PoseSpec> lib;
    lib.reserve(kLabelCount);
    for (int a = 0; a < kActionCount; ++a) {
        const auto variants = detail::author_action(a);
        for (int v = 0; v < kVariantCount; ++v) {
            PoseSpec p;
            p.action_id = a;
            p.variant_id = v;
            p.joint_angles = variants[static_cast<std::size_t>(v)].angles();
            p.root_offset = detail::grounding_offset(p.joint_angles);
            lib.push_back(p);
        }
    }
    return lib;
}

inline const PoseSpec& pose_for(const std::vector<PoseSpec>& library, int action_id, int variant_id) {
    SYNTHACTION_REQUIRE(action_id >= 0 && action_id < kActionCount && variant_id >= 0 &&
                            variant_id < kVariantCount,
                        "pose not in library");
    return library[static_cast<std::size_t>(label_of(action_id, variant_id))];
}

inline int action_id_from_name(std::string_view name) {
    for (int a = 0; a < kActionCount; ++a)
        if (kActionNames[static_cast<std::size_t>(a)] == name) return a;
    throw InvalidArgument("unknown action: " + std::string(name));
}

}  // namespace synthaction::scene
