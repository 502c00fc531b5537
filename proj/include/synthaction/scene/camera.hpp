#pragma once

// Camera configuration, difficulty profiles and their text config format.

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "synthaction/common.hpp"
#include "synthaction/rng.hpp"

namespace synthaction::scene {

struct CameraConfig {
    double zoom_pct = 100;
    double offset_x = 0;  // meters
    double offset_y = 0;  // meters
    double angle_x = 0;   // degrees, orbit elevation
    double angle_y = 0;   // degrees, orbit azimuth
    bool operator==(const CameraConfig&) const = default;
};

struct Interval {
    double lo = 0, hi = 0;
    bool contains(double v) const { return v >= lo && v <= hi; }
    bool operator==(const Interval&) const = default;
};

struct DifficultyProfile {
    std::string name;
    Interval zoom, x_offset, y_offset, x_angle, y_angle;
    bool static_background = false;
    bool dynamic_background = false;

    bool admits(const CameraConfig& c) const {
        return zoom.contains(c.zoom_pct) && x_offset.contains(c.offset_x) &&
               y_offset.contains(c.offset_y) && x_angle.contains(c.angle_x) &&
               y_angle.contains(c.angle_y);
    }
    bool operator==(const DifficultyProfile&) const = default;
};

inline DifficultyProfile easy_profile() {
    return {"easy", {80, 110}, {-1.5, 1.5}, {-1.5, 1.5}, {-5, 10}, {-30, 30}, false, false};
}
inline DifficultyProfile medium_profile() {
    auto p = easy_profile();
    p.name = "medium";
    p.static_background = true;
    return p;
}
inline DifficultyProfile hard_profile() {
    return {"hard", {70, 120}, {-3.0, 3.0}, {-2.0, 2.0}, {-5, 20}, {-45, 45}, true, true};
}

inline std::vector<DifficultyProfile> builtin_profiles() {
    return {easy_profile(), medium_profile(), hard_profile()};
}

inline DifficultyProfile profile_by_name(const std::string& name) {
    for (auto& p : builtin_profiles())
        if (p.name == name) return p;
    throw InvalidArgument("unknown difficulty level: " + name + " (expected easy|medium|hard)");
}

/// Draws each camera field uniformly from the profile's intervals, in the
/// fixed order zoom, offset_x, offset_y, angle_x, angle_y.
inline CameraConfig sample_camera(const DifficultyProfile& p, Rng& rng) {
    CameraConfig c;
    c.zoom_pct = rng.uniform(p.zoom.lo, p.zoom.hi);
    c.offset_x = rng.uniform(p.x_offset.lo, p.x_offset.hi);
    c.offset_y = rng.uniform(p.y_offset.lo, p.y_offset.hi);
    c.angle_x = rng.uniform(p.x_angle.lo, p.x_angle.hi);
    c.angle_y = rng.uniform(p.y_angle.lo, p.y_angle.hi);
    return c;
}

// ---------------------------------------------------------------------------
// Plain-text profile definitions:
//
//   [easy]
//   min_zoom = 80
//   max_zoom = 110
//   ...
//   static_background = off

inline std::string format_profiles(const std::vector<DifficultyProfile>& profiles) {
    std::ostringstream os;
    os.precision(17);
    auto onoff = [](bool b) { return b ? "on" : "off"; };
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        const auto& p = profiles[i];
        if (i) os << '\n';
        os << '[' << p.name << "]\n"
           << "min_zoom = " << p.zoom.lo << "\nmax_zoom = " << p.zoom.hi << '\n'
           << "min_x_offset = " << p.x_offset.lo << "\nmax_x_offset = " << p.x_offset.hi << '\n'
           << "min_y_offset = " << p.y_offset.lo << "\nmax_y_offset = " << p.y_offset.hi << '\n'
           << "min_x_angle = " << p.x_angle.lo << "\nmax_x_angle = " << p.x_angle.hi << '\n'
           << "min_y_angle = " << p.y_angle.lo << "\nmax_y_angle = " << p.y_angle.hi << '\n'
           << "static_background = " << onoff(p.static_background) << '\n'
           << "dynamic_background = " << onoff(p.dynamic_background) << '\n';
    }
    return os.str();
}

inline std::vector<DifficultyProfile> parse_profiles(std::istream& in) {
    std::vector<DifficultyProfile> out;
    std::map<std::string, std::string> kv;
    std::string section;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    auto flush = [&] {
        if (section.empty()) return;
        auto num = [&](const char* key) {
            auto it = kv.find(key);
            if (it == kv.end()) throw InvalidArgument("profile [" + section + "] missing " + key);
            try {
                return std::stod(it->second);
            } catch (const std::logic_error&) {
                throw InvalidArgument("profile [" + section + "]: bad number for " + key);
            }
        };
        auto flag = [&](const char* key) {
            auto it = kv.find(key);
            if (it == kv.end()) throw InvalidArgument("profile [" + section + "] missing " + key);
            if (it->second == "on") return true;
            if (it->second == "off") return false;
            throw InvalidArgument("profile [" + section + "]: " + key + " must be on|off");
        };
        DifficultyProfile p;
        p.name = section;
        p.zoom = {num("min_zoom"), num("max_zoom")};
        p.x_offset = {num("min_x_offset"), num("max_x_offset")};
        p.y_offset = {num("min_y_offset"), num("max_y_offset")};
        p.x_angle = {num("min_x_angle"), num("max_x_angle")};
        p.y_angle = {num("min_y_angle"), num("max_y_angle")};
        p.static_background = flag("static_background");
        p.dynamic_background = flag("dynamic_background");
        for (auto iv : {p.zoom, p.x_offset, p.y_offset, p.x_angle, p.y_angle})
            if (iv.lo > iv.hi) throw InvalidArgument("profile [" + section + "]: min > max");
        out.push_back(p);
        kv.clear();
    };
    std::string line;
    while (std::getline(in, line)) {
        line = trim(line.substr(0, line.find('#')));
        if (line.empty()) continue;
        if (line.front() == '[') {
            flush();
            section = trim(line.substr(1, line.find(']') - 1));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos || section.empty())
            throw InvalidArgument("malformed profile line: " + line);
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    flush();
    return out;
}

inline std::vector<DifficultyProfile> load_profiles(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open profile file: " + path.string());
    return parse_profiles(in);
}

}  // namespace synthaction::scene
