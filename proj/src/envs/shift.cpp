#include "pad/envs/shift.hpp"

#include <charconv>
#include <cstdlib>
#include <map>
#include <vector>

#include "pad/errors.hpp"

namespace pad::envs {

namespace {

std::string format_float(float v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc()) throw UsageError("float formatting failed");
    return std::string(buf, ptr);
}

float parse_float(const std::string& s) {
    char* end = nullptr;
    const float v = std::strtof(s.c_str(), &end);
    if (end != s.c_str() + s.size() || s.empty()) {
        throw ConfigError("shift spec: bad float value '" + s + "'");
    }
    return v;
}

int parse_int(const std::string& s) {
    int v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) {
        throw ConfigError("shift spec: bad integer value '" + s + "'");
    }
    return v;
}

const char* mode_name(ShiftMode m) {
    switch (m) {
        case ShiftMode::None: return "none";
        case ShiftMode::Colors: return "colors";
        case ShiftMode::VideoBg: return "video_bg";
        case ShiftMode::Distractors: return "distractors";
        case ShiftMode::Texture: return "texture";
        case ShiftMode::Lighting: return "lighting";
        case ShiftMode::Dynamics: return "dynamics";
    }
    return "none";
}

}  // namespace

std::string env_kind_name(EnvKind kind) {
    return kind == EnvKind::PointReach ? "pointreach" : "gridmaze";
}

EnvKind parse_env_kind(const std::string& name) {
    if (name == "pointreach") return EnvKind::PointReach;
    if (name == "gridmaze") return EnvKind::GridMaze;
    throw ConfigError("unknown environment kind '" + name + "'");
}

ShiftSpec ShiftSpec::none() { return ShiftSpec{}; }

ShiftSpec ShiftSpec::colors(int index, PaletteTable table) {
    ShiftSpec s;
    s.mode = ShiftMode::Colors;
    s.color_set_index = index;
    s.palette = table;
    return s;
}

ShiftSpec ShiftSpec::video_bg(int seed, float rate) {
    ShiftSpec s;
    s.mode = ShiftMode::VideoBg;
    s.animation_seed = seed;
    s.phase_rate = rate;
    return s;
}

ShiftSpec ShiftSpec::distractors(int count, int seed) {
    ShiftSpec s;
    s.mode = ShiftMode::Distractors;
    s.distractor_count = count;
    s.distractor_seed = seed;
    return s;
}

ShiftSpec ShiftSpec::texture(int wall_id, int floor_id) {
    ShiftSpec s;
    s.mode = ShiftMode::Texture;
    s.wall_texture_id = wall_id;
    s.floor_texture_id = floor_id;
    return s;
}

ShiftSpec ShiftSpec::lighting(float brightness) {
    ShiftSpec s;
    s.mode = ShiftMode::Lighting;
    s.brightness = brightness;
    return s;
}

ShiftSpec ShiftSpec::dynamics(float gain, float friction, float mount) {
    ShiftSpec s;
    s.mode = ShiftMode::Dynamics;
    s.gain_factor = gain;
    s.friction_factor = friction;
    s.mount_offset = mount;
    return s;
}

std::string ShiftSpec::serialize() const {
    // Keys in alphabetical order so the form is canonical.
    switch (mode) {
        case ShiftMode::None:
            return "none";
        case ShiftMode::Colors:
            return std::string("colors:color_set_index=") + std::to_string(color_set_index) +
                   ",palette=" + (palette == PaletteTable::Train ? "train" : "test");
        case ShiftMode::VideoBg:
            return "video_bg:animation_seed=" + std::to_string(animation_seed) +
                   ",phase_rate=" + format_float(phase_rate);
        case ShiftMode::Distractors:
            return "distractors:distractor_count=" + std::to_string(distractor_count) +
                   ",distractor_seed=" + std::to_string(distractor_seed);
        case ShiftMode::Texture:
            return "texture:floor_texture_id=" + std::to_string(floor_texture_id) +
                   ",wall_texture_id=" + std::to_string(wall_texture_id);
        case ShiftMode::Lighting:
            return "lighting:brightness=" + format_float(brightness);
        case ShiftMode::Dynamics:
            return "dynamics:friction_factor=" + format_float(friction_factor) +
                   ",gain_factor=" + format_float(gain_factor) +
                   ",mount_offset=" + format_float(mount_offset);
    }
    throw ConfigError("shift spec: unknown mode");
}

ShiftSpec ShiftSpec::parse(const std::string& text) {
    const size_t colon = text.find(':');
    const std::string head = text.substr(0, colon);
    std::map<std::string, std::string> kv;
    if (colon != std::string::npos) {
        std::string rest = text.substr(colon + 1);
        size_t pos = 0;
        while (pos < rest.size()) {
            size_t comma = rest.find(',', pos);
            if (comma == std::string::npos) comma = rest.size();
            const std::string item = rest.substr(pos, comma - pos);
            const size_t eq = item.find('=');
            if (eq == std::string::npos) throw ConfigError("shift spec: expected key=value in '" + item + "'");
            kv[item.substr(0, eq)] = item.substr(eq + 1);
            pos = comma + 1;
        }
    }

    auto take = [&kv](const char* key) {
        auto it = kv.find(key);
        if (it == kv.end()) return std::string();
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto finish = [&kv, &text](ShiftSpec s) {
        if (!kv.empty()) {
            throw ConfigError("shift spec: unknown key '" + kv.begin()->first + "' in '" + text + "'");
        }
        return s;
    };

    if (head == "none") return finish(ShiftSpec::none());
    if (head == "colors") {
        ShiftSpec s = ShiftSpec::colors(0);
        if (auto v = take("color_set_index"); !v.empty()) s.color_set_index = parse_int(v);
        if (auto v = take("palette"); !v.empty()) {
            if (v == "train") s.palette = PaletteTable::Train;
            else if (v == "test") s.palette = PaletteTable::Test;
            else throw ConfigError("shift spec: palette must be train or test");
        }
        if (s.color_set_index < 0 || s.color_set_index > 99) {
            throw ConfigError("shift spec: color_set_index must lie in 0..99");
        }
        return finish(s);
    }
    if (head == "video_bg") {
        ShiftSpec s = ShiftSpec::video_bg(0);
        if (auto v = take("animation_seed"); !v.empty()) s.animation_seed = parse_int(v);
        if (auto v = take("phase_rate"); !v.empty()) s.phase_rate = parse_float(v);
        return finish(s);
    }
    if (head == "distractors") {
        ShiftSpec s = ShiftSpec::distractors(3, 0);
        if (auto v = take("distractor_count"); !v.empty()) s.distractor_count = parse_int(v);
        if (auto v = take("distractor_seed"); !v.empty()) s.distractor_seed = parse_int(v);
        if (s.distractor_count < 0) throw ConfigError("shift spec: distractor_count must be >= 0");
        return finish(s);
    }
    if (head == "texture") {
        ShiftSpec s = ShiftSpec::texture(0, 0);
        if (auto v = take("wall_texture_id"); !v.empty()) s.wall_texture_id = parse_int(v);
        if (auto v = take("floor_texture_id"); !v.empty()) s.floor_texture_id = parse_int(v);
        return finish(s);
    }
    if (head == "lighting") {
        ShiftSpec s = ShiftSpec::lighting(1.0f);
        if (auto v = take("brightness"); !v.empty()) s.brightness = parse_float(v);
        if (!(s.brightness > 0.0f && s.brightness <= 1.0f)) {
            throw ConfigError("shift spec: brightness must lie in (0,1]");
        }
        return finish(s);
    }
    if (head == "dynamics") {
        ShiftSpec s = ShiftSpec::dynamics(1.0f, 1.0f, 0.0f);
        if (auto v = take("gain_factor"); !v.empty()) s.gain_factor = parse_float(v);
        if (auto v = take("friction_factor"); !v.empty()) s.friction_factor = parse_float(v);
        if (auto v = take("mount_offset"); !v.empty()) s.mount_offset = parse_float(v);
        return finish(s);
    }
    throw ConfigError("shift spec: unknown mode '" + head + "'");
}

bool ShiftSpec::operator==(const ShiftSpec& other) const {
    if (mode != other.mode) return false;
    switch (mode) {
        case ShiftMode::None:
            return true;
        case ShiftMode::Colors:
            return color_set_index == other.color_set_index && palette == other.palette;
        case ShiftMode::VideoBg:
            return animation_seed == other.animation_seed && phase_rate == other.phase_rate;
        case ShiftMode::Distractors:
            return distractor_count == other.distractor_count &&
                   distractor_seed == other.distractor_seed;
        case ShiftMode::Texture:
            return wall_texture_id == other.wall_texture_id &&
                   floor_texture_id == other.floor_texture_id;
        case ShiftMode::Lighting:
            return brightness == other.brightness;
        case ShiftMode::Dynamics:
            return gain_factor == other.gain_factor && friction_factor == other.friction_factor &&
                   mount_offset == other.mount_offset;
    }
    return false;
}

}  // namespace pad::envs
