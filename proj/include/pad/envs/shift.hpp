#pragma once

#include <string>

namespace pad::envs {

enum class EnvKind { PointReach, GridMaze };

enum class ShiftMode { None, Colors, VideoBg, Distractors, Texture, Lighting, Dynamics };

enum class PaletteTable { Train, Test };

std::string env_kind_name(EnvKind kind);
EnvKind parse_env_kind(const std::string& name);

// Declarative description of a test-environment perturbation. Only the
// fields of the active mode are meaningful; the textual form is
// `mode:key=val,key=val` with keys in alphabetical order.
struct ShiftSpec {
    ShiftMode mode = ShiftMode::None;

    // colors (PointReach)
    int color_set_index = 0;
    PaletteTable palette = PaletteTable::Test;

    // video_bg (PointReach)
    int animation_seed = 0;
    float phase_rate = 0.15f;

    // distractors (PointReach)
    int distractor_count = 3;
    int distractor_seed = 0;

    // texture (GridMaze)
    int wall_texture_id = 0;
    int floor_texture_id = 0;

    // lighting (GridMaze)
    float brightness = 1.0f;

    // dynamics (PointReach)
    float gain_factor = 1.0f;
    float friction_factor = 1.0f;
    float mount_offset = 0.0f;

    static ShiftSpec none();
    static ShiftSpec colors(int index, PaletteTable table = PaletteTable::Test);
    static ShiftSpec video_bg(int seed, float rate = 0.15f);
    static ShiftSpec distractors(int count, int seed);
    static ShiftSpec texture(int wall_id, int floor_id);
    static ShiftSpec lighting(float brightness);
    static ShiftSpec dynamics(float gain, float friction, float mount);

    std::string serialize() const;
    static ShiftSpec parse(const std::string& text);

    // Compares the mode and its active fields only.
    bool operator==(const ShiftSpec& other) const;
};

}  // namespace pad::envs
