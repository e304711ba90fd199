#pragma once

#include <array>
#include <ostream>

#include "pad/envs/shift.hpp"

namespace pad::envs {

using Rgb = std::array<float, 3>;

// Background / agent / goal colors for one PointReach rendering variant.
struct ColorEntry {
    Rgb background;
    Rgb agent;
    Rgb goal;
};

// Palette used by the unshifted training environment. Entry 0 of the train
// table equals it, so `none` renders identically to
// `colors:color_set_index=0,palette=train`.
const ColorEntry& base_palette();

// 100-entry tables generated once from fixed master seeds (train != test).
// The train table's per-channel variance is `variance_fraction` of the test
// table's, exactly, via rescaling of deviations about the base palette.
const std::array<ColorEntry, 100>& color_table(PaletteTable table, float variance_fraction = 0.5f);

// Population variance of one of the 9 channels (0..2 background, 3..5 agent,
// 6..8 goal) across a table's 100 entries.
double table_channel_variance(PaletteTable table, int channel, float variance_fraction = 0.5f);

// Plain-text form: one RGB triplet per line, three lines per entry
// (background, agent, goal).
void write_color_table(PaletteTable table, std::ostream& os, float variance_fraction = 0.5f);

}  // namespace pad::envs
