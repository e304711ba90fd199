#include "pad/envs/palettes.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "pad/rng.hpp"

namespace pad::envs {

namespace {

constexpr uint64_t kTrainMasterSeed = 0x7261696E5F706164ULL;
constexpr uint64_t kTestMasterSeed = 0x746573745F706164ULL;
constexpr float kTestAmplitude = 0.25f;

const ColorEntry kBase{{0.35f, 0.35f, 0.42f}, {0.66f, 0.30f, 0.30f}, {0.30f, 0.62f, 0.34f}};

float base_channel(int ch) {
    if (ch < 3) return kBase.background[static_cast<size_t>(ch)];
    if (ch < 6) return kBase.agent[static_cast<size_t>(ch - 3)];
    return kBase.goal[static_cast<size_t>(ch - 6)];
}

void set_channel(ColorEntry& e, int ch, float v) {
    if (ch < 3) e.background[static_cast<size_t>(ch)] = v;
    else if (ch < 6) e.agent[static_cast<size_t>(ch - 3)] = v;
    else e.goal[static_cast<size_t>(ch - 6)] = v;
}

float get_channel(const ColorEntry& e, int ch) {
    if (ch < 3) return e.background[static_cast<size_t>(ch)];
    if (ch < 6) return e.agent[static_cast<size_t>(ch - 3)];
    return e.goal[static_cast<size_t>(ch - 6)];
}

double channel_variance(const std::array<ColorEntry, 100>& table, int ch) {
    double mean = 0.0;
    for (const auto& e : table) mean += get_channel(e, ch);
    mean /= 100.0;
    double var = 0.0;
    for (const auto& e : table) {
        const double d = get_channel(e, ch) - mean;
        var += d * d;
    }
    return var / 100.0;
}

std::array<ColorEntry, 100> raw_table(uint64_t seed, float amplitude) {
    std::array<ColorEntry, 100> table;
    Rng rng(seed);
    for (auto& entry : table) {
        for (int ch = 0; ch < 9; ++ch) {
            set_channel(entry, ch, base_channel(ch) + rng.uniform(-amplitude, amplitude));
        }
    }
    return table;
}

struct Tables {
    std::array<ColorEntry, 100> train;
    std::array<ColorEntry, 100> test;
};

Tables build_tables(float variance_fraction) {
    Tables t;
    t.test = raw_table(kTestMasterSeed, kTestAmplitude);
    t.train = raw_table(kTrainMasterSeed, kTestAmplitude * std::sqrt(variance_fraction));
    // Entry 0 of the train table is the unshifted training palette.
    t.train[0] = kBase;
    // Rescale train deviations about the base so each channel's variance is
    // exactly the requested fraction of the test table's.
    for (int ch = 0; ch < 9; ++ch) {
        const double target = variance_fraction * channel_variance(t.test, ch);
        const double base = base_channel(ch);
        double raw = 0.0;
        {
            // Variance is shift-invariant, so measure it directly.
            double mean = 0.0;
            for (const auto& e : t.train) mean += get_channel(e, ch);
            mean /= 100.0;
            for (const auto& e : t.train) {
                const double d = get_channel(e, ch) - mean;
                raw += d * d;
            }
            raw /= 100.0;
        }
        const double s = raw > 0.0 ? std::sqrt(target / raw) : 1.0;
        for (auto& e : t.train) {
            set_channel(e, ch, static_cast<float>(base + s * (get_channel(e, ch) - base)));
        }
    }
    return t;
}

std::mutex g_mutex;
std::map<float, Tables> g_cache;

const Tables& tables_for(float variance_fraction) {
    std::lock_guard<std::mutex> lock(g_mutex);
    auto it = g_cache.find(variance_fraction);
    if (it == g_cache.end()) it = g_cache.emplace(variance_fraction, build_tables(variance_fraction)).first;
    return it->second;
}

}  // namespace

const ColorEntry& base_palette() { return kBase; }

const std::array<ColorEntry, 100>& color_table(PaletteTable table, float variance_fraction) {
    const Tables& t = tables_for(variance_fraction);
    return table == PaletteTable::Train ? t.train : t.test;
}

double table_channel_variance(PaletteTable table, int channel, float variance_fraction) {
    return channel_variance(color_table(table, variance_fraction), channel);
}

void write_color_table(PaletteTable table, std::ostream& os, float variance_fraction) {
    const auto& t = color_table(table, variance_fraction);
    os.precision(9);
    for (const auto& e : t) {
        os << e.background[0] << ' ' << e.background[1] << ' ' << e.background[2] << '\n';
        os << e.agent[0] << ' ' << e.agent[1] << ' ' << e.agent[2] << '\n';
        os << e.goal[0] << ' ' << e.goal[1] << ' ' << e.goal[2] << '\n';
    }
}

}  // namespace pad::envs
