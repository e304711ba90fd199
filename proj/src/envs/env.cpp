#include "pad/envs/env.hpp"

#include <algorithm>
#include <cmath>

#include "pad/errors.hpp"

namespace pad::envs {

namespace {

// Asymmetric under all quarter-turn rotations; every free cell reachable.
constexpr const char* kMazeRows[kMazeSize] = {
    "WWWWWWW",
    "W...W.W",
    "W.W...W",
    "W...W.W",
    "WW....W",
    "W..W..W",
    "WWWWWWW",
};

constexpr Rgb kPelletColor{0.10f, 0.85f, 0.20f};
constexpr Rgb kLanternColor{0.95f, 0.55f, 0.10f};
constexpr Rgb kMazeAgentColor{0.20f, 0.40f, 0.95f};

float hash01(uint64_t a, uint64_t b, uint64_t c = 0) {
    const uint64_t z = Rng::derive(Rng::derive(a, b), c);
    return static_cast<float>(static_cast<double>(z >> 11) * (1.0 / 9007199254740992.0));
}

void draw_disc(Frame& f, int size, float cx, float cy, float radius, const Rgb& color) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - radius)));
    const int x1 = std::min(size - 1, static_cast<int>(std::ceil(cx + radius)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - radius)));
    const int y1 = std::min(size - 1, static_cast<int>(std::ceil(cy + radius)));
    const float r2 = radius * radius;
    const int plane = size * size;
    for (int py = y0; py <= y1; ++py) {
        for (int px = x0; px <= x1; ++px) {
            const float dx = static_cast<float>(px) + 0.5f - cx;
            const float dy = static_cast<float>(py) + 0.5f - cy;
            if (dx * dx + dy * dy > r2) continue;
            for (int ch = 0; ch < 3; ++ch) {
                f[static_cast<size_t>(ch * plane + py * size + px)] = color[static_cast<size_t>(ch)];
            }
        }
    }
}

void draw_square(Frame& f, int size, float cx, float cy, float half, const Rgb& color) {
    const int x0 = std::max(0, static_cast<int>(std::floor(cx - half)));
    const int x1 = std::min(size - 1, static_cast<int>(std::ceil(cx + half)));
    const int y0 = std::max(0, static_cast<int>(std::floor(cy - half)));
    const int y1 = std::min(size - 1, static_cast<int>(std::ceil(cy + half)));
    const int plane = size * size;
    for (int py = y0; py <= y1; ++py) {
        for (int px = x0; px <= x1; ++px) {
            if (std::fabs(static_cast<float>(px) + 0.5f - cx) > half ||
                std::fabs(static_cast<float>(py) + 0.5f - cy) > half) {
                continue;
            }
            for (int ch = 0; ch < 3; ++ch) {
                f[static_cast<size_t>(ch * plane + py * size + px)] = color[static_cast<size_t>(ch)];
            }
        }
    }
}

}  // namespace

bool maze_is_wall(int row, int col) {
    if (row < 0 || row >= kMazeSize || col < 0 || col >= kMazeSize) return true;
    return kMazeRows[row][col] == 'W';
}

void Observation::write(float* dst) const {
    const int per_frame = 3 * size * size;
    for (int k = 0; k < frame_stack(); ++k) {
        const Frame& f = *frames[static_cast<size_t>(k)];
        std::copy(f.begin(), f.end(), dst + static_cast<size_t>(k) * per_frame);
    }
}

Env Env::make(EnvKind kind, const ShiftSpec& shift, const EnvConfig& config, uint64_t seed) {
    if (config.render_size < 16) throw ConfigError("env: render_size too small");
    if (config.frame_stack < 1) throw ConfigError("env: frame_stack must be >= 1");
    if (config.horizon < 1) throw ConfigError("env: horizon must be >= 1");
    if (config.action_repeat < 1) throw ConfigError("env: action_repeat must be >= 1");
    Env env;
    env.kind_ = kind;
    env.shift_ = shift;
    env.config_ = config;
    env.seed_ = seed;
    env.validate_shift();
    env.reset(seed);
    return env;
}

void Env::validate_shift() const {
    const ShiftMode m = shift_.mode;
    if (kind_ == EnvKind::PointReach) {
        if (m == ShiftMode::Texture || m == ShiftMode::Lighting) {
            throw ConfigError("shift mode incompatible with pointreach");
        }
    } else {
        if (m == ShiftMode::Colors || m == ShiftMode::VideoBg || m == ShiftMode::Distractors ||
            m == ShiftMode::Dynamics) {
            throw ConfigError("shift mode incompatible with gridmaze");
        }
    }
}

void Env::reset(uint64_t episode_seed) {
    Rng rng(Rng::derive(episode_seed, 0xE5E7));
    step_index_ = 0;
    if (kind_ == EnvKind::PointReach) {
        for (int attempt = 0; attempt < 1000; ++attempt) {
            agent_[0] = rng.uniform(0.3f, 0.7f);
            agent_[1] = rng.uniform(0.3f, 0.7f);
            const float theta = rng.uniform(0.0f, 6.2831853f);
            goal_[0] = agent_[0] + config_.init_distance * std::cos(theta);
            goal_[1] = agent_[1] + config_.init_distance * std::sin(theta);
            const float dx = goal_[0] - agent_[0], dy = goal_[1] - agent_[1];
            // Keep the goal disc on-screen.
            const bool in_bounds = goal_[0] >= 0.07f && goal_[0] <= 0.93f && goal_[1] >= 0.07f &&
                                   goal_[1] <= 0.93f;
            if (in_bounds && std::sqrt(dx * dx + dy * dy) >= 0.2f) break;
        }
    } else {
        std::vector<std::pair<int, int>> free_cells;
        for (int r = 0; r < kMazeSize; ++r) {
            for (int c = 0; c < kMazeSize; ++c) {
                if (!maze_is_wall(r, c)) free_cells.emplace_back(r, c);
            }
        }
        // Fisher-Yates, then assign agent / pellets / lanterns from the front.
        for (int i = static_cast<int>(free_cells.size()) - 1; i > 0; --i) {
            std::swap(free_cells[static_cast<size_t>(i)],
                      free_cells[static_cast<size_t>(rng.uniform_int(0, i))]);
        }
        const int need = 1 + config_.pellets + config_.lanterns;
        if (need > static_cast<int>(free_cells.size())) {
            throw ConfigError("gridmaze: too many objects for free cells");
        }
        agent_row_ = free_cells[0].first;
        agent_col_ = free_cells[0].second;
        pellet_cells_.assign(free_cells.begin() + 1, free_cells.begin() + 1 + config_.pellets);
        pellet_taken_.assign(static_cast<size_t>(config_.pellets), false);
        lantern_cells_.assign(free_cells.begin() + 1 + config_.pellets,
                              free_cells.begin() + need);
    }
    // Initial stack: the first frame repeated k times.
    obs_.size = config_.render_size;
    obs_.frames.clear();
    auto first = std::make_shared<Frame>(render());
    for (int k = 0; k < config_.frame_stack; ++k) obs_.frames.push_back(first);
}

void Env::push_frame() {
    obs_.frames.erase(obs_.frames.begin());
    obs_.frames.push_back(std::make_shared<Frame>(render()));
}

float Env::apply_pointreach_action(const Action& a) {
    if (a.continuous.size() != 2) throw UsageError("pointreach: action must have 2 components");
    for (float v : a.continuous) {
        if (!(v >= -1.0001f && v <= 1.0001f)) throw UsageError("pointreach: action outside [-1,1]");
    }
    float gain_factor = 1.0f, friction_factor = 1.0f, mount = 0.0f;
    if (shift_.mode == ShiftMode::Dynamics) {
        gain_factor = shift_.gain_factor;
        friction_factor = shift_.friction_factor;
        mount = shift_.mount_offset;
    }
    const float k = config_.gain * gain_factor * config_.friction * friction_factor;
    for (int i = 0; i < 2; ++i) {
        const float ai = std::clamp(a.continuous[static_cast<size_t>(i)], -1.0f, 1.0f) + mount;
        agent_[static_cast<size_t>(i)] = std::clamp(agent_[static_cast<size_t>(i)] + k * ai, 0.0f, 1.0f);
    }
    const float dx = agent_[0] - goal_[0], dy = agent_[1] - goal_[1];
    return -std::sqrt(dx * dx + dy * dy);
}

float Env::apply_gridmaze_action(const Action& a) {
    if (a.discrete < 0 || a.discrete > 3) throw UsageError("gridmaze: action must lie in 0..3");
    static constexpr int dr[4] = {-1, 1, 0, 0};
    static constexpr int dc[4] = {0, 0, -1, 1};
    const int nr = agent_row_ + dr[a.discrete];
    const int nc = agent_col_ + dc[a.discrete];
    float reward = -0.01f;  // living cost
    if (!maze_is_wall(nr, nc)) {
        agent_row_ = nr;
        agent_col_ = nc;
        for (size_t i = 0; i < pellet_cells_.size(); ++i) {
            if (!pellet_taken_[i] && pellet_cells_[i] == std::make_pair(nr, nc)) {
                pellet_taken_[i] = true;
                reward += 1.0f;
            }
        }
        for (const auto& cell : lantern_cells_) {
            if (cell == std::make_pair(nr, nc)) reward -= 1.0f;
        }
    }
    return reward;
}

StepResult Env::step(const Action& action) {
    if (done()) throw UsageError("env: step after episode end");
    float reward = 0.0f;
    for (int rep = 0; rep < config_.action_repeat; ++rep) {
        reward += kind_ == EnvKind::PointReach ? apply_pointreach_action(action)
                                               : apply_gridmaze_action(action);
    }
    ++step_index_;
    push_frame();
    return {obs_, reward, done()};
}

bool Env::success() const {
    if (kind_ == EnvKind::PointReach) {
        const float dx = agent_[0] - goal_[0], dy = agent_[1] - goal_[1];
        return std::sqrt(dx * dx + dy * dy) < 0.05f;
    }
    return std::all_of(pellet_taken_.begin(), pellet_taken_.end(), [](bool b) { return b; });
}

int Env::pellets_left() const {
    return static_cast<int>(std::count(pellet_taken_.begin(), pellet_taken_.end(), false));
}

void Env::set_pointreach_state(const std::array<float, 2>& agent, const std::array<float, 2>& goal) {
    if (kind_ != EnvKind::PointReach) throw UsageError("set_pointreach_state on gridmaze");
    agent_ = agent;
    goal_ = goal;
    obs_.frames.clear();
    auto first = std::make_shared<Frame>(render());
    for (int k = 0; k < config_.frame_stack; ++k) obs_.frames.push_back(first);
}

void Env::render_pointreach(Frame& f) const {
    const int S = config_.render_size;
    const int plane = S * S;
    const ColorEntry* palette = &base_palette();
    if (shift_.mode == ShiftMode::Colors) {
        palette = &color_table(shift_.palette)[static_cast<size_t>(shift_.color_set_index)];
    }

    if (shift_.mode == ShiftMode::VideoBg) {
        // Animated plaid: base + A*sin(wx*x + p1)*sin(wy*y + p2), phases
        // advancing every step.
        const uint64_t as = static_cast<uint64_t>(shift_.animation_seed);
        const float t = static_cast<float>(step_index_);
        for (int ch = 0; ch < 3; ++ch) {
            const float amp = 0.12f + 0.10f * hash01(as, 11, static_cast<uint64_t>(ch));
            const float wx = 4.0f + 5.0f * hash01(as, 13, static_cast<uint64_t>(ch));
            const float wy = 4.0f + 5.0f * hash01(as, 17, static_cast<uint64_t>(ch));
            const float p1 = 6.2831853f * hash01(as, 19, static_cast<uint64_t>(ch)) +
                             t * shift_.phase_rate;
            const float p2 = 6.2831853f * hash01(as, 23, static_cast<uint64_t>(ch)) +
                             t * shift_.phase_rate * 1.618f;
            const float base = palette->background[static_cast<size_t>(ch)];
            for (int py = 0; py < S; ++py) {
                const float y = (static_cast<float>(py) + 0.5f) / static_cast<float>(S);
                const float sy = std::sin(wy * y + p2);
                for (int px = 0; px < S; ++px) {
                    const float x = (static_cast<float>(px) + 0.5f) / static_cast<float>(S);
                    const float v = base + amp * std::sin(wx * x + p1) * sy;
                    f[static_cast<size_t>(ch * plane + py * S + px)] = std::clamp(v, 0.0f, 1.0f);
                }
            }
        }
    } else {
        for (int ch = 0; ch < 3; ++ch) {
            std::fill(f.begin() + static_cast<size_t>(ch) * plane,
                      f.begin() + static_cast<size_t>(ch + 1) * plane,
                      palette->background[static_cast<size_t>(ch)]);
        }
    }

    const float fs = static_cast<float>(S);
    draw_disc(f, S, goal_[0] * fs, goal_[1] * fs, 0.05f * fs, palette->goal);

    if (shift_.mode == ShiftMode::Distractors) {
        // Render-only sprites; fixed per spec (seed), no physical interaction.
        const uint64_t ds = static_cast<uint64_t>(shift_.distractor_seed);
        for (int i = 0; i < shift_.distractor_count; ++i) {
            const uint64_t di = static_cast<uint64_t>(i);
            const float cx = hash01(ds, 100 + di) * fs;
            const float cy = hash01(ds, 200 + di) * fs;
            const float radius = (0.03f + 0.05f * hash01(ds, 300 + di)) * fs;
            const Rgb color{0.1f + 0.8f * hash01(ds, 400 + di), 0.1f + 0.8f * hash01(ds, 500 + di),
                            0.1f + 0.8f * hash01(ds, 600 + di)};
            if (hash01(ds, 700 + di) < 0.5f) {
                draw_disc(f, S, cx, cy, radius, color);
            } else {
                draw_square(f, S, cx, cy, radius, color);
            }
        }
    }

    draw_disc(f, S, agent_[0] * fs, agent_[1] * fs, 0.06f * fs, palette->agent);
}

void Env::render_gridmaze(Frame& f) const {
    const int S = config_.render_size;
    const int plane = S * S;
    const int wall_id = shift_.mode == ShiftMode::Texture ? shift_.wall_texture_id : 0;
    const int floor_id = shift_.mode == ShiftMode::Texture ? shift_.floor_texture_id : 0;

    for (int py = 0; py < S; ++py) {
        const int row = py * kMazeSize / S;
        for (int px = 0; px < S; ++px) {
            const int col = px * kMazeSize / S;
            const bool wall = maze_is_wall(row, col);
            const uint64_t id = static_cast<uint64_t>(wall ? wall_id : floor_id) * 2 + (wall ? 1 : 0);
            for (int ch = 0; ch < 3; ++ch) {
                const float base = (wall ? 0.18f : 0.45f) + 0.30f * hash01(id, 7777, static_cast<uint64_t>(ch));
                const float noise =
                    hash01(id, static_cast<uint64_t>(py * S + px), static_cast<uint64_t>(ch));
                f[static_cast<size_t>(ch * plane + py * S + px)] =
                    std::clamp(base + 0.30f * (noise - 0.5f), 0.0f, 1.0f);
            }
        }
    }

    const float cell = static_cast<float>(S) / static_cast<float>(kMazeSize);
    auto center_x = [cell](int col) { return (static_cast<float>(col) + 0.5f) * cell; };
    auto center_y = [cell](int row) { return (static_cast<float>(row) + 0.5f) * cell; };
    for (size_t i = 0; i < pellet_cells_.size(); ++i) {
        if (pellet_taken_[i]) continue;
        draw_disc(f, S, center_x(pellet_cells_[i].second), center_y(pellet_cells_[i].first),
                  0.32f * cell, kPelletColor);
    }
    for (const auto& cellrc : lantern_cells_) {
        draw_square(f, S, center_x(cellrc.second), center_y(cellrc.first), 0.30f * cell,
                    kLanternColor);
    }
    draw_disc(f, S, center_x(agent_col_), center_y(agent_row_), 0.38f * cell, kMazeAgentColor);

    if (shift_.mode == ShiftMode::Lighting) {
        for (float& v : f) v = std::clamp(v * shift_.brightness, 0.0f, 1.0f);
    }
}

Frame Env::render() const {
    Frame f(static_cast<size_t>(3 * config_.render_size * config_.render_size));
    if (kind_ == EnvKind::PointReach) {
        render_pointreach(f);
    } else {
        render_gridmaze(f);
    }
    return f;
}

ShiftSpec sample_randomization(EnvKind kind, Rng& rng) {
    if (kind == EnvKind::PointReach) {
        return ShiftSpec::colors(rng.uniform_int(0, 99), PaletteTable::Train);
    }
    return ShiftSpec::texture(rng.uniform_int(0, 99), rng.uniform_int(0, 99));
}

}  // namespace pad::envs
