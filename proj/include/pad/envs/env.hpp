#pragma once

#include <memory>
#include <vector>

#include "pad/envs/palettes.hpp"
#include "pad/envs/shift.hpp"
#include "pad/rng.hpp"

namespace pad::envs {

// One rendered frame, 3*H*W scalars in [0,1], channel-major.
using Frame = std::vector<float>;
using FramePtr = std::shared_ptr<const Frame>;

// Stack of k frames, oldest first. Frames are shared so consecutive
// observations in a replay buffer do not duplicate pixels.
struct Observation {
    std::vector<FramePtr> frames;
    int size = 0;  // spatial side length

    int frame_stack() const { return static_cast<int>(frames.size()); }
    int numel() const { return frame_stack() * 3 * size * size; }
    // Writes [k*3, H, W] into dst.
    void write(float* dst) const;
};

struct Action {
    std::vector<float> continuous;  // PointReach: 2 components in [-1,1]
    int discrete = -1;              // GridMaze: 0..3

    static Action cont(float x, float y) { return Action{{x, y}, -1}; }
    static Action disc(int a) { return Action{{}, a}; }
};

struct StepResult {
    Observation obs;
    float reward = 0.0f;
    bool done = false;
};

struct Transition {
    Observation s_t;
    Action a_t;
    float r_t = 0.0f;
    Observation s_t1;
    bool done = false;
};

struct EnvConfig {
    int render_size = 48;
    int frame_stack = 3;
    int horizon = 100;  // PointReach canonical; use 200 for GridMaze
    int action_repeat = 1;

    // PointReach physics
    float gain = 0.05f;
    float friction = 1.0f;
    float init_distance = 0.6f;  // >= 0.2 enforced at reset

    // GridMaze contents
    int pellets = 3;
    int lanterns = 2;
};

// GridMaze is a fixed 7x7 layout (rotationally asymmetric, fully connected).
inline constexpr int kMazeSize = 7;
bool maze_is_wall(int row, int col);

// Deterministic, procedurally rendered environment with parametric shifts.
// Visual shift modes never alter rewards or dynamics; the dynamics mode never
// alters rendering.
class Env {
public:
    static Env make(EnvKind kind, const ShiftSpec& shift, const EnvConfig& config, uint64_t seed);

    StepResult step(const Action& action);
    Frame render() const;
    const Observation& observation() const { return obs_; }

    // Starts a fresh episode keyed by (seed, episode index).
    void reset(uint64_t episode_seed);

    EnvKind kind() const { return kind_; }
    const ShiftSpec& shift() const { return shift_; }
    const EnvConfig& config() const { return config_; }
    int horizon() const { return config_.horizon; }
    int step_index() const { return step_index_; }
    bool done() const { return step_index_ >= config_.horizon; }
    int action_dim() const { return kind_ == EnvKind::PointReach ? 2 : 4; }

    // Task success: PointReach final distance < 0.05; GridMaze all pellets.
    bool success() const;

    // PointReach internals exposed for analytic tests.
    const std::array<float, 2>& agent_pos() const { return agent_; }
    const std::array<float, 2>& goal_pos() const { return goal_; }
    // Overrides PointReach positions (analytic dynamics checks, bandit-style
    // fixtures); refreshes the frame stack as if this were the reset state.
    void set_pointreach_state(const std::array<float, 2>& agent, const std::array<float, 2>& goal);
    // GridMaze internals.
    std::pair<int, int> agent_cell() const { return {agent_row_, agent_col_}; }
    int pellets_left() const;

private:
    Env() = default;
    void validate_shift() const;
    void render_pointreach(Frame& f) const;
    void render_gridmaze(Frame& f) const;
    void push_frame();
    float apply_pointreach_action(const Action& a);
    float apply_gridmaze_action(const Action& a);

    EnvKind kind_ = EnvKind::PointReach;
    ShiftSpec shift_;
    EnvConfig config_;
    uint64_t seed_ = 0;
    int step_index_ = 0;

    // PointReach state
    std::array<float, 2> agent_{0.5f, 0.5f};
    std::array<float, 2> goal_{0.5f, 0.5f};

    // GridMaze state
    int agent_row_ = 1, agent_col_ = 1;
    std::vector<std::pair<int, int>> pellet_cells_;
    std::vector<bool> pellet_taken_;
    std::vector<std::pair<int, int>> lantern_cells_;

    Observation obs_;
};

// Training-distribution randomization: a colors-mode spec (PointReach) or a
// texture-mode spec (GridMaze) drawn from the 100-entry training tables.
ShiftSpec sample_randomization(EnvKind kind, Rng& rng);

}  // namespace pad::envs
