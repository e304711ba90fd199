#pragma once

#include "pad/envs/env.hpp"
#include "pad/policynet/policy.hpp"
#include "pad/rlalgos/a2c.hpp"
#include "pad/rlalgos/sac.hpp"
#include "pad/ssl/objectives.hpp"

namespace pad::padloop {

enum class Algo { Sac, A2c };

struct TrainConfig {
    Algo algo = Algo::Sac;

    // Joint objective J + alpha * L. ssl_enabled=false (or alpha=0) is the
    // plain base algorithm; theta_s stays at initialization.
    bool ssl_enabled = true;
    ssl::SslTask ssl_task = ssl::SslTask::Idm;
    float ssl_coefficient = 1.0f;  // alpha (0.5 canonical for A2C)
    int ssl_update_interval = 2;   // 2 for SAC, 1 for A2C
    int ssl_batch_size = 32;
    float ssl_lr = 1e-3f;

    int total_steps = 6000;
    int init_steps = 400;  // uniform-random warmup before updates (SAC)
    int rl_update_interval = 1;

    int eval_interval = 2000;
    int eval_episodes = 3;
    int heldout_size = 128;

    int replay_capacity = 20000;
    uint64_t seed = 1;

    // Episode resets draw a fresh training-table ShiftSpec; the navigation
    // episode budget doubles.
    bool domain_randomization = false;
    // Effective randomization-table size (index taken modulo this); 1 makes
    // DR degenerate to the plain training palette.
    int dr_table_size = 100;

    rlalgos::SacConfig sac;
    rlalgos::A2cConfig a2c;
};

struct CurvePoint {
    int step = 0;
    float eval_return = 0.0f;
    float ssl_heldout_loss = 0.0f;
    float ssl_heldout_accuracy = -1.0f;  // rotation / discrete IDM only
};

struct TrainResult {
    policynet::PolicyParams params;
    std::vector<CurvePoint> curve;
    float initial_heldout_ssl = 0.0f;
    float final_heldout_ssl = 0.0f;
    float final_heldout_accuracy = -1.0f;
    int episodes_completed = 0;
    int steps_completed = 0;
};

// Joint training before deployment: base RL updates plus one SSL gradient
// step on (theta_e, theta_s) every ssl_update_interval environment steps.
// Deterministic given cfg.seed.
TrainResult train_joint(envs::EnvKind kind, const envs::EnvConfig& env_cfg,
                        const policynet::NetworkConfig& net_cfg, const TrainConfig& cfg);

// Domain-randomization baseline: the base-RL path of train_joint with every
// episode reset drawing a fresh training ShiftSpec.
TrainResult train_domain_randomization(envs::EnvKind kind, const envs::EnvConfig& env_cfg,
                                       const policynet::NetworkConfig& net_cfg, TrainConfig cfg);

// Frozen-policy SSL metrics on a held-out batch (fixed crops and labels):
// IDM loss (+ accuracy when discrete) or rotation loss + accuracy.
struct HeldoutSsl {
    float loss = 0.0f;
    float accuracy = -1.0f;
};
HeldoutSsl heldout_ssl_metrics(const policynet::PolicyParams& params, envs::EnvKind kind,
                               const envs::EnvConfig& env_cfg, ssl::SslTask task, int size,
                               uint64_t seed);

}  // namespace pad::padloop
