#pragma once

#include <optional>

#include "pad/numcore/adam.hpp"
#include "pad/padloop/train.hpp"

namespace pad::padloop {

enum class DeployMode { Frozen, Pad, PadFixedHead, OfflinePad, Blind };

DeployMode parse_deploy_mode(const std::string& name);
std::string deploy_mode_name(DeployMode mode);

struct DeployConfig {
    DeployMode mode = DeployMode::Pad;
    ssl::SslTask ssl_task = ssl::SslTask::Idm;
    int test_batch_size = 32;
    float test_lr = 1e-3f;
    int steps_per_update = 1;  // paper-fixed; anything else is rejected
    int episodes = 1;
    int horizon_multiplier = 1;
    uint64_t seed = 0;
    // Deployment starts from fresh Adam state by default; the training-time
    // SSL optimizer state can be carried instead (in-process only).
    bool carry_adam = false;
};

struct StepRecord {
    float reward = 0.0f;
    float ssl_loss = 0.0f;
    bool updated = false;
    float drift_theta_e = 0.0f;  // ||theta_e(t) - theta_e(0)||_2
};

struct EpisodeTrace {
    std::vector<StepRecord> steps;
    double episodic_return = 0.0;
    bool success = false;
    int wall_steps = 0;
};

struct DeployResult {
    std::vector<EpisodeTrace> episodes;
    // Parameters at the end of the last episode (each episode starts from a
    // fresh copy of the input).
    policynet::PolicyParams final_params;
};

// Per-(episode, step) rng stream for deployment batches; exposed so a single
// update can be replayed outside the loop bit-exactly.
Rng deploy_update_rng(uint64_t seed, int episode, int step);

// Parameter subset adapted at deployment for a mode (theta_e + theta_s, or
// theta_e only for the fixed-head variant).
std::vector<numcore::TensorPtr> adapted_params(const policynet::PolicyParams& params,
                                               DeployMode mode);

// Exactly one gradient step on the self-supervised loss; returns the loss
// value. Used by deploy() and by the update-replay checks.
float ssl_adapt_step(policynet::PolicyParams& params, const ssl::SslBatch& batch,
                     numcore::AdamOptimizer& opt);

// Reward-free online adaptation (or frozen/blind evaluation) in a shifted
// environment. Actions are deterministic (mean mode, center-cropped inputs).
// theta_a is never mutated, in any mode.
DeployResult deploy(const policynet::PolicyParams& params, envs::EnvKind kind,
                    const envs::ShiftSpec& shift, const envs::EnvConfig& env_cfg,
                    const DeployConfig& cfg,
                    const numcore::AdamOptimizer* carried_state = nullptr);

// Appendix-D style baseline: collects episode_budget episodes in the target
// environment with frozen parameters, then fine-tunes theta_e and theta_a on
// the collected data with the training procedure. Rewards are required.
policynet::PolicyParams finetune_with_rewards(const policynet::PolicyParams& params,
                                              envs::EnvKind kind, const envs::ShiftSpec& shift,
                                              const envs::EnvConfig& env_cfg, int episode_budget,
                                              const TrainConfig& train_cfg, uint64_t seed);

}  // namespace pad::padloop
