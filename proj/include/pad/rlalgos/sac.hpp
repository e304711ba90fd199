#pragma once

#include "pad/numcore/adam.hpp"
#include "pad/policynet/policy.hpp"
#include "pad/rlalgos/replay.hpp"

namespace pad::rlalgos {

struct SacConfig {
    float discount = 0.99f;
    float tau = 0.01f;
    int target_update_interval = 2;
    float actor_lr = 1e-3f;
    float critic_lr = 1e-3f;
    float alpha_lr = 1e-4f;
    int batch_size = 128;
    // 0 means the standard default -action_dim.
    float target_entropy = 0.0f;
};

struct SacLossRecord {
    bool skipped = false;
    float critic_loss = 0.0f;
    float actor_loss = 0.0f;
    float alpha_loss = 0.0f;
    float alpha = 0.0f;
};

// Twin-critic SAC with automatic entropy tuning over the split policy
// network. The encoder receives gradients from the critic loss only; actor
// updates run on detached features. theta_s is never touched.
class SacLearner {
public:
    SacLearner(policynet::PolicyParams& params, SacConfig config);

    // One critic + actor + temperature update from a replay sample; returns
    // a skipped record when the buffer has fewer than batch_size rows.
    SacLossRecord update(ReplayBuffer& buffer, Rng& rng);

    // Entropy-regularized backup values for a sampled batch (test hook).
    std::vector<float> compute_targets(const std::vector<const envs::Transition*>& batch,
                                       Rng& rng) const;

    void soft_update_targets(float tau);
    float temperature() const;
    int64_t update_count() const { return update_count_; }

private:
    policynet::PolicyParams& params_;
    SacConfig cfg_;
    numcore::AdamOptimizer critic_opt_;
    numcore::AdamOptimizer actor_opt_;
    numcore::AdamOptimizer alpha_opt_;
    int64_t update_count_ = 0;
};

}  // namespace pad::rlalgos
