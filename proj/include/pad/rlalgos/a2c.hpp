#pragma once

#include "pad/envs/env.hpp"
#include "pad/numcore/adam.hpp"
#include "pad/policynet/policy.hpp"
#include "pad/rng.hpp"

namespace pad::rlalgos {

struct A2cConfig {
    float discount = 0.99f;
    int actor_count = 10;
    int rollout_length = 5;
    float value_coeff = 0.5f;
    float entropy_coeff = 0.01f;
    float learning_rate = 3e-4f;
};

struct RolloutStep {
    envs::Observation obs;  // full-size observation at time t
    int action = 0;
    float reward = 0.0f;
};

struct Rollout {
    std::vector<RolloutStep> steps;
    envs::Observation bootstrap_obs;  // observation after the last step
    bool bootstrap_done = false;      // true when the episode ended there
};

struct A2cLossRecord {
    float pg_loss = 0.0f;     // -mean(log pi(a) * advantage)
    float value_loss = 0.0f;  // mse(value, return)
    float entropy = 0.0f;
    float total_loss = 0.0f;
};

// n-step discounted returns: returns[i] = sum_j gamma^j r_{i+j} +
// gamma^{T-i} * bootstrap_value.
std::vector<float> discounted_returns(const std::vector<float>& rewards, float bootstrap_value,
                                      float discount);

// Advantage actor-critic over the split policy network: policy gradient with
// advantage = return - value, entropy bonus, value regression. Gradients
// reach theta_e and theta_a only.
class A2cLearner {
public:
    A2cLearner(policynet::PolicyParams& params, A2cConfig config);

    A2cLossRecord update(const std::vector<Rollout>& rollouts, Rng& rng);

    // Loss construction on prepared tensors (shared with the FD tests).
    // With empty `advantages`, they are derived as returns - value from the
    // same forward pass (detached).
    numcore::TensorPtr loss_from_tensors(const numcore::TensorPtr& obs_batch,
                                         const std::vector<int>& actions,
                                         const std::vector<float>& advantages,
                                         const std::vector<float>& returns,
                                         A2cLossRecord* record) const;

private:
    policynet::PolicyParams& params_;
    A2cConfig cfg_;
    numcore::AdamOptimizer opt_;
};

}  // namespace pad::rlalgos
