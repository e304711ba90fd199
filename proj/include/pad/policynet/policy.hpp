#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pad/numcore/ops.hpp"
#include "pad/numcore/tensor.hpp"
#include "pad/policynet/config.hpp"
#include "pad/rng.hpp"

namespace pad::policynet {

using numcore::TensorPtr;

// Ordered collection of named tensors; order is the construction order and
// is part of the checkpoint contract.
struct ParamSet {
    std::vector<std::pair<std::string, TensorPtr>> items;

    void add(std::string name, TensorPtr t);
    const TensorPtr& find(const std::string& name) const;
    bool contains(const std::string& name) const;
    std::vector<TensorPtr> tensors() const;
    std::vector<TensorPtr> tensors_with_prefix(const std::string& prefix) const;
    std::vector<std::string> names() const;
    int64_t scalar_count() const;
};

// The split architecture: shared encoder (theta_e), RL heads including
// critics/targets/temperature (theta_a), self-supervised heads (theta_s).
// Both SSL heads (inverse dynamics and rotation) are always built; the
// training task selects which one receives gradients.
struct PolicyParams {
    NetworkConfig config;
    ParamSet theta_e;
    ParamSet theta_a;
    ParamSet theta_s;

    std::vector<TensorPtr> all_tensors() const;
    PolicyParams clone() const;  // deep copy, shares no tensors
};

PolicyParams build(const NetworkConfig& config, uint64_t seed);

// Feature extractor pi_e: obs batch [N, k*3, crop, crop] -> [N, F, s, s].
TensorPtr encode(const TensorPtr& obs, const PolicyParams& params);

struct ActionDistribution {
    // continuous: pre-squash Gaussian parameters, log-std soft-clamped
    TensorPtr mean;
    TensorPtr log_std;
    // discrete: soft-max logits
    TensorPtr logits;
};

struct ActorOut {
    ActionDistribution dist;
    TensorPtr value;  // discrete trunks also emit a state value (A2C critic)
};

ActorOut actor_forward(const TensorPtr& features, const PolicyParams& params);

// Twin critics / targets for continuous control; `which` selects the head
// ("q1", "q2", "t1", "t2").
TensorPtr critic_forward(const TensorPtr& features, const TensorPtr& action,
                         const PolicyParams& params, const std::string& which);

enum class ActMode { Sample, Mean };

// Concrete actions for environment interaction; no graph is built.
// Continuous actions are tanh-squashed into [-1,1]^dim; discrete actions are
// indices (mean = argmax). rng may be null for ActMode::Mean.
std::vector<std::vector<float>> act(const TensorPtr& features, const PolicyParams& params,
                                    ActMode mode, Rng* rng);

// Inverse-dynamics head on a pair of encoded observations (concatenated
// along channels; order-sensitive).
TensorPtr predict_inverse(const TensorPtr& features_t, const TensorPtr& features_t1,
                          const PolicyParams& params);

// Rotation head: 4 logits per row.
TensorPtr predict_rotation(const TensorPtr& features, const PolicyParams& params);

}  // namespace pad::policynet
