#pragma once

#include <vector>

#include "pad/envs/env.hpp"
#include "pad/numcore/tensor.hpp"
#include "pad/policynet/policy.hpp"
#include "pad/rng.hpp"
#include "pad/ssl/augment.hpp"

namespace pad::ssl {

enum class SslTask { Idm, Rotation };

// One batch of self-supervised training rows. IDM rows carry a pair of
// independently cropped consecutive observations plus the action between
// them; rotation rows carry one cropped observation rotated by the labelled
// quarter-turn count.
struct SslBatch {
    SslTask task = SslTask::Idm;

    std::vector<Observation> obs_t;
    std::vector<Observation> obs_t1;
    std::vector<envs::Action> actions;

    std::vector<Observation> obs;
    std::vector<int> labels;  // 0..3 quarter turns

    int size() const {
        return static_cast<int>(task == SslTask::Idm ? obs_t.size() : obs.size());
    }
    bool empty() const { return size() == 0; }
};

// Stacks observations into a [N, k*3, T, T] tensor.
numcore::TensorPtr obs_batch_tensor(const std::vector<Observation>& obs);

// Training-time batches: one row per supplied transition / observation,
// each independently cropped (IDM also crops s_t and s_{t+1} independently).
SslBatch make_idm_batch(const std::vector<const envs::Transition*>& transitions, int crop_size,
                        Rng& rng);
SslBatch make_rotation_batch(const std::vector<const envs::Observation*>& observations,
                             int crop_size, Rng& rng);

// Deployment-time batch: batch_size augmented copies of the most recent
// transition (IDM) or observation (rotation). IDM before the first
// transition exists yields an empty batch; the caller skips the update.
SslBatch make_deploy_batch(SslTask task, const envs::Transition* latest_transition,
                           const Observation* latest_obs, int batch_size, int crop_size, Rng& rng);

// Mean squared error (continuous actions) or mean cross-entropy (discrete)
// of the inverse-dynamics head; differentiable w.r.t. theta_e and theta_s.
numcore::TensorPtr idm_loss(const SslBatch& batch, const policynet::PolicyParams& params);

// Four-way cross-entropy of the rotation head.
numcore::TensorPtr rotation_loss(const SslBatch& batch, const policynet::PolicyParams& params);

}  // namespace pad::ssl
