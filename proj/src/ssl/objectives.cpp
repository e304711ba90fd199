#include "pad/ssl/objectives.hpp"

#include "pad/errors.hpp"
#include "pad/numcore/ops.hpp"

namespace pad::ssl {

using namespace pad::numcore;

TensorPtr obs_batch_tensor(const std::vector<Observation>& obs) {
    if (obs.empty()) throw UsageError("obs_batch_tensor: empty batch");
    const int n = static_cast<int>(obs.size());
    const int k = obs[0].frame_stack();
    const int t = obs[0].size;
    const int per = k * 3 * t * t;
    std::vector<float> data(static_cast<size_t>(n) * per);
    for (int i = 0; i < n; ++i) {
        if (obs[static_cast<size_t>(i)].frame_stack() != k || obs[static_cast<size_t>(i)].size != t) {
            throw DimensionError("obs_batch_tensor: inconsistent observation shapes");
        }
        obs[static_cast<size_t>(i)].write(data.data() + static_cast<size_t>(i) * per);
    }
    return Tensor::create({n, k * 3, t, t}, std::move(data));
}

SslBatch make_idm_batch(const std::vector<const envs::Transition*>& transitions, int crop_size,
                        Rng& rng) {
    SslBatch batch;
    batch.task = SslTask::Idm;
    for (const envs::Transition* tr : transitions) {
        CropRule rule{tr->s_t.size, crop_size, CropPolicy::Random};
        batch.obs_t.push_back(random_crop(tr->s_t, rule, rng));
        batch.obs_t1.push_back(random_crop(tr->s_t1, rule, rng));
        batch.actions.push_back(tr->a_t);
    }
    return batch;
}

SslBatch make_rotation_batch(const std::vector<const envs::Observation*>& observations,
                             int crop_size, Rng& rng) {
    SslBatch batch;
    batch.task = SslTask::Rotation;
    for (const Observation* obs : observations) {
        CropRule rule{obs->size, crop_size, CropPolicy::Random};
        const int quarter = rng.uniform_int(0, 3);
        batch.obs.push_back(rotate(random_crop(*obs, rule, rng), quarter));
        batch.labels.push_back(quarter);
    }
    return batch;
}

SslBatch make_deploy_batch(SslTask task, const envs::Transition* latest_transition,
                           const Observation* latest_obs, int batch_size, int crop_size, Rng& rng) {
    if (batch_size < 1) throw UsageError("make_deploy_batch: batch_size must be >= 1");
    if (task == SslTask::Idm) {
        SslBatch batch;
        batch.task = SslTask::Idm;
        if (latest_transition == nullptr) return batch;  // no transition yet; skip
        std::vector<const envs::Transition*> rows(static_cast<size_t>(batch_size),
                                                  latest_transition);
        return make_idm_batch(rows, crop_size, rng);
    }
    if (latest_obs == nullptr) throw UsageError("make_deploy_batch: rotation needs an observation");
    std::vector<const Observation*> rows(static_cast<size_t>(batch_size), latest_obs);
    return make_rotation_batch(rows, crop_size, rng);
}

TensorPtr idm_loss(const SslBatch& batch, const policynet::PolicyParams& params) {
    if (batch.task != SslTask::Idm) throw UsageError("idm_loss: batch task mismatch");
    if (batch.empty()) throw UsageError("idm_loss: empty batch");
    TensorPtr f_t = policynet::encode(obs_batch_tensor(batch.obs_t), params);
    TensorPtr f_t1 = policynet::encode(obs_batch_tensor(batch.obs_t1), params);
    TensorPtr pred = policynet::predict_inverse(f_t, f_t1, params);

    const int n = batch.size();
    if (params.config.action_space == policynet::ActionSpace::Continuous) {
        const int a = params.config.action_dim;
        std::vector<float> target(static_cast<size_t>(n) * a);
        for (int i = 0; i < n; ++i) {
            const auto& act = batch.actions[static_cast<size_t>(i)].continuous;
            if (static_cast<int>(act.size()) != a) {
                throw DimensionError("idm_loss: action width mismatch");
            }
            std::copy(act.begin(), act.end(), target.begin() + static_cast<size_t>(i) * a);
        }
        return mse_loss(pred, Tensor::create({n, a}, std::move(target)));
    }
    std::vector<int> labels(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        labels[static_cast<size_t>(i)] = batch.actions[static_cast<size_t>(i)].discrete;
    }
    return cross_entropy_logits(pred, labels);
}

TensorPtr rotation_loss(const SslBatch& batch, const policynet::PolicyParams& params) {
    if (batch.task != SslTask::Rotation) throw UsageError("rotation_loss: batch task mismatch");
    if (batch.empty()) throw UsageError("rotation_loss: empty batch");
    TensorPtr features = policynet::encode(obs_batch_tensor(batch.obs), params);
    TensorPtr logits = policynet::predict_rotation(features, params);
    return cross_entropy_logits(logits, batch.labels);
}

}  // namespace pad::ssl
