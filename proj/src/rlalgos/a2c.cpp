#include "pad/rlalgos/a2c.hpp"

#include "pad/errors.hpp"
#include "pad/numcore/ops.hpp"
#include "pad/ssl/augment.hpp"

namespace pad::rlalgos {

using namespace pad::numcore;
using policynet::ActionSpace;

std::vector<float> discounted_returns(const std::vector<float>& rewards, float bootstrap_value,
                                      float discount) {
    std::vector<float> returns(rewards.size());
    float acc = bootstrap_value;
    for (int i = static_cast<int>(rewards.size()) - 1; i >= 0; --i) {
        acc = rewards[static_cast<size_t>(i)] + discount * acc;
        returns[static_cast<size_t>(i)] = acc;
    }
    return returns;
}

namespace {

std::vector<TensorPtr> rl_params(const policynet::PolicyParams& p) {
    std::vector<TensorPtr> out = p.theta_e.tensors();
    for (auto& t : p.theta_a.tensors()) out.push_back(t);
    return out;
}

}  // namespace

A2cLearner::A2cLearner(policynet::PolicyParams& params, A2cConfig config)
    : params_(params), cfg_(config), opt_(rl_params(params), {config.learning_rate, 0.9f, 0.999f, 1e-8f}) {
    if (params.config.action_space != ActionSpace::Discrete) {
        throw ConfigError("a2c: discrete action space required");
    }
    if (!(cfg_.discount > 0.0f && cfg_.discount < 1.0f)) {
        throw ConfigError("a2c: discount must lie in (0,1)");
    }
    if (cfg_.actor_count < 1) throw ConfigError("a2c: actor_count must be >= 1");
}

TensorPtr A2cLearner::loss_from_tensors(const TensorPtr& obs_batch, const std::vector<int>& actions,
                                        const std::vector<float>& advantages,
                                        const std::vector<float>& returns,
                                        A2cLossRecord* record) const {
    const int n = obs_batch->dim(0);
    TensorPtr features = policynet::encode(obs_batch, params_);
    auto out = policynet::actor_forward(features, params_);

    std::vector<float> adv_values = advantages;
    if (adv_values.empty()) {
        adv_values.resize(returns.size());
        for (size_t i = 0; i < returns.size(); ++i) {
            adv_values[i] = returns[i] - out.value->data[i];
        }
    }
    TensorPtr lp = log_softmax(out.dist.logits, 1);
    TensorPtr picked = gather_cols(lp, actions);
    TensorPtr adv = Tensor::create({n, 1}, std::move(adv_values));
    TensorPtr pg = neg(mean_all(mul(picked, adv)));
    TensorPtr vloss = mse_loss(out.value, Tensor::create({n, 1}, returns));
    TensorPtr ent = entropy_of_logits(out.dist.logits);
    TensorPtr total = sub(add(pg, affine(vloss, cfg_.value_coeff, 0.0f)),
                          affine(ent, cfg_.entropy_coeff, 0.0f));
    if (record) {
        record->pg_loss = pg->item();
        record->value_loss = vloss->item();
        record->entropy = ent->item();
        record->total_loss = total->item();
    }
    return total;
}

A2cLossRecord A2cLearner::update(const std::vector<Rollout>& rollouts, Rng& rng) {
    if (rollouts.empty()) throw UsageError("a2c: no rollouts");
    for (const Rollout& r : rollouts) {
        if (r.steps.empty()) throw UsageError("a2c: empty rollout");
    }

    // Bootstrap values with the current network, no graph.
    std::vector<float> bootstrap(rollouts.size(), 0.0f);
    {
        NoGradGuard guard;
        for (size_t i = 0; i < rollouts.size(); ++i) {
            if (rollouts[i].bootstrap_done) continue;
            TensorPtr obs =
                ssl::center_crop_tensor(rollouts[i].bootstrap_obs, params_.config.crop_size);
            auto out = policynet::actor_forward(policynet::encode(obs, params_), params_);
            bootstrap[i] = out.value->data[0];
        }
    }

    // Flatten rollouts into one batch (augmented crops, like all training
    // passes).
    std::vector<const envs::Observation*> obs_ptrs;
    std::vector<int> actions;
    std::vector<float> returns;
    for (size_t i = 0; i < rollouts.size(); ++i) {
        std::vector<float> rewards;
        rewards.reserve(rollouts[i].steps.size());
        for (const RolloutStep& s : rollouts[i].steps) rewards.push_back(s.reward);
        const std::vector<float> ret = discounted_returns(rewards, bootstrap[i], cfg_.discount);
        for (size_t j = 0; j < rollouts[i].steps.size(); ++j) {
            obs_ptrs.push_back(&rollouts[i].steps[j].obs);
            actions.push_back(rollouts[i].steps[j].action);
            returns.push_back(ret[j]);
        }
    }
    TensorPtr obs_batch = ssl::crop_batch_tensor(obs_ptrs, params_.config.crop_size, rng);

    A2cLossRecord rec;
    TensorPtr total = loss_from_tensors(obs_batch, actions, {}, returns, &rec);
    backward(total);
    opt_.step();
    return rec;
}

}  // namespace pad::rlalgos
