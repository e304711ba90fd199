#include "pad/rlalgos/sac.hpp"

#include <cmath>

#include "pad/errors.hpp"
#include "pad/numcore/ops.hpp"
#include "pad/ssl/augment.hpp"

namespace pad::rlalgos {

using namespace pad::numcore;
using policynet::ActionSpace;
using policynet::PolicyParams;

namespace {

constexpr float kLogSqrt2Pi = 0.9189385332046727f;  // 0.5*log(2*pi)
constexpr float kSquashEps = 1e-6f;

std::vector<TensorPtr> critic_params(const PolicyParams& p) {
    std::vector<TensorPtr> out = p.theta_e.tensors();
    for (auto& t : p.theta_a.tensors_with_prefix("a.q1")) out.push_back(t);
    for (auto& t : p.theta_a.tensors_with_prefix("a.q2")) out.push_back(t);
    return out;
}

}  // namespace

SacLearner::SacLearner(PolicyParams& params, SacConfig config)
    : params_(params),
      cfg_(config),
      critic_opt_(critic_params(params), {config.critic_lr, 0.9f, 0.999f, 1e-8f}),
      actor_opt_(params.theta_a.tensors_with_prefix("a.actor"),
                 {config.actor_lr, 0.9f, 0.999f, 1e-8f}),
      alpha_opt_({params.theta_a.find("a.log_alpha")},
                 {config.alpha_lr, 0.5f, 0.999f, 1e-8f}) {
    if (params.config.action_space != ActionSpace::Continuous) {
        throw ConfigError("sac: continuous action space required");
    }
    // gamma = 0 is allowed (degenerate bandit case used in tests).
    if (!(cfg_.discount >= 0.0f && cfg_.discount < 1.0f)) {
        throw ConfigError("sac: discount must lie in [0,1)");
    }
    if (cfg_.tau <= 0.0f || cfg_.tau > 1.0f) throw ConfigError("sac: tau must lie in (0,1]");
    if (cfg_.target_entropy == 0.0f) {
        cfg_.target_entropy = -static_cast<float>(params.config.action_dim);
    }
}

float SacLearner::temperature() const {
    return std::exp(params_.theta_a.find("a.log_alpha")->data[0]);
}

std::vector<float> SacLearner::compute_targets(const std::vector<const envs::Transition*>& batch,
                                               Rng& rng) const {
    NoGradGuard guard;
    const int n = static_cast<int>(batch.size());
    const int a_dim = params_.config.action_dim;

    std::vector<const envs::Observation*> next_obs(batch.size());
    for (size_t i = 0; i < batch.size(); ++i) next_obs[i] = &batch[i]->s_t1;
    TensorPtr obs_t1 = ssl::crop_batch_tensor(next_obs, params_.config.crop_size, rng);
    TensorPtr f = policynet::encode(obs_t1, params_);
    auto dist = policynet::actor_forward(f, params_).dist;

    // Reparameterized next action and its squashed log-prob, plain float.
    std::vector<float> next_action(static_cast<size_t>(n) * a_dim);
    std::vector<float> logp(static_cast<size_t>(n), 0.0f);
    for (int i = 0; i < n; ++i) {
        for (int d = 0; d < a_dim; ++d) {
            const size_t k = static_cast<size_t>(i * a_dim + d);
            const float eps = rng.normal();
            const float ls = dist.log_std->data[k];
            const float u = dist.mean->data[k] + std::exp(ls) * eps;
            const float act = std::tanh(u);
            next_action[k] = act;
            logp[static_cast<size_t>(i)] +=
                -0.5f * eps * eps - ls - kLogSqrt2Pi - std::log(1.0f - act * act + kSquashEps);
        }
    }
    TensorPtr act_t = Tensor::create({n, a_dim}, next_action);
    TensorPtr q1 = policynet::critic_forward(f, act_t, params_, "t1");
    TensorPtr q2 = policynet::critic_forward(f, act_t, params_, "t2");

    const float alpha = temperature();
    std::vector<float> targets(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        const float qmin = std::min(q1->data[static_cast<size_t>(i)], q2->data[static_cast<size_t>(i)]);
        const float mask = batch[static_cast<size_t>(i)]->done ? 0.0f : 1.0f;
        targets[static_cast<size_t>(i)] =
            batch[static_cast<size_t>(i)]->r_t +
            cfg_.discount * mask * (qmin - alpha * logp[static_cast<size_t>(i)]);
    }
    return targets;
}

SacLossRecord SacLearner::update(ReplayBuffer& buffer, Rng& rng) {
    SacLossRecord rec;
    if (buffer.size() < cfg_.batch_size) {
        rec.skipped = true;
        return rec;
    }
    const int n = cfg_.batch_size;
    const int a_dim = params_.config.action_dim;
    auto batch = buffer.sample(n, rng);

    const std::vector<float> targets = compute_targets(batch, rng);
    TensorPtr target_t = Tensor::create({n, 1}, targets);

    // Critic update; gradients reach the encoder through this loss only.
    std::vector<const envs::Observation*> obs_ptrs(batch.size());
    std::vector<float> actions(static_cast<size_t>(n) * a_dim);
    for (size_t i = 0; i < batch.size(); ++i) {
        obs_ptrs[i] = &batch[i]->s_t;
        const auto& a = batch[i]->a_t.continuous;
        std::copy(a.begin(), a.end(), actions.begin() + i * static_cast<size_t>(a_dim));
    }
    TensorPtr obs_t = ssl::crop_batch_tensor(obs_ptrs, params_.config.crop_size, rng);
    TensorPtr action_t = Tensor::create({n, a_dim}, std::move(actions));
    TensorPtr features = policynet::encode(obs_t, params_);
    TensorPtr q1 = policynet::critic_forward(features, action_t, params_, "q1");
    TensorPtr q2 = policynet::critic_forward(features, action_t, params_, "q2");
    TensorPtr critic_loss = add(mse_loss(q1, target_t), mse_loss(q2, target_t));
    backward(critic_loss);
    rec.critic_loss = critic_loss->item();
    critic_opt_.step();

    // Actor update on detached features; stray critic grads cleared below.
    TensorPtr f_det = detach(features);
    auto dist = policynet::actor_forward(f_det, params_).dist;
    std::vector<float> noise(static_cast<size_t>(n) * a_dim);
    for (float& v : noise) v = rng.normal();
    TensorPtr eps = Tensor::create({n, a_dim}, noise);
    TensorPtr u = add(dist.mean, mul(exp_op(dist.log_std), eps));
    TensorPtr act = tanh_op(u);
    // log pi(a|s) = sum_d [ -eps^2/2 - log_std - log(sqrt(2pi)) - log(1 - a^2 + eps) ]
    TensorPtr gauss = sub(affine(mul(eps, eps), -0.5f, -kLogSqrt2Pi), dist.log_std);
    TensorPtr squash = log_op(affine(mul(act, act), -1.0f, 1.0f + kSquashEps));
    TensorPtr logp = row_sum(sub(gauss, squash));

    TensorPtr qa1 = policynet::critic_forward(f_det, act, params_, "q1");
    TensorPtr qa2 = policynet::critic_forward(f_det, act, params_, "q2");
    TensorPtr qmin = min2(qa1, qa2);
    TensorPtr alpha_const = Tensor::scalar(temperature());
    TensorPtr actor_loss = mean_all(sub(scale_by(logp, alpha_const), qmin));
    backward(actor_loss);
    rec.actor_loss = actor_loss->item();
    actor_opt_.step();
    zero_grads(critic_opt_.params());

    // Temperature update toward the entropy target (log-prob detached).
    std::vector<float> lp_plus_te(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        lp_plus_te[static_cast<size_t>(i)] = logp->data[static_cast<size_t>(i)] + cfg_.target_entropy;
    }
    TensorPtr alpha_loss =
        neg(mean_all(scale_by(Tensor::create({n, 1}, std::move(lp_plus_te)),
                              params_.theta_a.find("a.log_alpha"))));
    backward(alpha_loss);
    rec.alpha_loss = alpha_loss->item();
    alpha_opt_.step();
    rec.alpha = temperature();

    ++update_count_;
    if (update_count_ % cfg_.target_update_interval == 0) {
        soft_update_targets(cfg_.tau);
    }
    return rec;
}

void SacLearner::soft_update_targets(float tau) {
    for (const auto& [online, target] :
         std::vector<std::pair<std::string, std::string>>{{"a.q1", "a.t1"}, {"a.q2", "a.t2"}}) {
        for (const auto& [name, t] : params_.theta_a.items) {
            if (name.rfind(online, 0) != 0) continue;
            const TensorPtr& dst = params_.theta_a.find(target + name.substr(online.size()));
            for (size_t i = 0; i < t->data.size(); ++i) {
                dst->data[i] = (1.0f - tau) * dst->data[i] + tau * t->data[i];
            }
        }
    }
}

}  // namespace pad::rlalgos
