#include "pad/padloop/deploy.hpp"

#include <cmath>
#include <cstring>

#include "pad/errors.hpp"
#include "pad/numcore/ops.hpp"
#include "pad/rlalgos/replay.hpp"
#include "pad/ssl/augment.hpp"

namespace pad::padloop {

using namespace pad::numcore;
using envs::Action;
using envs::Env;
using envs::EnvConfig;
using envs::EnvKind;
using envs::ShiftSpec;
using policynet::ActionSpace;
using policynet::PolicyParams;
using ssl::SslTask;

DeployMode parse_deploy_mode(const std::string& name) {
    if (name == "frozen") return DeployMode::Frozen;
    if (name == "pad") return DeployMode::Pad;
    if (name == "pad_fixed_head") return DeployMode::PadFixedHead;
    if (name == "offline_pad") return DeployMode::OfflinePad;
    if (name == "blind") return DeployMode::Blind;
    throw ConfigError("unknown deploy mode '" + name + "'");
}

std::string deploy_mode_name(DeployMode mode) {
    switch (mode) {
        case DeployMode::Frozen: return "frozen";
        case DeployMode::Pad: return "pad";
        case DeployMode::PadFixedHead: return "pad_fixed_head";
        case DeployMode::OfflinePad: return "offline_pad";
        case DeployMode::Blind: return "blind";
    }
    return "frozen";
}

Rng deploy_update_rng(uint64_t seed, int episode, int step) {
    return Rng(Rng::derive(Rng::derive(seed, 0xDE9107 + static_cast<uint64_t>(episode)),
                           static_cast<uint64_t>(step)));
}

std::vector<TensorPtr> adapted_params(const PolicyParams& params, DeployMode mode) {
    std::vector<TensorPtr> out = params.theta_e.tensors();
    if (mode != DeployMode::PadFixedHead) {
        for (auto& t : params.theta_s.tensors()) out.push_back(t);
    }
    return out;
}

float ssl_adapt_step(PolicyParams& params, const ssl::SslBatch& batch, AdamOptimizer& opt) {
    TensorPtr loss = batch.task == SslTask::Idm ? ssl::idm_loss(batch, params)
                                                : ssl::rotation_loss(batch, params);
    backward(loss);
    ensure_grads(opt.params());
    opt.step();
    return loss->item();
}

namespace {

Action deploy_action(const Env& env, const PolicyParams& params, bool blind) {
    NoGradGuard guard;
    const auto& cfg = params.config;
    TensorPtr in;
    if (blind) {
        in = Tensor::zeros({1, cfg.frame_stack * 3, cfg.crop_size, cfg.crop_size});
    } else {
        in = ssl::center_crop_tensor(env.observation(), cfg.crop_size);
    }
    auto actions = policynet::act(policynet::encode(in, params), params, policynet::ActMode::Mean,
                                  nullptr);
    if (cfg.action_space == ActionSpace::Continuous) return Action{{actions[0]}, -1};
    return Action::disc(static_cast<int>(actions[0][0]));
}

float theta_e_drift(const PolicyParams& now, const PolicyParams& origin) {
    double acc = 0.0;
    for (size_t i = 0; i < now.theta_e.items.size(); ++i) {
        const auto& a = now.theta_e.items[i].second->data;
        const auto& b = origin.theta_e.items[i].second->data;
        for (size_t j = 0; j < a.size(); ++j) {
            const double d = static_cast<double>(a[j]) - static_cast<double>(b[j]);
            acc += d * d;
        }
    }
    return static_cast<float>(std::sqrt(acc));
}

void require_theta_a_untouched(const PolicyParams& now, const PolicyParams& origin) {
    for (size_t i = 0; i < now.theta_a.items.size(); ++i) {
        const auto& a = now.theta_a.items[i].second->data;
        const auto& b = origin.theta_a.items[i].second->data;
        if (std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) != 0) {
            throw UsageError("deploy: theta_a was mutated");
        }
    }
}

std::vector<std::vector<float>> snapshot(const std::vector<TensorPtr>& tensors) {
    std::vector<std::vector<float>> out;
    out.reserve(tensors.size());
    for (const auto& t : tensors) out.push_back(t->data);
    return out;
}

void restore(const std::vector<TensorPtr>& tensors, const std::vector<std::vector<float>>& snap) {
    for (size_t i = 0; i < tensors.size(); ++i) {
        tensors[i]->data = snap[i];
        tensors[i]->zero_grad();
    }
}

}  // namespace

DeployResult deploy(const PolicyParams& params, EnvKind kind, const ShiftSpec& shift,
                    const EnvConfig& env_cfg, const DeployConfig& cfg,
                    const AdamOptimizer* carried_state) {
    if (cfg.steps_per_update != 1) {
        throw ConfigError("deploy: exactly one gradient step per iteration is required");
    }
    if (cfg.episodes < 1) throw ConfigError("deploy: episodes must be >= 1");
    if (cfg.horizon_multiplier < 1) throw ConfigError("deploy: horizon multiplier must be >= 1");
    if (params.config.action_space == ActionSpace::Discrete && kind == EnvKind::PointReach) {
        throw ConfigError("deploy: policy/environment action-space mismatch");
    }
    if (params.config.action_space == ActionSpace::Continuous && kind == EnvKind::GridMaze) {
        throw ConfigError("deploy: policy/environment action-space mismatch");
    }

    EnvConfig long_cfg = env_cfg;
    long_cfg.horizon = env_cfg.horizon * cfg.horizon_multiplier;

    const bool adapts = cfg.mode == DeployMode::Pad || cfg.mode == DeployMode::PadFixedHead ||
                        cfg.mode == DeployMode::OfflinePad;
    const bool blind = cfg.mode == DeployMode::Blind;

    DeployResult result;
    PolicyParams work = params.clone();
    for (int episode = 0; episode < cfg.episodes; ++episode) {
        // Each episode starts from the trained parameters.
        work = params.clone();
        AdamOptimizer opt(adapted_params(work, cfg.mode), {cfg.test_lr, 0.9f, 0.999f, 1e-8f});
        if (cfg.carry_adam && carried_state != nullptr) opt.copy_state_from(*carried_state);

        Env env = Env::make(kind, shift, long_cfg,
                            Rng::derive(cfg.seed, 0xEA0 + static_cast<uint64_t>(episode)));
        EpisodeTrace trace;
        std::optional<envs::Transition> latest;
        int t = 0;
        while (!env.done()) {
            StepRecord rec;
            std::vector<std::vector<float>> snap;
            if (cfg.mode == DeployMode::OfflinePad) snap = snapshot(adapted_params(work, cfg.mode));

            if (adapts) {
                Rng rng = deploy_update_rng(cfg.seed, episode, t);
                ssl::SslBatch batch = ssl::make_deploy_batch(
                    cfg.ssl_task, latest.has_value() ? &latest.value() : nullptr,
                    &env.observation(), cfg.test_batch_size, params.config.crop_size, rng);
                if (!batch.empty()) {
                    rec.ssl_loss = ssl_adapt_step(work, batch, opt);
                    rec.updated = true;
                }
            }

            envs::Transition tr;
            tr.s_t = env.observation();
            tr.a_t = deploy_action(env, work, blind);
            auto res = env.step(tr.a_t);
            tr.r_t = res.reward;
            tr.s_t1 = res.obs;
            tr.done = res.done;
            latest = std::move(tr);

            rec.reward = res.reward;
            rec.drift_theta_e = theta_e_drift(work, params);
            trace.steps.push_back(rec);
            trace.episodic_return += res.reward;

            if (cfg.mode == DeployMode::OfflinePad) {
                // Updates are forgotten after each step: parameters and
                // optimizer state reset to the episode origin.
                restore(adapted_params(work, cfg.mode), snap);
                opt = AdamOptimizer(adapted_params(work, cfg.mode),
                                    {cfg.test_lr, 0.9f, 0.999f, 1e-8f});
                if (cfg.carry_adam && carried_state != nullptr) opt.copy_state_from(*carried_state);
            }
            ++t;
        }
        trace.wall_steps = t;
        trace.success = env.success();
        require_theta_a_untouched(work, params);
        result.episodes.push_back(std::move(trace));
    }
    result.final_params = std::move(work);
    return result;
}

PolicyParams finetune_with_rewards(const PolicyParams& params, EnvKind kind,
                                   const ShiftSpec& shift, const EnvConfig& env_cfg,
                                   int episode_budget, const TrainConfig& train_cfg,
                                   uint64_t seed) {
    if (episode_budget < 1) throw ConfigError("finetune: episode budget must be >= 1");

    PolicyParams work = params.clone();
    Rng act_rng(Rng::derive(seed, 0xF17E));

    // Collection phase: frozen stochastic policy, rewards recorded.
    std::vector<std::vector<envs::Transition>> episodes;
    for (int e = 0; e < episode_budget; ++e) {
        Env env = Env::make(kind, shift, env_cfg, Rng::derive(seed, 0xF200 + static_cast<uint64_t>(e)));
        std::vector<envs::Transition> ep;
        while (!env.done()) {
            envs::Transition tr;
            tr.s_t = env.observation();
            {
                NoGradGuard guard;
                TensorPtr in = ssl::center_crop_tensor(env.observation(), params.config.crop_size);
                auto actions = policynet::act(policynet::encode(in, work), work,
                                              policynet::ActMode::Sample, &act_rng);
                tr.a_t = params.config.action_space == ActionSpace::Continuous
                             ? Action{{actions[0]}, -1}
                             : Action::disc(static_cast<int>(actions[0][0]));
            }
            auto res = env.step(tr.a_t);
            tr.r_t = res.reward;
            tr.s_t1 = res.obs;
            tr.done = res.done;
            ep.push_back(std::move(tr));
        }
        episodes.push_back(std::move(ep));
    }
    // Collection must not have touched the parameters.
    for (size_t i = 0; i < work.theta_e.items.size(); ++i) {
        const auto& a = work.theta_e.items[i].second->data;
        const auto& b = params.theta_e.items[i].second->data;
        if (std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) != 0) {
            throw UsageError("finetune: collection phase mutated parameters");
        }
    }

    Rng update_rng(Rng::derive(seed, 0xF3));
    if (params.config.action_space == ActionSpace::Continuous) {
        // SAC fine-tuning on the collected transitions: one update per
        // collected step, as during training.
        rlalgos::ReplayBuffer buffer(
            std::max(1, episode_budget * env_cfg.horizon));
        int collected = 0;
        for (auto& ep : episodes) {
            for (auto& tr : ep) {
                buffer.push(std::move(tr));
                ++collected;
            }
        }
        rlalgos::SacConfig sac_cfg = train_cfg.sac;
        rlalgos::SacLearner learner(work, sac_cfg);
        for (int i = 0; i < collected; ++i) learner.update(buffer, update_rng);
    } else {
        // A2C fine-tuning: collected episodes replayed as rollouts.
        rlalgos::A2cConfig a2c_cfg = train_cfg.a2c;
        rlalgos::A2cLearner learner(work, a2c_cfg);
        for (const auto& ep : episodes) {
            for (size_t start = 0; start < ep.size(); start += static_cast<size_t>(a2c_cfg.rollout_length)) {
                rlalgos::Rollout ro;
                const size_t end = std::min(ep.size(), start + static_cast<size_t>(a2c_cfg.rollout_length));
                for (size_t i = start; i < end; ++i) {
                    rlalgos::RolloutStep step;
                    step.obs = ep[i].s_t;
                    step.action = ep[i].a_t.discrete;
                    step.reward = ep[i].r_t;
                    ro.steps.push_back(std::move(step));
                }
                ro.bootstrap_obs = ep[end - 1].s_t1;
                ro.bootstrap_done = ep[end - 1].done;
                learner.update({ro}, update_rng);
            }
        }
    }
    return work;
}

}  // namespace pad::padloop
