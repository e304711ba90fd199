#include "pad/padloop/train.hpp"

#include <cmath>

#include "pad/errors.hpp"
#include "pad/numcore/ops.hpp"
#include "pad/padloop/deploy.hpp"
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

namespace {

Action to_env_action(const std::vector<float>& raw, ActionSpace space) {
    if (space == ActionSpace::Continuous) return Action{{raw}, -1};
    return Action::disc(static_cast<int>(raw[0]));
}

Action policy_action(const envs::Observation& obs, const PolicyParams& params,
                     policynet::ActMode mode, Rng* rng) {
    NoGradGuard guard;
    TensorPtr in = ssl::center_crop_tensor(obs, params.config.crop_size);
    TensorPtr f = policynet::encode(in, params);
    auto actions = policynet::act(f, params, mode, rng);
    return to_env_action(actions[0], params.config.action_space);
}

Action random_action(ActionSpace space, int action_dim, Rng& rng) {
    if (space == ActionSpace::Continuous) {
        std::vector<float> a(static_cast<size_t>(action_dim));
        for (float& v : a) v = rng.uniform(-1.0f, 1.0f);
        return Action{{std::move(a)}, -1};
    }
    return Action::disc(rng.uniform_int(0, action_dim - 1));
}

TensorPtr ssl_task_loss(SslTask task, const ssl::SslBatch& batch, const PolicyParams& params) {
    return task == SslTask::Idm ? ssl::idm_loss(batch, params) : ssl::rotation_loss(batch, params);
}

// One gradient step on alpha * L w.r.t. (theta_e, theta_s).
float joint_ssl_update(PolicyParams& params, AdamOptimizer& opt, SslTask task,
                       const ssl::SslBatch& batch, float alpha) {
    TensorPtr loss = ssl_task_loss(task, batch, params);
    TensorPtr scaled = alpha == 1.0f ? loss : affine(loss, alpha, 0.0f);
    backward(scaled);
    ensure_grads(opt.params());
    opt.step();
    return loss->item();
}

ShiftSpec dr_spec(EnvKind kind, Rng& rng, int table_size) {
    ShiftSpec spec = envs::sample_randomization(kind, rng);
    if (table_size < 100) {
        spec.color_set_index %= table_size;
        spec.wall_texture_id %= table_size;
        spec.floor_texture_id %= table_size;
    }
    return spec;
}

float frozen_eval_return(const PolicyParams& params, EnvKind kind, const EnvConfig& env_cfg,
                         int episodes, uint64_t seed) {
    DeployConfig cfg;
    cfg.mode = DeployMode::Frozen;
    cfg.episodes = episodes;
    cfg.seed = seed;
    DeployResult res = deploy(params, kind, ShiftSpec::none(), env_cfg, cfg);
    double total = 0.0;
    for (const EpisodeTrace& t : res.episodes) total += t.episodic_return;
    return static_cast<float>(total / episodes);
}

struct HeldoutSet {
    std::vector<envs::Transition> transitions;
    uint64_t crop_seed = 0;
};

HeldoutSet collect_heldout(EnvKind kind, const EnvConfig& env_cfg, ActionSpace space,
                           int action_dim, int size, uint64_t seed) {
    HeldoutSet set;
    set.crop_seed = Rng::derive(seed, 0xC407);
    Rng rng(Rng::derive(seed, 0x4E1D));
    Env env = Env::make(kind, ShiftSpec::none(), env_cfg, Rng::derive(seed, 0x4E1E));
    int episode = 0;
    while (static_cast<int>(set.transitions.size()) < size) {
        if (env.done()) env.reset(Rng::derive(seed, 0x4E1F + static_cast<uint64_t>(++episode)));
        envs::Transition tr;
        tr.s_t = env.observation();
        tr.a_t = random_action(space, action_dim, rng);
        auto res = env.step(tr.a_t);
        tr.r_t = res.reward;
        tr.s_t1 = res.obs;
        tr.done = res.done;
        set.transitions.push_back(std::move(tr));
    }
    return set;
}

HeldoutSsl heldout_metrics_on(const HeldoutSet& set, const PolicyParams& params, SslTask task) {
    NoGradGuard guard;
    Rng crop_rng(set.crop_seed);
    HeldoutSsl out;
    if (task == SslTask::Idm) {
        std::vector<const envs::Transition*> ptrs;
        for (const auto& tr : set.transitions) ptrs.push_back(&tr);
        ssl::SslBatch batch = ssl::make_idm_batch(ptrs, params.config.crop_size, crop_rng);
        TensorPtr f_t = policynet::encode(ssl::obs_batch_tensor(batch.obs_t), params);
        TensorPtr f_t1 = policynet::encode(ssl::obs_batch_tensor(batch.obs_t1), params);
        TensorPtr pred = policynet::predict_inverse(f_t, f_t1, params);
        const int n = batch.size();
        if (params.config.action_space == ActionSpace::Continuous) {
            const int a = params.config.action_dim;
            double acc = 0.0;
            for (int i = 0; i < n; ++i) {
                for (int d = 0; d < a; ++d) {
                    const double diff =
                        pred->data[static_cast<size_t>(i * a + d)] -
                        batch.actions[static_cast<size_t>(i)].continuous[static_cast<size_t>(d)];
                    acc += diff * diff;
                }
            }
            out.loss = static_cast<float>(acc / (n * a));
        } else {
            std::vector<int> labels(static_cast<size_t>(n));
            for (int i = 0; i < n; ++i) labels[static_cast<size_t>(i)] = batch.actions[static_cast<size_t>(i)].discrete;
            out.loss = cross_entropy_logits(pred, labels)->item();
            int hits = 0;
            const int k = params.config.action_dim;
            for (int i = 0; i < n; ++i) {
                const float* row = pred->data.data() + static_cast<size_t>(i) * k;
                int arg = 0;
                for (int j = 1; j < k; ++j) {
                    if (row[j] > row[arg]) arg = j;
                }
                if (arg == labels[static_cast<size_t>(i)]) ++hits;
            }
            out.accuracy = static_cast<float>(hits) / static_cast<float>(n);
        }
    } else {
        std::vector<const envs::Observation*> ptrs;
        for (const auto& tr : set.transitions) ptrs.push_back(&tr.s_t);
        ssl::SslBatch batch = ssl::make_rotation_batch(ptrs, params.config.crop_size, crop_rng);
        TensorPtr f = policynet::encode(ssl::obs_batch_tensor(batch.obs), params);
        TensorPtr logits = policynet::predict_rotation(f, params);
        out.loss = cross_entropy_logits(logits, batch.labels)->item();
        int hits = 0;
        for (int i = 0; i < batch.size(); ++i) {
            const float* row = logits->data.data() + static_cast<size_t>(i) * 4;
            int arg = 0;
            for (int j = 1; j < 4; ++j) {
                if (row[j] > row[arg]) arg = j;
            }
            if (arg == batch.labels[static_cast<size_t>(i)]) ++hits;
        }
        out.accuracy = static_cast<float>(hits) / static_cast<float>(batch.size());
    }
    return out;
}

void validate(EnvKind kind, const policynet::NetworkConfig& net_cfg, const EnvConfig& env_cfg,
              const TrainConfig& cfg) {
    const bool continuous = net_cfg.action_space == ActionSpace::Continuous;
    if (cfg.algo == Algo::Sac && (!continuous || kind != EnvKind::PointReach)) {
        throw ConfigError("train: sac requires the continuous pointreach environment");
    }
    if (cfg.algo == Algo::A2c && (continuous || kind != EnvKind::GridMaze)) {
        throw ConfigError("train: a2c requires the discrete gridmaze environment");
    }
    if (net_cfg.render_size != env_cfg.render_size || net_cfg.frame_stack != env_cfg.frame_stack) {
        throw ConfigError("train: network and environment render geometry disagree");
    }
    if (cfg.ssl_enabled && cfg.ssl_coefficient < 0.0f) {
        throw ConfigError("train: ssl_coefficient must be positive");
    }
    if (cfg.ssl_update_interval < 1 || cfg.rl_update_interval < 1) {
        throw ConfigError("train: update intervals must be >= 1");
    }
}

TrainResult train_sac(EnvKind kind, const EnvConfig& env_cfg,
                      const policynet::NetworkConfig& net_cfg, const TrainConfig& cfg) {
    PolicyParams params = policynet::build(net_cfg, cfg.seed);
    rlalgos::SacConfig sac_cfg = cfg.sac;
    rlalgos::SacLearner learner(params, sac_cfg);

    std::vector<TensorPtr> ssl_params = params.theta_e.tensors();
    for (auto& t : params.theta_s.tensors()) ssl_params.push_back(t);
    AdamOptimizer ssl_opt(ssl_params, {cfg.ssl_lr, 0.9f, 0.999f, 1e-8f});

    rlalgos::ReplayBuffer buffer(cfg.replay_capacity);
    Rng act_rng(Rng::derive(cfg.seed, 0xAC7));
    Rng update_rng(Rng::derive(cfg.seed, 0x0BD));
    Rng dr_rng(Rng::derive(cfg.seed, 0xD0));

    const bool ssl_on = cfg.ssl_enabled && cfg.ssl_coefficient > 0.0f;
    const HeldoutSet heldout = collect_heldout(kind, env_cfg, net_cfg.action_space,
                                               net_cfg.action_dim, cfg.heldout_size, cfg.seed);

    TrainResult result;
    result.initial_heldout_ssl = heldout_metrics_on(heldout, params, cfg.ssl_task).loss;

    int episodes = 0;
    auto episode_env = [&](int idx) {
        const ShiftSpec spec = cfg.domain_randomization ? dr_spec(kind, dr_rng, cfg.dr_table_size)
                                                        : ShiftSpec::none();
        return Env::make(kind, spec, env_cfg, Rng::derive(cfg.seed, 0xE900 + static_cast<uint64_t>(idx)));
    };
    Env env = episode_env(0);

    for (int step = 0; step < cfg.total_steps; ++step) {
        if (env.done()) {
            ++episodes;
            env = episode_env(episodes);
        }
        envs::Transition tr;
        tr.s_t = env.observation();
        tr.a_t = step < cfg.init_steps
                     ? random_action(net_cfg.action_space, net_cfg.action_dim, act_rng)
                     : policy_action(env.observation(), params, policynet::ActMode::Sample, &act_rng);
        auto res = env.step(tr.a_t);
        tr.r_t = res.reward;
        tr.s_t1 = res.obs;
        tr.done = res.done;
        buffer.push(std::move(tr));

        if (step >= cfg.init_steps) {
            if ((step + 1) % cfg.rl_update_interval == 0) learner.update(buffer, update_rng);
            if (ssl_on && (step + 1) % cfg.ssl_update_interval == 0 &&
                buffer.size() >= cfg.ssl_batch_size) {
                auto sampled = buffer.sample(cfg.ssl_batch_size, update_rng);
                ssl::SslBatch batch;
                if (cfg.ssl_task == SslTask::Idm) {
                    batch = ssl::make_idm_batch(sampled, net_cfg.crop_size, update_rng);
                } else {
                    std::vector<const envs::Observation*> obs_ptrs;
                    for (const envs::Transition* t : sampled) obs_ptrs.push_back(&t->s_t);
                    batch = ssl::make_rotation_batch(obs_ptrs, net_cfg.crop_size, update_rng);
                }
                joint_ssl_update(params, ssl_opt, cfg.ssl_task, batch, cfg.ssl_coefficient);
            }
        }
        if ((step + 1) % cfg.eval_interval == 0) {
            CurvePoint point;
            point.step = step + 1;
            point.eval_return = frozen_eval_return(params, kind, env_cfg, cfg.eval_episodes,
                                                   Rng::derive(cfg.seed, 0xEAA));
            const HeldoutSsl h = heldout_metrics_on(heldout, params, cfg.ssl_task);
            point.ssl_heldout_loss = h.loss;
            point.ssl_heldout_accuracy = h.accuracy;
            result.curve.push_back(point);
        }
    }
    result.steps_completed = cfg.total_steps;
    result.episodes_completed = episodes;
    const HeldoutSsl final_h = heldout_metrics_on(heldout, params, cfg.ssl_task);
    result.final_heldout_ssl = final_h.loss;
    result.final_heldout_accuracy = final_h.accuracy;
    result.params = std::move(params);
    return result;
}

TrainResult train_a2c(EnvKind kind, const EnvConfig& env_cfg,
                      const policynet::NetworkConfig& net_cfg, const TrainConfig& cfg) {
    PolicyParams params = policynet::build(net_cfg, cfg.seed);
    rlalgos::A2cLearner learner(params, cfg.a2c);

    std::vector<TensorPtr> ssl_params = params.theta_e.tensors();
    for (auto& t : params.theta_s.tensors()) ssl_params.push_back(t);
    AdamOptimizer ssl_opt(ssl_params, {cfg.ssl_lr, 0.9f, 0.999f, 1e-8f});

    Rng act_rng(Rng::derive(cfg.seed, 0xAC7));
    Rng update_rng(Rng::derive(cfg.seed, 0x0BD));
    Rng dr_rng(Rng::derive(cfg.seed, 0xD0));
    const bool ssl_on = cfg.ssl_enabled && cfg.ssl_coefficient > 0.0f;

    const HeldoutSet heldout = collect_heldout(kind, env_cfg, net_cfg.action_space,
                                               net_cfg.action_dim, cfg.heldout_size, cfg.seed);
    TrainResult result;
    result.initial_heldout_ssl = heldout_metrics_on(heldout, params, cfg.ssl_task).loss;

    // Episode budget; domain randomization trains for twice as many episodes.
    int episode_budget = std::max(1, cfg.total_steps / env_cfg.horizon);
    if (cfg.domain_randomization) episode_budget *= 2;

    const int actors = cfg.a2c.actor_count;
    std::vector<Env> envs_;
    envs_.reserve(static_cast<size_t>(actors));
    int episode_counter = 0;
    auto fresh_env = [&]() {
        const ShiftSpec spec = cfg.domain_randomization ? dr_spec(kind, dr_rng, cfg.dr_table_size)
                                                        : ShiftSpec::none();
        return Env::make(kind, spec, env_cfg,
                         Rng::derive(cfg.seed, 0xE900 + static_cast<uint64_t>(episode_counter++)));
    };
    for (int a = 0; a < actors; ++a) envs_.push_back(fresh_env());

    int episodes_done = 0;
    int steps_done = 0;
    int updates_done = 0;
    int next_eval = cfg.eval_interval;

    while (episodes_done < episode_budget) {
        std::vector<rlalgos::Rollout> rollouts(static_cast<size_t>(actors));
        for (int a = 0; a < actors; ++a) {
            Env& env = envs_[static_cast<size_t>(a)];
            if (env.done()) {
                ++episodes_done;
                env = fresh_env();
            }
            rlalgos::Rollout& ro = rollouts[static_cast<size_t>(a)];
            for (int t = 0; t < cfg.a2c.rollout_length && !env.done(); ++t) {
                rlalgos::RolloutStep step;
                step.obs = env.observation();
                const Action act =
                    policy_action(env.observation(), params, policynet::ActMode::Sample, &act_rng);
                step.action = act.discrete;
                auto res = env.step(act);
                step.reward = res.reward;
                ro.steps.push_back(std::move(step));
                ++steps_done;
            }
            ro.bootstrap_obs = env.observation();
            ro.bootstrap_done = env.done();
        }
        learner.update(rollouts, update_rng);
        ++updates_done;

        if (ssl_on && updates_done % cfg.ssl_update_interval == 0) {
            // SSL batch drawn from the current rollouts.
            std::vector<const envs::Observation*> pool;
            for (const auto& ro : rollouts) {
                for (const auto& s : ro.steps) pool.push_back(&s.obs);
            }
            if (!pool.empty()) {
                std::vector<const envs::Observation*> rows(static_cast<size_t>(cfg.ssl_batch_size));
                for (auto& r : rows) {
                    r = pool[static_cast<size_t>(update_rng.uniform_int(
                        0, static_cast<int>(pool.size()) - 1))];
                }
                ssl::SslBatch batch;
                if (cfg.ssl_task == SslTask::Rotation) {
                    batch = ssl::make_rotation_batch(rows, net_cfg.crop_size, update_rng);
                    joint_ssl_update(params, ssl_opt, cfg.ssl_task, batch, cfg.ssl_coefficient);
                } else {
                    // IDM from rollout transitions: consecutive pairs.
                    std::vector<envs::Transition> trs;
                    for (const auto& ro : rollouts) {
                        for (size_t i = 0; i + 1 < ro.steps.size(); ++i) {
                            envs::Transition tr;
                            tr.s_t = ro.steps[i].obs;
                            tr.a_t = Action::disc(ro.steps[i].action);
                            tr.s_t1 = ro.steps[i + 1].obs;
                            trs.push_back(std::move(tr));
                        }
                    }
                    if (!trs.empty()) {
                        std::vector<const envs::Transition*> trows(
                            static_cast<size_t>(cfg.ssl_batch_size));
                        for (auto& r : trows) {
                            r = &trs[static_cast<size_t>(update_rng.uniform_int(
                                0, static_cast<int>(trs.size()) - 1))];
                        }
                        ssl::SslBatch b2 = ssl::make_idm_batch(trows, net_cfg.crop_size, update_rng);
                        joint_ssl_update(params, ssl_opt, cfg.ssl_task, b2, cfg.ssl_coefficient);
                    }
                }
            }
        }
        if (steps_done >= next_eval) {
            next_eval += cfg.eval_interval;
            CurvePoint point;
            point.step = steps_done;
            point.eval_return = frozen_eval_return(params, kind, env_cfg, cfg.eval_episodes,
                                                   Rng::derive(cfg.seed, 0xEAA));
            const HeldoutSsl h = heldout_metrics_on(heldout, params, cfg.ssl_task);
            point.ssl_heldout_loss = h.loss;
            point.ssl_heldout_accuracy = h.accuracy;
            result.curve.push_back(point);
        }
    }
    result.steps_completed = steps_done;
    result.episodes_completed = episodes_done;
    const HeldoutSsl final_h = heldout_metrics_on(heldout, params, cfg.ssl_task);
    result.final_heldout_ssl = final_h.loss;
    result.final_heldout_accuracy = final_h.accuracy;
    result.params = std::move(params);
    return result;
}

}  // namespace

HeldoutSsl heldout_ssl_metrics(const PolicyParams& params, EnvKind kind, const EnvConfig& env_cfg,
                               SslTask task, int size, uint64_t seed) {
    const HeldoutSet set = collect_heldout(kind, env_cfg, params.config.action_space,
                                           params.config.action_dim, size, seed);
    return heldout_metrics_on(set, params, task);
}

TrainResult train_joint(EnvKind kind, const EnvConfig& env_cfg,
                        const policynet::NetworkConfig& net_cfg, const TrainConfig& cfg) {
    validate(kind, net_cfg, env_cfg, cfg);
    return cfg.algo == Algo::Sac ? train_sac(kind, env_cfg, net_cfg, cfg)
                                 : train_a2c(kind, env_cfg, net_cfg, cfg);
}

TrainResult train_domain_randomization(EnvKind kind, const EnvConfig& env_cfg,
                                       const policynet::NetworkConfig& net_cfg, TrainConfig cfg) {
    cfg.domain_randomization = true;
    cfg.ssl_enabled = false;  // DR is a base-RL baseline
    return train_joint(kind, env_cfg, net_cfg, cfg);
}

}  // namespace pad::padloop
