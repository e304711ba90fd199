#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "pad/padloop/deploy.hpp"
#include "pad/padloop/train.hpp"
#include "pad/ssl/augment.hpp"

using namespace pad;
using namespace pad::numcore;
using namespace pad::padloop;
using envs::Action;
using envs::Env;
using envs::EnvConfig;
using envs::EnvKind;
using envs::ShiftSpec;
using policynet::PolicyParams;

namespace {

EnvConfig tiny_env(int horizon) {
    EnvConfig cfg;
    cfg.render_size = 24;
    cfg.frame_stack = 1;
    cfg.horizon = horizon;
    return cfg;
}

policynet::NetworkConfig tiny_net(policynet::ActionSpace space, int action_dim) {
    policynet::NetworkConfig c;
    c.frame_stack = 1;
    c.render_size = 24;
    c.crop_size = 16;
    c.encoder_conv_layers = 2;
    c.head_conv_layers = 1;
    c.head_fc_layers = 1;
    c.filters = 4;
    c.hidden = 16;
    c.action_dim = action_dim;
    c.action_space = space;
    return c;
}

TrainConfig tiny_sac_train(uint64_t seed) {
    TrainConfig cfg;
    cfg.algo = Algo::Sac;
    cfg.total_steps = 90;
    cfg.init_steps = 40;
    cfg.eval_interval = 1000;  // no curve points
    cfg.heldout_size = 8;
    cfg.ssl_batch_size = 4;
    cfg.seed = seed;
    cfg.sac.batch_size = 8;
    return cfg;
}

bool sets_equal(const policynet::ParamSet& a, const policynet::ParamSet& b) {
    if (a.items.size() != b.items.size()) return false;
    for (size_t i = 0; i < a.items.size(); ++i) {
        if (a.items[i].first != b.items[i].first) return false;
        const auto& ta = a.items[i].second->data;
        const auto& tb = b.items[i].second->data;
        if (ta.size() != tb.size()) return false;
        if (std::memcmp(ta.data(), tb.data(), ta.size() * sizeof(float)) != 0) return false;
    }
    return true;
}

}  // namespace

TEST_CASE("train_joint: alpha=0 reduces to the base algorithm, deterministically") {
    const auto net = tiny_net(policynet::ActionSpace::Continuous, 2);
    const auto env_cfg = tiny_env(30);

    TrainConfig base_cfg = tiny_sac_train(5);
    base_cfg.ssl_enabled = false;
    auto base = train_joint(EnvKind::PointReach, env_cfg, net, base_cfg);

    TrainConfig zero_alpha = tiny_sac_train(5);
    zero_alpha.ssl_enabled = true;
    zero_alpha.ssl_coefficient = 0.0f;
    auto zab = train_joint(EnvKind::PointReach, env_cfg, net, zero_alpha);

    CHECK(sets_equal(base.params.theta_e, zab.params.theta_e));
    CHECK(sets_equal(base.params.theta_a, zab.params.theta_a));
    CHECK(sets_equal(base.params.theta_s, zab.params.theta_s));

    // theta_s untouched from initialization.
    auto init = policynet::build(net, 5);
    CHECK(sets_equal(base.params.theta_s, init.theta_s));

    // Same seed twice: bit-identical parameters.
    auto again = train_joint(EnvKind::PointReach, env_cfg, net, base_cfg);
    CHECK(sets_equal(base.params.theta_e, again.params.theta_e));
    CHECK(sets_equal(base.params.theta_a, again.params.theta_a));

    // With SSL on, theta_s moves.
    TrainConfig with_ssl = tiny_sac_train(5);
    auto joint = train_joint(EnvKind::PointReach, env_cfg, net, with_ssl);
    CHECK_FALSE(sets_equal(joint.params.theta_s, init.theta_s));

    // Incompatible algo/env combination.
    TrainConfig bad = tiny_sac_train(5);
    bad.algo = Algo::A2c;
    CHECK_THROWS_AS(train_joint(EnvKind::PointReach, env_cfg, net, bad), ConfigError);
}

TEST_CASE("domain randomization: collapsed table equals the base path; specs stay in-table") {
    const auto net = tiny_net(policynet::ActionSpace::Continuous, 2);
    const auto env_cfg = tiny_env(30);

    TrainConfig base_cfg = tiny_sac_train(7);
    base_cfg.ssl_enabled = false;
    auto base = train_joint(EnvKind::PointReach, env_cfg, net, base_cfg);

    TrainConfig dr_cfg = tiny_sac_train(7);
    dr_cfg.dr_table_size = 1;
    auto dr = train_domain_randomization(EnvKind::PointReach, env_cfg, net, dr_cfg);
    CHECK(sets_equal(base.params.theta_e, dr.params.theta_e));
    CHECK(sets_equal(base.params.theta_a, dr.params.theta_a));

    // Sampled randomizations always come from the training table.
    Rng rng(3);
    for (int i = 0; i < 100; ++i) {
        const ShiftSpec s = envs::sample_randomization(EnvKind::PointReach, rng);
        CHECK(s.palette == envs::PaletteTable::Train);
        CHECK(s.color_set_index >= 0);
        CHECK(s.color_set_index <= 99);
        const ShiftSpec g = envs::sample_randomization(EnvKind::GridMaze, rng);
        CHECK(g.wall_texture_id <= 99);
        CHECK(g.floor_texture_id <= 99);
    }
}

TEST_CASE("a2c: domain randomization doubles the navigation episode budget exactly") {
    auto net = tiny_net(policynet::ActionSpace::Discrete, 4);
    EnvConfig env_cfg = tiny_env(10);

    TrainConfig cfg;
    cfg.algo = Algo::A2c;
    cfg.ssl_task = ssl::SslTask::Rotation;
    cfg.ssl_update_interval = 1;
    cfg.ssl_batch_size = 4;
    cfg.heldout_size = 8;
    cfg.eval_interval = 100000;
    cfg.total_steps = 20;  // horizon 10 -> budget 2 episodes
    cfg.seed = 11;
    cfg.a2c.actor_count = 1;
    cfg.a2c.rollout_length = 5;

    auto base = train_joint(EnvKind::GridMaze, env_cfg, net, cfg);
    CHECK(base.episodes_completed == 2);

    auto dr = train_domain_randomization(EnvKind::GridMaze, env_cfg, net, cfg);
    CHECK(dr.episodes_completed == 4);
}

TEST_CASE("deploy: frozen and offline_pad are parameter no-ops; pad moves theta_e only") {
    const auto net = tiny_net(policynet::ActionSpace::Continuous, 2);
    const auto env_cfg = tiny_env(6);
    PolicyParams params = policynet::build(net, 21);

    DeployConfig base;
    base.ssl_task = ssl::SslTask::Idm;
    base.test_batch_size = 4;
    base.episodes = 2;
    base.seed = 31;

    // Frozen: no update, parameters bit-identical.
    {
        DeployConfig cfg = base;
        cfg.mode = DeployMode::Frozen;
        auto res = deploy(params, EnvKind::PointReach, ShiftSpec::colors(5), env_cfg, cfg);
        CHECK(sets_equal(res.final_params.theta_e, params.theta_e));
        CHECK(sets_equal(res.final_params.theta_a, params.theta_a));
        CHECK(sets_equal(res.final_params.theta_s, params.theta_s));
        for (const auto& ep : res.episodes) {
            for (const auto& step : ep.steps) CHECK_FALSE(step.updated);
        }
    }
    // Blind: zero observations, no updates.
    {
        DeployConfig cfg = base;
        cfg.mode = DeployMode::Blind;
        auto res = deploy(params, EnvKind::PointReach, ShiftSpec::none(), env_cfg, cfg);
        CHECK(sets_equal(res.final_params.theta_e, params.theta_e));
        for (const auto& ep : res.episodes) {
            for (const auto& step : ep.steps) CHECK_FALSE(step.updated);
        }
    }
    // Offline PAD: updates happen but the episode ends where it started.
    {
        DeployConfig cfg = base;
        cfg.mode = DeployMode::OfflinePad;
        auto res = deploy(params, EnvKind::PointReach, ShiftSpec::colors(5), env_cfg, cfg);
        CHECK(sets_equal(res.final_params.theta_e, params.theta_e));
        CHECK(sets_equal(res.final_params.theta_s, params.theta_s));
        int updates = 0;
        for (const auto& step : res.episodes[0].steps) updates += step.updated ? 1 : 0;
        CHECK(updates == 5);  // IDM skips t=0
    }
    // PAD: theta_a bit-identical, theta_e adapted, one update per step after
    // the first transition exists.
    {
        DeployConfig cfg = base;
        cfg.mode = DeployMode::Pad;
        auto res = deploy(params, EnvKind::PointReach, ShiftSpec::colors(5), env_cfg, cfg);
        CHECK(sets_equal(res.final_params.theta_a, params.theta_a));
        CHECK_FALSE(sets_equal(res.final_params.theta_e, params.theta_e));
        CHECK_FALSE(sets_equal(res.final_params.theta_s, params.theta_s));
        int updates = 0;
        for (const auto& step : res.episodes[0].steps) updates += step.updated ? 1 : 0;
        CHECK(updates == 5);
        CHECK(res.episodes[0].steps.back().drift_theta_e > 0.0f);
        CHECK(res.episodes[0].steps.front().drift_theta_e == 0.0f);
    }
    // Fixed-head PAD: theta_s frozen too.
    {
        DeployConfig cfg = base;
        cfg.mode = DeployMode::PadFixedHead;
        auto res = deploy(params, EnvKind::PointReach, ShiftSpec::colors(5), env_cfg, cfg);
        CHECK(sets_equal(res.final_params.theta_a, params.theta_a));
        CHECK(sets_equal(res.final_params.theta_s, params.theta_s));
        CHECK_FALSE(sets_equal(res.final_params.theta_e, params.theta_e));
    }
    // Rotation task updates from t=0.
    {
        DeployConfig cfg = base;
        cfg.mode = DeployMode::Pad;
        cfg.ssl_task = ssl::SslTask::Rotation;
        auto res = deploy(params, EnvKind::PointReach, ShiftSpec::none(), env_cfg, cfg);
        int updates = 0;
        for (const auto& step : res.episodes[0].steps) updates += step.updated ? 1 : 0;
        CHECK(updates == 6);
    }
    CHECK_THROWS_AS(
        [&] {
            DeployConfig cfg = base;
            cfg.steps_per_update = 2;
            deploy(params, EnvKind::PointReach, ShiftSpec::none(), env_cfg, cfg);
        }(),
        ConfigError);
}

TEST_CASE("deploy: a single update replays bit-exactly outside the loop") {
    const auto net = tiny_net(policynet::ActionSpace::Continuous, 2);
    const auto env_cfg = tiny_env(2);
    PolicyParams params = policynet::build(net, 33);

    DeployConfig cfg;
    cfg.mode = DeployMode::Pad;
    cfg.ssl_task = ssl::SslTask::Idm;
    cfg.test_batch_size = 8;
    cfg.episodes = 1;
    cfg.seed = 77;
    auto res = deploy(params, EnvKind::PointReach, ShiftSpec::colors(9), env_cfg, cfg);
    REQUIRE(res.episodes[0].steps.size() == 2);
    CHECK(res.episodes[0].steps[1].updated);

    // Replay: reconstruct the environment, the action, the transition, the
    // batch rng, and apply the generic optimizer once.
    PolicyParams work = params.clone();
    AdamOptimizer opt(adapted_params(work, DeployMode::Pad), {cfg.test_lr, 0.9f, 0.999f, 1e-8f});
    Env env = Env::make(EnvKind::PointReach, ShiftSpec::colors(9), env_cfg,
                        Rng::derive(cfg.seed, 0xEA0));
    envs::Transition tr;
    tr.s_t = env.observation();
    {
        NoGradGuard guard;
        auto in = ssl::center_crop_tensor(env.observation(), net.crop_size);
        auto actions = policynet::act(policynet::encode(in, work), work, policynet::ActMode::Mean,
                                      nullptr);
        tr.a_t = Action{{actions[0]}, -1};
    }
    auto step_res = env.step(tr.a_t);
    tr.s_t1 = step_res.obs;

    Rng rng = deploy_update_rng(cfg.seed, 0, 1);
    ssl::SslBatch batch = ssl::make_deploy_batch(ssl::SslTask::Idm, &tr, &env.observation(),
                                                 cfg.test_batch_size, net.crop_size, rng);
    ssl_adapt_step(work, batch, opt);

    CHECK(sets_equal(work.theta_e, res.final_params.theta_e));
    CHECK(sets_equal(work.theta_s, res.final_params.theta_s));
    CHECK(sets_equal(work.theta_a, res.final_params.theta_a));
}

TEST_CASE("deploy: carried Adam state changes the adaptation trajectory") {
    const auto net = tiny_net(policynet::ActionSpace::Continuous, 2);
    const auto env_cfg = tiny_env(5);
    PolicyParams params = policynet::build(net, 41);

    // Build a carried optimizer with non-trivial moments.
    PolicyParams warm = params.clone();
    AdamOptimizer carried(adapted_params(warm, DeployMode::Pad), {1e-3f, 0.9f, 0.999f, 1e-8f});
    {
        Env env = Env::make(EnvKind::PointReach, ShiftSpec::none(), env_cfg, 1);
        envs::Transition tr;
        tr.s_t = env.observation();
        tr.a_t = Action::cont(0.4f, -0.1f);
        auto res = env.step(tr.a_t);
        tr.s_t1 = res.obs;
        Rng rng(9);
        auto batch = ssl::make_deploy_batch(ssl::SslTask::Idm, &tr, nullptr, 8, net.crop_size, rng);
        ssl_adapt_step(warm, batch, carried);
    }

    DeployConfig cfg;
    cfg.mode = DeployMode::Pad;
    cfg.test_batch_size = 4;
    cfg.episodes = 1;
    cfg.seed = 51;
    auto fresh = deploy(params, EnvKind::PointReach, ShiftSpec::colors(3), env_cfg, cfg);
    cfg.carry_adam = true;
    auto carried_res = deploy(params, EnvKind::PointReach, ShiftSpec::colors(3), env_cfg, cfg,
                              &carried);
    CHECK_FALSE(sets_equal(fresh.final_params.theta_e, carried_res.final_params.theta_e));
}

TEST_CASE("finetune: budget validation and collection leaves parameters intact") {
    const auto net = tiny_net(policynet::ActionSpace::Continuous, 2);
    const auto env_cfg = tiny_env(10);
    PolicyParams params = policynet::build(net, 61);

    TrainConfig tcfg = tiny_sac_train(61);
    tcfg.sac.batch_size = 8;
    CHECK_THROWS_AS(finetune_with_rewards(params, EnvKind::PointReach, ShiftSpec::none(), env_cfg,
                                          0, tcfg, 3),
                    ConfigError);

    auto tuned = finetune_with_rewards(params, EnvKind::PointReach, ShiftSpec::none(), env_cfg, 1,
                                       tcfg, 3);
    // Fine-tuning alters theta_e/theta_a but never theta_s; the input params
    // stay untouched.
    CHECK_FALSE(sets_equal(tuned.theta_a, params.theta_a));
    CHECK(sets_equal(tuned.theta_s, params.theta_s));
    auto rebuilt = policynet::build(net, 61);
    CHECK(sets_equal(params.theta_e, rebuilt.theta_e));
}
