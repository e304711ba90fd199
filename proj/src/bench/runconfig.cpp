#include "pad/bench/runconfig.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pad/errors.hpp"

namespace pad::bench {

namespace {

const std::map<std::string, std::string>& default_values() {
    static const std::map<std::string, std::string> kDefaults = {
        {"env.kind", "pointreach"},
        {"env.render_size", "48"},
        {"env.frame_stack", "3"},
        {"env.horizon", "100"},
        {"env.action_repeat", "1"},
        {"env.gain", "0.05"},
        {"env.friction", "1"},
        {"env.init_distance", "0.6"},
        {"env.pellets", "3"},
        {"env.lanterns", "2"},
        {"net.profile", "desk"},
        {"net.crop_size", "40"},
        {"net.encoder_conv_layers", "4"},
        {"net.head_conv_layers", "2"},
        {"net.head_fc_layers", "2"},
        {"net.filters", "16"},
        {"net.hidden", "256"},
        {"net.log_std_min", "-10"},
        {"net.log_std_max", "2"},
        {"train.algo", "sac"},
        {"train.ssl", "idm"},
        {"train.ssl_coefficient", "1"},
        {"train.ssl_update_interval", "2"},
        {"train.ssl_batch_size", "32"},
        {"train.ssl_lr", "0.001"},
        {"train.total_steps", "6000"},
        {"train.init_steps", "400"},
        {"train.rl_update_interval", "1"},
        {"train.eval_interval", "2000"},
        {"train.eval_episodes", "3"},
        {"train.heldout_size", "128"},
        {"train.replay_capacity", "20000"},
        {"train.batch_size", "32"},
        {"train.actor_lr", "0.001"},
        {"train.critic_lr", "0.001"},
        {"train.alpha_lr", "0.0001"},
        {"train.discount", "0.99"},
        {"train.tau", "0.01"},
        {"train.target_update_interval", "2"},
        {"train.a2c_actor_count", "10"},
        {"train.a2c_rollout_length", "5"},
        {"train.a2c_value_coeff", "0.5"},
        {"train.a2c_entropy_coeff", "0.01"},
        {"train.a2c_lr", "0.0003"},
        {"train.dr_table_size", "100"},
        {"train.seed", "1"},
        {"deploy.mode", "pad"},
        {"deploy.test_batch_size", "32"},
        {"deploy.test_learning_rate", "0.001"},
        {"deploy.steps_per_update", "1"},
        {"deploy.episodes", "10"},
        {"deploy.horizon_multiplier", "1"},
        {"deploy.carry_adam", "false"},
        {"matrix.methods", "frozen,pad"},
        {"matrix.shifts", "none"},
        {"matrix.seeds", "5"},
        {"matrix.episodes", "10"},
    };
    return kDefaults;
}

}  // namespace

RunConfig RunConfig::defaults() {
    RunConfig c;
    c.values_ = default_values();
    return c;
}

RunConfig RunConfig::parse(const std::string& text) {
    RunConfig c = defaults();
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        const size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key=value");
        }
        c.set(line.substr(0, eq), line.substr(eq + 1));
    }
    return c;
}

RunConfig RunConfig::load_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse(buf.str());
}

std::string RunConfig::serialize() const {
    std::string out;
    for (const auto& [k, v] : values_) {
        out += k;
        out += '=';
        out += v;
        out += '\n';
    }
    return out;
}

const std::string& RunConfig::get(const std::string& key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
}

int RunConfig::get_int(const std::string& key) const {
    const std::string& v = get(key);
    int out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw ConfigError("config key '" + key + "' is not an integer: '" + v + "'");
    }
    return out;
}

float RunConfig::get_float(const std::string& key) const {
    const std::string& v = get(key);
    char* end = nullptr;
    const float out = std::strtof(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) {
        throw ConfigError("config key '" + key + "' is not a number: '" + v + "'");
    }
    return out;
}

bool RunConfig::get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw ConfigError("config key '" + key + "' is not a boolean: '" + v + "'");
}

uint64_t RunConfig::get_u64(const std::string& key) const {
    const std::string& v = get(key);
    uint64_t out = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc() || p != v.data() + v.size()) {
        throw ConfigError("config key '" + key + "' is not an unsigned integer: '" + v + "'");
    }
    return out;
}

void RunConfig::set(const std::string& key, const std::string& value) {
    if (default_values().find(key) == default_values().end()) {
        throw ConfigError("unknown config key '" + key + "'");
    }
    values_[key] = value;
}

envs::EnvKind RunConfig::env_kind() const { return envs::parse_env_kind(get("env.kind")); }

envs::EnvConfig RunConfig::env_config() const {
    envs::EnvConfig cfg;
    cfg.render_size = get_int("env.render_size");
    cfg.frame_stack = get_int("env.frame_stack");
    cfg.horizon = get_int("env.horizon");
    cfg.action_repeat = get_int("env.action_repeat");
    cfg.gain = get_float("env.gain");
    cfg.friction = get_float("env.friction");
    cfg.init_distance = get_float("env.init_distance");
    cfg.pellets = get_int("env.pellets");
    cfg.lanterns = get_int("env.lanterns");
    return cfg;
}

policynet::NetworkConfig RunConfig::network_config() const {
    const envs::EnvKind kind = env_kind();
    const bool continuous = kind == envs::EnvKind::PointReach;
    const int action_dim = continuous ? 2 : 4;
    const std::string profile = get("net.profile");
    if (profile == "canonical") {
        return continuous ? policynet::NetworkConfig::canonical_control(action_dim)
                          : policynet::NetworkConfig::canonical_navigation(action_dim);
    }
    if (profile != "desk") throw ConfigError("net.profile must be desk or canonical");
    policynet::NetworkConfig cfg;
    cfg.frame_stack = get_int("env.frame_stack");
    cfg.render_size = get_int("env.render_size");
    cfg.crop_size = get_int("net.crop_size");
    cfg.encoder_conv_layers = get_int("net.encoder_conv_layers");
    cfg.head_conv_layers = get_int("net.head_conv_layers");
    cfg.head_fc_layers = get_int("net.head_fc_layers");
    cfg.filters = get_int("net.filters");
    cfg.hidden = get_int("net.hidden");
    cfg.log_std_min = get_float("net.log_std_min");
    cfg.log_std_max = get_float("net.log_std_max");
    cfg.action_dim = action_dim;
    cfg.action_space =
        continuous ? policynet::ActionSpace::Continuous : policynet::ActionSpace::Discrete;
    return cfg;
}

padloop::TrainConfig RunConfig::train_config() const {
    padloop::TrainConfig cfg;
    const std::string algo = get("train.algo");
    if (algo == "sac") cfg.algo = padloop::Algo::Sac;
    else if (algo == "a2c") cfg.algo = padloop::Algo::A2c;
    else throw ConfigError("train.algo must be sac or a2c");

    const std::string task = get("train.ssl");
    if (task == "idm") cfg.ssl_task = ssl::SslTask::Idm;
    else if (task == "rotation") cfg.ssl_task = ssl::SslTask::Rotation;
    else if (task == "none") cfg.ssl_enabled = false;
    else throw ConfigError("train.ssl must be idm, rotation, or none");

    cfg.ssl_coefficient = get_float("train.ssl_coefficient");
    cfg.ssl_update_interval = get_int("train.ssl_update_interval");
    cfg.ssl_batch_size = get_int("train.ssl_batch_size");
    cfg.ssl_lr = get_float("train.ssl_lr");
    cfg.total_steps = get_int("train.total_steps");
    cfg.init_steps = get_int("train.init_steps");
    cfg.rl_update_interval = get_int("train.rl_update_interval");
    cfg.eval_interval = get_int("train.eval_interval");
    cfg.eval_episodes = get_int("train.eval_episodes");
    cfg.heldout_size = get_int("train.heldout_size");
    cfg.replay_capacity = get_int("train.replay_capacity");
    cfg.dr_table_size = get_int("train.dr_table_size");
    cfg.seed = get_u64("train.seed");

    cfg.sac.batch_size = get_int("train.batch_size");
    cfg.sac.actor_lr = get_float("train.actor_lr");
    cfg.sac.critic_lr = get_float("train.critic_lr");
    cfg.sac.alpha_lr = get_float("train.alpha_lr");
    cfg.sac.discount = get_float("train.discount");
    cfg.sac.tau = get_float("train.tau");
    cfg.sac.target_update_interval = get_int("train.target_update_interval");

    cfg.a2c.discount = get_float("train.discount");
    cfg.a2c.actor_count = get_int("train.a2c_actor_count");
    cfg.a2c.rollout_length = get_int("train.a2c_rollout_length");
    cfg.a2c.value_coeff = get_float("train.a2c_value_coeff");
    cfg.a2c.entropy_coeff = get_float("train.a2c_entropy_coeff");
    cfg.a2c.learning_rate = get_float("train.a2c_lr");
    return cfg;
}

padloop::DeployConfig RunConfig::deploy_config() const {
    padloop::DeployConfig cfg;
    cfg.mode = padloop::parse_deploy_mode(get("deploy.mode"));
    const std::string task = get("train.ssl");
    cfg.ssl_task = task == "rotation" ? ssl::SslTask::Rotation : ssl::SslTask::Idm;
    cfg.test_batch_size = get_int("deploy.test_batch_size");
    cfg.test_lr = get_float("deploy.test_learning_rate");
    cfg.steps_per_update = get_int("deploy.steps_per_update");
    cfg.episodes = get_int("deploy.episodes");
    cfg.horizon_multiplier = get_int("deploy.horizon_multiplier");
    cfg.carry_adam = get_bool("deploy.carry_adam");
    return cfg;
}

}  // namespace pad::bench
