#pragma once

#include <map>
#include <string>

#include "pad/envs/env.hpp"
#include "pad/padloop/deploy.hpp"
#include "pad/padloop/train.hpp"
#include "pad/policynet/config.hpp"

namespace pad::bench {

// Flat key=value configuration with dotted sections (env.*, net.*, train.*,
// deploy.*, matrix.*). Unknown keys are rejected by name; serialization is
// canonical (sorted keys), so parse(serialize(c)) == c.
class RunConfig {
public:
    static RunConfig defaults();
    static RunConfig parse(const std::string& text);
    static RunConfig load_file(const std::string& path);

    std::string serialize() const;

    const std::string& get(const std::string& key) const;
    int get_int(const std::string& key) const;
    float get_float(const std::string& key) const;
    bool get_bool(const std::string& key) const;
    uint64_t get_u64(const std::string& key) const;

    void set(const std::string& key, const std::string& value);

    bool operator==(const RunConfig& other) const { return values_ == other.values_; }

    // Typed views assembled from the key set.
    envs::EnvKind env_kind() const;
    envs::EnvConfig env_config() const;
    policynet::NetworkConfig network_config() const;
    padloop::TrainConfig train_config() const;
    padloop::DeployConfig deploy_config() const;

private:
    std::map<std::string, std::string> values_;
};

}  // namespace pad::bench
