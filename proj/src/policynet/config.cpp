#include "pad/policynet/config.hpp"

#include "pad/errors.hpp"

namespace pad::policynet {

NetworkConfig NetworkConfig::desk(ActionSpace space, int action_dim) {
    NetworkConfig c;
    c.action_space = space;
    c.action_dim = action_dim;
    return c;
}

NetworkConfig NetworkConfig::canonical_control(int action_dim) {
    NetworkConfig c;
    c.render_size = 100;
    c.crop_size = 84;
    c.encoder_conv_layers = 8;
    c.head_conv_layers = 3;
    c.head_fc_layers = 4;
    c.filters = 32;
    c.hidden = 1024;
    c.action_space = ActionSpace::Continuous;
    c.action_dim = action_dim;
    return c;
}

NetworkConfig NetworkConfig::canonical_navigation(int action_dim) {
    NetworkConfig c = canonical_control(action_dim);
    c.encoder_conv_layers = 6;
    c.action_space = ActionSpace::Discrete;
    return c;
}

std::vector<ConvSpec> encoder_plan(const NetworkConfig& config) {
    if (config.encoder_conv_layers < 1) throw ConfigError("network: encoder needs >= 1 conv layer");
    if (config.crop_size >= config.render_size) {
        throw ConfigError("network: crop_size must be smaller than render_size");
    }
    std::vector<ConvSpec> plan;
    int size = config.crop_size;
    // Halve while the size stays even, then preserve with 3x3 layers.
    int halvings = 0;
    while (halvings < std::min(config.encoder_halvings, config.encoder_conv_layers) &&
           size % 2 == 0 && size >= 4) {
        plan.push_back({2, 2, 0});
        size /= 2;
        ++halvings;
    }
    if (halvings == 0) throw ConfigError("network: crop size does not halve cleanly");
    if (size < 2) throw ConfigError("network: encoder output collapses");
    for (int i = halvings; i < config.encoder_conv_layers; ++i) plan.push_back({3, 1, 1});
    return plan;
}

int encoder_output_size(const NetworkConfig& config) {
    int size = config.crop_size;
    for (const ConvSpec& spec : encoder_plan(config)) {
        const int num = size + 2 * spec.padding - spec.kernel;
        if (num < 0 || num % spec.stride != 0) throw ConfigError("network: conv arithmetic failed");
        size = num / spec.stride + 1;
    }
    return size;
}

}  // namespace pad::policynet
