#pragma once

#include <vector>

namespace pad::policynet {

enum class ActionSpace { Continuous, Discrete };

struct NetworkConfig {
    int frame_stack = 3;
    int render_size = 48;
    int crop_size = 40;
    int encoder_conv_layers = 4;
    int head_conv_layers = 2;
    int head_fc_layers = 2;
    int filters = 16;
    int hidden = 256;
    int action_dim = 2;
    ActionSpace action_space = ActionSpace::Continuous;
    float log_std_min = -10.0f;
    float log_std_max = 2.0f;
    // Downsampling depth of the encoder (kernel-2 stride-2 layers before the
    // size-preserving 3x3 stack).
    int encoder_halvings = 2;

    // CPU-trainable profile that keeps the architecture's structure.
    static NetworkConfig desk(ActionSpace space, int action_dim);
    // Full-size profiles: 100->84 crop, 32 filters, hidden 1024, 3 head
    // convs + 4 head fcs; 8 encoder convs for control, 6 for navigation.
    static NetworkConfig canonical_control(int action_dim);
    static NetworkConfig canonical_navigation(int action_dim);
};

struct ConvSpec {
    int kernel, stride, padding;
};

// Encoder geometry: two halving layers (kernel 2, stride 2) followed by
// size-preserving 3x3 layers. Throws ConfigError when sizes do not divide.
std::vector<ConvSpec> encoder_plan(const NetworkConfig& config);

// Spatial side length of the encoder output feature map.
int encoder_output_size(const NetworkConfig& config);

}  // namespace pad::policynet
