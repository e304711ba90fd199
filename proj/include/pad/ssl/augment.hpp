#pragma once

#include <vector>

#include "pad/envs/env.hpp"
#include "pad/numcore/tensor.hpp"
#include "pad/rng.hpp"

namespace pad::ssl {

using envs::Frame;
using envs::Observation;

enum class CropPolicy { Random, Center };

struct CropRule {
    int source_size = 48;
    int target_size = 40;
    CropPolicy policy = CropPolicy::Random;
};

// Time-consistent crop: one offset pair per observation, shared by all k
// frames of the stack. Random policy draws offsets from rng.
Observation random_crop(const Observation& obs, const CropRule& rule, Rng& rng);

// Deterministic centered window with floor((source-target)/2) offsets.
Observation center_crop(const Observation& obs, int target_size);

// Crop at explicit offsets (exposed for the marker-pixel tests).
Observation crop_at(const Observation& obs, int target_size, int off_x, int off_y);

// Exact quarter-turn rotation (counter-clockwise), square frames only.
Frame rotate_frame(const Frame& frame, int size, int quarter_turns);
Observation rotate(const Observation& obs, int quarter_turns);

// Network-input helpers: [N, k*3, T, T] tensors from cropped observations.
numcore::TensorPtr crop_batch_tensor(const std::vector<const Observation*>& obs, int crop_size,
                                     Rng& rng);
numcore::TensorPtr center_crop_tensor(const Observation& obs, int crop_size);

}  // namespace pad::ssl
