#pragma once

#include <string>
#include <vector>

#include "pad/numcore/tensor.hpp"

namespace pad::numcore {

struct AdamConfig {
    float learning_rate = 1e-3f;
    float beta1 = 0.9f;
    float beta2 = 0.999f;
    float epsilon = 1e-8f;
};

// Standard Adam with bias correction over a fixed parameter list. Each
// optimizer instance keeps its own moment estimates, so the same tensor may
// be driven by several optimizers with independent state (encoder under both
// the critic and the self-supervised objective).
class AdamOptimizer {
public:
    AdamOptimizer() = default;
    AdamOptimizer(std::vector<TensorPtr> params, AdamConfig config);

    // Applies one update from the accumulated grads, then zeroes them.
    // Every parameter must carry a populated grad.
    void step();

    int64_t step_count() const { return step_count_; }
    const AdamConfig& config() const { return config_; }
    const std::vector<TensorPtr>& params() const { return params_; }

    // Copies moment estimates and step count from another optimizer whose
    // parameter list has identical shapes (used when deployment carries the
    // training-time state instead of starting fresh).
    void copy_state_from(const AdamOptimizer& other);

private:
    std::vector<TensorPtr> params_;
    AdamConfig config_;
    std::vector<std::vector<float>> m_;
    std::vector<std::vector<float>> v_;
    int64_t step_count_ = 0;
};

// Allocates zeroed grads where absent (parameters that legitimately receive
// no gradient from a loss still need populated grads before an Adam step).
void ensure_grads(const std::vector<TensorPtr>& params);

// Clears stray gradient accumulation (e.g. critic grads picked up during the
// actor's backward pass).
void zero_grads(const std::vector<TensorPtr>& params);

}  // namespace pad::numcore
