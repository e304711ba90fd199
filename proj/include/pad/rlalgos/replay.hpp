#pragma once

#include <vector>

#include "pad/envs/env.hpp"
#include "pad/rng.hpp"

namespace pad::rlalgos {

// Uniform-sampling ring buffer with FIFO eviction. Observations inside the
// stored transitions share frames, so consecutive pushes do not duplicate
// pixels.
class ReplayBuffer {
public:
    explicit ReplayBuffer(int capacity);

    void push(envs::Transition t);
    // Uniform with replacement; pointers stay valid until the next push.
    std::vector<const envs::Transition*> sample(int n, Rng& rng) const;
    const envs::Transition& latest() const;

    int size() const { return size_; }
    int capacity() const { return capacity_; }

private:
    std::vector<envs::Transition> ring_;
    int capacity_ = 0;
    int size_ = 0;
    int write_index_ = 0;
};

}  // namespace pad::rlalgos
