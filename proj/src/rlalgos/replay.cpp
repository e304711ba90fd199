#include "pad/rlalgos/replay.hpp"

#include "pad/errors.hpp"

namespace pad::rlalgos {

ReplayBuffer::ReplayBuffer(int capacity) : capacity_(capacity) {
    if (capacity < 1) throw ConfigError("replay: capacity must be >= 1");
    ring_.reserve(static_cast<size_t>(capacity));
}

void ReplayBuffer::push(envs::Transition t) {
    if (size_ < capacity_) {
        ring_.push_back(std::move(t));
        ++size_;
        write_index_ = size_ % capacity_;
    } else {
        ring_[static_cast<size_t>(write_index_)] = std::move(t);
        write_index_ = (write_index_ + 1) % capacity_;
    }
}

std::vector<const envs::Transition*> ReplayBuffer::sample(int n, Rng& rng) const {
    if (size_ < 1) throw UsageError("replay: sample from empty buffer");
    if (n < 1) throw UsageError("replay: sample size must be >= 1");
    std::vector<const envs::Transition*> out(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        out[static_cast<size_t>(i)] = &ring_[static_cast<size_t>(rng.uniform_int(0, size_ - 1))];
    }
    return out;
}

const envs::Transition& ReplayBuffer::latest() const {
    if (size_ < 1) throw UsageError("replay: empty buffer has no latest transition");
    const int idx = size_ < capacity_ ? size_ - 1 : (write_index_ + capacity_ - 1) % capacity_;
    return ring_[static_cast<size_t>(idx)];
}

}  // namespace pad::rlalgos
