#include "pad/numcore/adam.hpp"

#include <cmath>

namespace pad::numcore {

AdamOptimizer::AdamOptimizer(std::vector<TensorPtr> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
    if (config_.learning_rate <= 0.0f) throw ConfigError("adam: learning rate must be positive");
    if (config_.beta1 <= 0.0f || config_.beta1 >= 1.0f || config_.beta2 <= 0.0f ||
        config_.beta2 >= 1.0f) {
        throw ConfigError("adam: betas must lie in (0,1)");
    }
    m_.reserve(params_.size());
    v_.reserve(params_.size());
    for (const auto& p : params_) {
        m_.emplace_back(p->data.size(), 0.0f);
        v_.emplace_back(p->data.size(), 0.0f);
    }
}

void AdamOptimizer::step() {
    for (const auto& p : params_) {
        if (!p->has_grad()) throw UsageError("adam: parameter has no populated grad");
    }
    ++step_count_;
    const float b1 = config_.beta1;
    const float b2 = config_.beta2;
    const float bc1 = 1.0f - std::pow(b1, static_cast<float>(step_count_));
    const float bc2 = 1.0f - std::pow(b2, static_cast<float>(step_count_));
    for (size_t pi = 0; pi < params_.size(); ++pi) {
        Tensor& p = *params_[pi];
        std::vector<float>& m = m_[pi];
        std::vector<float>& v = v_[pi];
        for (size_t i = 0; i < p.data.size(); ++i) {
            const float g = p.grad[i];
            m[i] = b1 * m[i] + (1.0f - b1) * g;
            v[i] = b2 * v[i] + (1.0f - b2) * g * g;
            const float m_hat = m[i] / bc1;
            const float v_hat = v[i] / bc2;
            p.data[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
            if (!std::isfinite(p.data[i])) throw NumericError("adam: non-finite parameter update");
        }
        p.zero_grad();
    }
}

void ensure_grads(const std::vector<TensorPtr>& params) {
    for (const auto& p : params) p->ensure_grad();
}

void zero_grads(const std::vector<TensorPtr>& params) {
    for (const auto& p : params) p->zero_grad();
}

void AdamOptimizer::copy_state_from(const AdamOptimizer& other) {
    if (other.m_.size() != m_.size()) throw UsageError("adam: state shape mismatch");
    for (size_t i = 0; i < m_.size(); ++i) {
        if (other.m_[i].size() != m_[i].size()) throw UsageError("adam: state shape mismatch");
        m_[i] = other.m_[i];
        v_[i] = other.v_[i];
    }
    step_count_ = other.step_count_;
}

}  // namespace pad::numcore
