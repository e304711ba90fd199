#include "pad/numcore/tensor.hpp"

#include <cmath>
#include <unordered_set>

namespace pad::numcore {

namespace {
thread_local bool g_grad_enabled = true;
bool g_finite_checks = true;
}  // namespace

int shape_numel(const std::vector<int>& shape) {
    int n = 1;
    for (int d : shape) {
        if (d <= 0) throw DimensionError("tensor dimensions must be positive");
        n *= d;
    }
    return n;
}

Tensor::Tensor(std::vector<int> shape_, std::vector<float> data_, bool requires_grad_)
    : shape(std::move(shape_)), data(std::move(data_)), requires_grad(requires_grad_) {
    if (shape_numel(shape) != static_cast<int>(data.size())) {
        throw DimensionError("tensor data length does not match shape");
    }
}

TensorPtr Tensor::create(std::vector<int> shape, std::vector<float> data, bool requires_grad) {
    return std::make_shared<Tensor>(std::move(shape), std::move(data), requires_grad);
}

TensorPtr Tensor::zeros(std::vector<int> shape, bool requires_grad) {
    int n = shape_numel(shape);
    return std::make_shared<Tensor>(std::move(shape), std::vector<float>(static_cast<size_t>(n), 0.0f),
                                    requires_grad);
}

TensorPtr Tensor::full(std::vector<int> shape, float value, bool requires_grad) {
    int n = shape_numel(shape);
    return std::make_shared<Tensor>(std::move(shape), std::vector<float>(static_cast<size_t>(n), value),
                                    requires_grad);
}

TensorPtr Tensor::scalar(float value, bool requires_grad) {
    return create({1}, {value}, requires_grad);
}

int Tensor::numel() const { return static_cast<int>(data.size()); }

float Tensor::item() const {
    if (!is_scalar()) throw UsageError("item() on non-scalar tensor");
    return data[0];
}

void Tensor::ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), 0.0f);
}

void Tensor::zero_grad() {
    if (!grad.empty()) std::fill(grad.begin(), grad.end(), 0.0f);
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

bool finite_checks_enabled() { return g_finite_checks; }
void set_finite_checks(bool enabled) { g_finite_checks = enabled; }

void check_finite(const Tensor& t, const char* op_name) {
    if (!g_finite_checks) return;
    for (float v : t.data) {
        if (!std::isfinite(v)) {
            throw NumericError(std::string("non-finite value in output of ") + op_name);
        }
    }
}

void backward(const TensorPtr& loss) {
    if (!loss) throw UsageError("backward on null tensor");
    if (!loss->is_scalar()) throw UsageError("backward requires a scalar loss");

    // Iterative post-order DFS; graph is acyclic by construction.
    std::vector<Tensor*> topo;
    std::unordered_set<Tensor*> visited;
    std::vector<std::pair<TensorPtr, size_t>> stack;
    stack.emplace_back(loss, 0);
    visited.insert(loss.get());
    while (!stack.empty()) {
        auto& [node, idx] = stack.back();
        if (idx < node->parents.size()) {
            TensorPtr parent = node->parents[idx++];
            if (visited.insert(parent.get()).second) {
                stack.emplace_back(std::move(parent), 0);
            }
        } else {
            topo.push_back(node.get());
            stack.pop_back();
        }
    }

    for (Tensor* t : topo) {
        if (t->requires_grad) t->ensure_grad();
    }
    loss->ensure_grad();
    loss->grad[0] += 1.0f;

    for (auto it = topo.rbegin(); it != topo.rend(); ++it) {
        Tensor* t = *it;
        if (t->backprop && t->has_grad()) t->backprop(*t);
    }
}

}  // namespace pad::numcore
