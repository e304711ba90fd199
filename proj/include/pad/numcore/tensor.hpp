#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "pad/errors.hpp"

namespace pad::numcore {

class Tensor;
using TensorPtr = std::shared_ptr<Tensor>;

// Dense float32 tensor, row-major. Doubles as a node in the reverse-mode
// graph: ops fill `parents` and `backprop` when gradients are being tracked.
// Once a tensor has been fed to an op its data must not be mutated; grad is
// the only field written afterwards.
class Tensor {
public:
    std::vector<int> shape;
    std::vector<float> data;
    bool requires_grad = false;
    std::vector<float> grad;  // allocated lazily by backward()

    std::vector<TensorPtr> parents;
    std::function<void(Tensor&)> backprop;

    Tensor() = default;
    Tensor(std::vector<int> shape_, std::vector<float> data_, bool requires_grad_ = false);

    static TensorPtr create(std::vector<int> shape, std::vector<float> data,
                            bool requires_grad = false);
    static TensorPtr zeros(std::vector<int> shape, bool requires_grad = false);
    static TensorPtr full(std::vector<int> shape, float value, bool requires_grad = false);
    static TensorPtr scalar(float value, bool requires_grad = false);

    int numel() const;
    int dim(int i) const { return shape[static_cast<size_t>(i)]; }
    int rank() const { return static_cast<int>(shape.size()); }
    bool is_scalar() const { return numel() == 1; }
    float item() const;

    // Allocates (zeroed) grad storage if absent.
    void ensure_grad();
    void zero_grad();
    bool has_grad() const { return !grad.empty(); }
};

int shape_numel(const std::vector<int>& shape);

// Global toggle for graph construction. Forward passes that never need
// gradients (acting, target networks, evaluation) run inside a NoGradGuard
// and build no graph.
bool grad_enabled();

class NoGradGuard {
public:
    NoGradGuard();
    ~NoGradGuard();
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool previous_;
};

// Output finiteness checks (NaN/Inf rejection). On by default.
bool finite_checks_enabled();
void set_finite_checks(bool enabled);

// Throws NumericError if any element is non-finite (when checks are on).
void check_finite(const Tensor& t, const char* op_name);

// Reverse-mode sweep from a scalar loss. Gradients accumulate (sum) into
// every requires_grad tensor reachable through parent edges; reachable
// tensors that receive no contribution end up with zero grad.
void backward(const TensorPtr& loss);

}  // namespace pad::numcore
