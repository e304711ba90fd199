#pragma once

#include <vector>

#include "pad/numcore/tensor.hpp"

namespace pad::numcore {

// Layers. conv2d is cross-correlation (no kernel flip); output size
// (H + 2*padding - kH) / stride + 1 must be an exact positive integer.
TensorPtr conv2d(const TensorPtr& input, const TensorPtr& kernel, const TensorPtr& bias,
                 int stride, int padding);
TensorPtr dense(const TensorPtr& input, const TensorPtr& weight, const TensorPtr& bias);

// Activations.
TensorPtr relu(const TensorPtr& x);
TensorPtr tanh_op(const TensorPtr& x);
TensorPtr exp_op(const TensorPtr& x);
TensorPtr log_op(const TensorPtr& x);
TensorPtr softmax(const TensorPtr& x, int axis);
TensorPtr log_softmax(const TensorPtr& x, int axis);

// Elementwise (shapes must match exactly; no broadcasting).
TensorPtr add(const TensorPtr& a, const TensorPtr& b);
TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
TensorPtr min2(const TensorPtr& a, const TensorPtr& b);
TensorPtr neg(const TensorPtr& x);
// a * x + b with scalar constants.
TensorPtr affine(const TensorPtr& x, float scale, float shift);
// x * s where s is a single-element tensor (gradient reaches both).
TensorPtr scale_by(const TensorPtr& x, const TensorPtr& s);

// Reductions and shape ops.
TensorPtr sum_all(const TensorPtr& x);
TensorPtr mean_all(const TensorPtr& x);
TensorPtr row_sum(const TensorPtr& x);                       // [N,D] -> [N,1]
TensorPtr reshape(const TensorPtr& x, std::vector<int> shape);
TensorPtr flatten2d(const TensorPtr& x);                     // [N,...] -> [N,rest]
TensorPtr concat_axis1(const TensorPtr& a, const TensorPtr& b);
TensorPtr slice_axis1(const TensorPtr& x, int start, int len);
// Picks x[i, idx[i]] -> [N,1].
TensorPtr gather_cols(const TensorPtr& x, const std::vector<int>& idx);
TensorPtr detach(const TensorPtr& x);

// Losses (mean-reduced scalars).
TensorPtr mse_loss(const TensorPtr& pred, const TensorPtr& target);
TensorPtr cross_entropy_logits(const TensorPtr& logits, const std::vector<int>& labels);
// Mean over rows of the softmax entropy -sum p log p.
TensorPtr entropy_of_logits(const TensorPtr& logits);

}  // namespace pad::numcore
