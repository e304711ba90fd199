#include "pad/numcore/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <utility>

namespace pad::numcore {

namespace {

TensorPtr make_node(std::vector<int> shape, std::vector<float> data,
                    std::vector<TensorPtr> parents, std::function<void(Tensor&)> fn) {
    auto out = Tensor::create(std::move(shape), std::move(data));
    if (grad_enabled()) {
        bool any = false;
        for (const auto& p : parents) {
            if (p->requires_grad) {
                any = true;
                break;
            }
        }
        if (any) {
            out->requires_grad = true;
            out->parents = std::move(parents);
            out->backprop = std::move(fn);
        }
    }
    return out;
}

void accumulate(const TensorPtr& t, size_t i, float v) {
    t->ensure_grad();
    t->grad[i] += v;
}

// Output positions ow in [lo,hi) with 0 <= ow*stride + base < limit.
void valid_range(int base, int stride, int limit, int out_size, int& lo, int& hi) {
    lo = base >= 0 ? 0 : (-base + stride - 1) / stride;
    const int max_excl = limit - base;
    hi = max_excl <= 0 ? 0 : (max_excl + stride - 1) / stride;
    hi = std::min(hi, out_size);
    lo = std::min(lo, hi);
}

void require_same_shape(const TensorPtr& a, const TensorPtr& b, const char* op) {
    if (a->shape != b->shape) throw DimensionError(std::string(op) + ": shape mismatch");
}

struct AxisView {
    int outer, n, inner;
};

AxisView axis_view(const TensorPtr& x, int axis) {
    if (axis < 0 || axis >= x->rank()) throw DimensionError("axis out of range");
    AxisView v{1, x->shape[static_cast<size_t>(axis)], 1};
    for (int i = 0; i < axis; ++i) v.outer *= x->dim(i);
    for (int i = axis + 1; i < x->rank(); ++i) v.inner *= x->dim(i);
    return v;
}

}  // namespace

namespace {

struct ConvGeom {
    int N, C, H, W, F, kH, kW, Ho, Wo, stride, padding;
    int patch() const { return C * kH * kW; }
    int cols() const { return Ho * Wo; }
};

// Gathers one image into [C*kH*kW, Ho*Wo] layout; out-of-range taps are zero.
// Keeps the multiply loops contiguous for both strides.
void im2col(const float* in_img, const ConvGeom& g, float* col) {
    for (int c = 0; c < g.C; ++c) {
        const float* in_c = in_img + static_cast<size_t>(c) * g.H * g.W;
        for (int kh = 0; kh < g.kH; ++kh) {
            const int ih0 = kh - g.padding;
            int oh_lo, oh_hi;
            valid_range(ih0, g.stride, g.H, g.Ho, oh_lo, oh_hi);
            for (int kw = 0; kw < g.kW; ++kw) {
                const int iw0 = kw - g.padding;
                int ow_lo, ow_hi;
                valid_range(iw0, g.stride, g.W, g.Wo, ow_lo, ow_hi);
                float* row = col + static_cast<size_t>((c * g.kH + kh) * g.kW + kw) * g.cols();
                std::fill(row, row + g.cols(), 0.0f);
                for (int oh = oh_lo; oh < oh_hi; ++oh) {
                    const float* src = in_c + static_cast<size_t>(oh * g.stride + ih0) * g.W + iw0;
                    float* dst = row + static_cast<size_t>(oh) * g.Wo;
                    if (g.stride == 1) {
                        std::copy(src + ow_lo, src + ow_hi, dst + ow_lo);
                    } else {
                        for (int ow = ow_lo; ow < ow_hi; ++ow) {
                            dst[ow] = src[static_cast<size_t>(ow) * g.stride];
                        }
                    }
                }
            }
        }
    }
}

// Scatter-adds a [C*kH*kW, Ho*Wo] gradient back onto the input image.
void col2im_add(const float* col, const ConvGeom& g, float* gin_img) {
    for (int c = 0; c < g.C; ++c) {
        float* gin_c = gin_img + static_cast<size_t>(c) * g.H * g.W;
        for (int kh = 0; kh < g.kH; ++kh) {
            const int ih0 = kh - g.padding;
            int oh_lo, oh_hi;
            valid_range(ih0, g.stride, g.H, g.Ho, oh_lo, oh_hi);
            for (int kw = 0; kw < g.kW; ++kw) {
                const int iw0 = kw - g.padding;
                int ow_lo, ow_hi;
                valid_range(iw0, g.stride, g.W, g.Wo, ow_lo, ow_hi);
                const float* row = col + static_cast<size_t>((c * g.kH + kh) * g.kW + kw) * g.cols();
                for (int oh = oh_lo; oh < oh_hi; ++oh) {
                    float* dst = gin_c + static_cast<size_t>(oh * g.stride + ih0) * g.W + iw0;
                    const float* src = row + static_cast<size_t>(oh) * g.Wo;
                    for (int ow = ow_lo; ow < ow_hi; ++ow) {
                        dst[static_cast<size_t>(ow) * g.stride] += src[ow];
                    }
                }
            }
        }
    }
}

}  // namespace

TensorPtr conv2d(const TensorPtr& input, const TensorPtr& kernel, const TensorPtr& bias,
                 int stride, int padding) {
    if (input->rank() != 4 || kernel->rank() != 4) {
        throw DimensionError("conv2d: input and kernel must be rank 4");
    }
    const int N = input->dim(0), C = input->dim(1), H = input->dim(2), W = input->dim(3);
    const int F = kernel->dim(0), kC = kernel->dim(1), kH = kernel->dim(2), kW = kernel->dim(3);
    if (C != kC) throw DimensionError("conv2d: channel mismatch between input and kernel");
    if (bias->numel() != F) throw DimensionError("conv2d: bias length must equal filter count");
    if (stride < 1) throw ConfigError("conv2d: stride must be positive");
    if (padding < 0) throw ConfigError("conv2d: padding must be non-negative");
    const int hNum = H + 2 * padding - kH;
    const int wNum = W + 2 * padding - kW;
    if (hNum < 0 || wNum < 0 || hNum % stride != 0 || wNum % stride != 0) {
        throw ConfigError("conv2d: output size is not a positive integer");
    }
    const ConvGeom geom{N, C, H, W, F, kH, kW, hNum / stride + 1, wNum / stride + 1, stride, padding};
    const int P = geom.patch();
    const int S = geom.cols();

    // Column buffers cached for the backward pass.
    auto cols = std::make_shared<std::vector<float>>(static_cast<size_t>(N) * P * S);
    std::vector<float> out(static_cast<size_t>(N) * F * S);
    const float* wv = kernel->data.data();
    const float* bv = bias->data.data();

    for (int n = 0; n < N; ++n) {
        float* col = cols->data() + static_cast<size_t>(n) * P * S;
        im2col(input->data.data() + static_cast<size_t>(n) * C * H * W, geom, col);
        for (int f = 0; f < F; ++f) {
            float* out_f = out.data() + (static_cast<size_t>(n) * F + f) * S;
            std::fill(out_f, out_f + S, bv[f]);
            const float* w_f = wv + static_cast<size_t>(f) * P;
            int j = 0;
            for (; j + 4 <= P; j += 4) {
                const float k0 = w_f[j], k1 = w_f[j + 1], k2 = w_f[j + 2], k3 = w_f[j + 3];
                const float* r0 = col + static_cast<size_t>(j) * S;
                const float* r1 = r0 + S;
                const float* r2 = r1 + S;
                const float* r3 = r2 + S;
                for (int i = 0; i < S; ++i) {
                    out_f[i] += k0 * r0[i] + k1 * r1[i] + k2 * r2[i] + k3 * r3[i];
                }
            }
            for (; j < P; ++j) {
                const float k = w_f[j];
                const float* row = col + static_cast<size_t>(j) * S;
                for (int i = 0; i < S; ++i) out_f[i] += k * row[i];
            }
        }
    }

    TensorPtr xin = input, ker = kernel, b = bias;
    auto node = make_node(
        {N, F, geom.Ho, geom.Wo}, std::move(out), {input, kernel, bias},
        [xin, ker, b, geom, P, S, cols](Tensor& self) {
            const int N = geom.N, F = geom.F;
            const float* g = self.grad.data();
            if (b->requires_grad) {
                b->ensure_grad();
                for (int n = 0; n < N; ++n) {
                    for (int f = 0; f < F; ++f) {
                        const float* g_f = g + (static_cast<size_t>(n) * F + f) * S;
                        float acc = 0.0f;
                        for (int i = 0; i < S; ++i) acc += g_f[i];
                        b->grad[static_cast<size_t>(f)] += acc;
                    }
                }
            }
            if (ker->requires_grad) {
                ker->ensure_grad();
                for (int n = 0; n < N; ++n) {
                    const float* col = cols->data() + static_cast<size_t>(n) * P * S;
                    for (int f = 0; f < F; ++f) {
                        const float* g_f = g + (static_cast<size_t>(n) * F + f) * S;
                        float* gw_f = ker->grad.data() + static_cast<size_t>(f) * P;
                        int j = 0;
                        for (; j + 4 <= P; j += 4) {
                            const float* r0 = col + static_cast<size_t>(j) * S;
                            const float* r1 = r0 + S;
                            const float* r2 = r1 + S;
                            const float* r3 = r2 + S;
                            float a0 = 0.0f, a1 = 0.0f, a2 = 0.0f, a3 = 0.0f;
                            for (int i = 0; i < S; ++i) {
                                const float gi = g_f[i];
                                a0 += gi * r0[i];
                                a1 += gi * r1[i];
                                a2 += gi * r2[i];
                                a3 += gi * r3[i];
                            }
                            gw_f[j] += a0;
                            gw_f[j + 1] += a1;
                            gw_f[j + 2] += a2;
                            gw_f[j + 3] += a3;
                        }
                        for (; j < P; ++j) {
                            const float* row = col + static_cast<size_t>(j) * S;
                            float acc = 0.0f;
                            for (int i = 0; i < S; ++i) acc += g_f[i] * row[i];
                            gw_f[j] += acc;
                        }
                    }
                }
            }
            if (xin->requires_grad) {
                xin->ensure_grad();
                std::vector<float> dcol(static_cast<size_t>(P) * S);
                const float* wv = ker->data.data();
                for (int n = 0; n < N; ++n) {
                    std::fill(dcol.begin(), dcol.end(), 0.0f);
                    const float* g_n = g + static_cast<size_t>(n) * F * S;
                    for (int j = 0; j < P; ++j) {
                        float* row = dcol.data() + static_cast<size_t>(j) * S;
                        int f = 0;
                        for (; f + 4 <= F; f += 4) {
                            const float k0 = wv[static_cast<size_t>(f) * P + j];
                            const float k1 = wv[static_cast<size_t>(f + 1) * P + j];
                            const float k2 = wv[static_cast<size_t>(f + 2) * P + j];
                            const float k3 = wv[static_cast<size_t>(f + 3) * P + j];
                            const float* g0 = g_n + static_cast<size_t>(f) * S;
                            const float* g1 = g0 + S;
                            const float* g2 = g1 + S;
                            const float* g3 = g2 + S;
                            for (int i = 0; i < S; ++i) {
                                row[i] += k0 * g0[i] + k1 * g1[i] + k2 * g2[i] + k3 * g3[i];
                            }
                        }
                        for (; f < F; ++f) {
                            const float k = wv[static_cast<size_t>(f) * P + j];
                            const float* g_f = g_n + static_cast<size_t>(f) * S;
                            for (int i = 0; i < S; ++i) row[i] += k * g_f[i];
                        }
                    }
                    col2im_add(dcol.data(), geom,
                               xin->grad.data() + static_cast<size_t>(n) * geom.C * geom.H * geom.W);
                }
            }
        });
    check_finite(*node, "conv2d");
    return node;
}

TensorPtr dense(const TensorPtr& input, const TensorPtr& weight, const TensorPtr& bias) {
    if (input->rank() != 2 || weight->rank() != 2) {
        throw DimensionError("dense: input and weight must be rank 2");
    }
    const int N = input->dim(0), D = input->dim(1);
    const int wD = weight->dim(0), M = weight->dim(1);
    if (D != wD) throw DimensionError("dense: inner dimensions disagree");
    if (bias->numel() != M) throw DimensionError("dense: bias length must equal output width");

    std::vector<float> out(static_cast<size_t>(N) * M);
    const float* in = input->data.data();
    const float* w = weight->data.data();
    for (int n = 0; n < N; ++n) {
        float* out_row = out.data() + static_cast<size_t>(n) * M;
        std::copy(bias->data.begin(), bias->data.end(), out_row);
        const float* in_row = in + static_cast<size_t>(n) * D;
        for (int d = 0; d < D; ++d) {
            const float v = in_row[d];
            const float* w_row = w + static_cast<size_t>(d) * M;
            for (int m = 0; m < M; ++m) out_row[m] += v * w_row[m];
        }
    }

    TensorPtr xin = input, wt = weight, b = bias;
    auto node = make_node({N, M}, std::move(out), {input, weight, bias},
                          [xin, wt, b, N, D, M](Tensor& self) {
                              const float* g = self.grad.data();
                              const float* in = xin->data.data();
                              const float* w = wt->data.data();
                              if (b->requires_grad) {
                                  b->ensure_grad();
                                  for (int n = 0; n < N; ++n) {
                                      const float* g_row = g + static_cast<size_t>(n) * M;
                                      for (int m = 0; m < M; ++m) b->grad[static_cast<size_t>(m)] += g_row[m];
                                  }
                              }
                              if (wt->requires_grad) {
                                  wt->ensure_grad();
                                  for (int n = 0; n < N; ++n) {
                                      const float* in_row = in + static_cast<size_t>(n) * D;
                                      const float* g_row = g + static_cast<size_t>(n) * M;
                                      for (int d = 0; d < D; ++d) {
                                          const float v = in_row[d];
                                          float* gw_row = wt->grad.data() + static_cast<size_t>(d) * M;
                                          for (int m = 0; m < M; ++m) gw_row[m] += v * g_row[m];
                                      }
                                  }
                              }
                              if (xin->requires_grad) {
                                  xin->ensure_grad();
                                  for (int n = 0; n < N; ++n) {
                                      const float* g_row = g + static_cast<size_t>(n) * M;
                                      float* gi_row = xin->grad.data() + static_cast<size_t>(n) * D;
                                      for (int d = 0; d < D; ++d) {
                                          const float* w_row = w + static_cast<size_t>(d) * M;
                                          float acc = 0.0f;
                                          for (int m = 0; m < M; ++m) acc += g_row[m] * w_row[m];
                                          gi_row[d] += acc;
                                      }
                                  }
                              }
                          });
    check_finite(*node, "dense");
    return node;
}

TensorPtr relu(const TensorPtr& x) {
    std::vector<float> out(x->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = x->data[i] > 0.0f ? x->data[i] : 0.0f;
    TensorPtr xin = x;
    auto node = make_node(x->shape, std::move(out), {x}, [xin](Tensor& self) {
        if (!xin->requires_grad) return;
        xin->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            if (xin->data[i] > 0.0f) xin->grad[i] += self.grad[i];
        }
    });
    check_finite(*node, "relu");
    return node;
}

TensorPtr tanh_op(const TensorPtr& x) {
    std::vector<float> out(x->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x->data[i]);
    TensorPtr xin = x;
    auto node = make_node(x->shape, std::move(out), {x}, [xin](Tensor& self) {
        if (!xin->requires_grad) return;
        xin->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) {
            const float y = self.data[i];
            xin->grad[i] += self.grad[i] * (1.0f - y * y);
        }
    });
    check_finite(*node, "tanh");
    return node;
}

TensorPtr exp_op(const TensorPtr& x) {
    std::vector<float> out(x->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::exp(x->data[i]);
    TensorPtr xin = x;
    auto node = make_node(x->shape, std::move(out), {x}, [xin](Tensor& self) {
        if (!xin->requires_grad) return;
        xin->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) xin->grad[i] += self.grad[i] * self.data[i];
    });
    check_finite(*node, "exp");
    return node;
}

TensorPtr log_op(const TensorPtr& x) {
    std::vector<float> out(x->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::log(x->data[i]);
    TensorPtr xin = x;
    auto node = make_node(x->shape, std::move(out), {x}, [xin](Tensor& self) {
        if (!xin->requires_grad) return;
        xin->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) xin->grad[i] += self.grad[i] / xin->data[i];
    });
    check_finite(*node, "log");
    return node;
}

TensorPtr softmax(const TensorPtr& x, int axis) {
    const AxisView v = axis_view(x, axis);
    std::vector<float> out(x->data.size());
    for (int o = 0; o < v.outer; ++o) {
        for (int i = 0; i < v.inner; ++i) {
            const size_t base = static_cast<size_t>(o) * v.n * v.inner + i;
            float mx = -std::numeric_limits<float>::infinity();
            for (int j = 0; j < v.n; ++j) mx = std::max(mx, x->data[base + static_cast<size_t>(j) * v.inner]);
            float denom = 0.0f;
            for (int j = 0; j < v.n; ++j) {
                const float e = std::exp(x->data[base + static_cast<size_t>(j) * v.inner] - mx);
                out[base + static_cast<size_t>(j) * v.inner] = e;
                denom += e;
            }
            for (int j = 0; j < v.n; ++j) out[base + static_cast<size_t>(j) * v.inner] /= denom;
        }
    }
    TensorPtr xin = x;
    auto node = make_node(x->shape, std::move(out), {x}, [xin, v](Tensor& self) {
        if (!xin->requires_grad) return;
        xin->ensure_grad();
        for (int o = 0; o < v.outer; ++o) {
            for (int i = 0; i < v.inner; ++i) {
                const size_t base = static_cast<size_t>(o) * v.n * v.inner + i;
                float dot = 0.0f;
                for (int j = 0; j < v.n; ++j) {
                    const size_t k = base + static_cast<size_t>(j) * v.inner;
                    dot += self.grad[k] * self.data[k];
                }
                for (int j = 0; j < v.n; ++j) {
                    const size_t k = base + static_cast<size_t>(j) * v.inner;
                    xin->grad[k] += self.data[k] * (self.grad[k] - dot);
                }
            }
        }
    });
    check_finite(*node, "softmax");
    return node;
}

TensorPtr log_softmax(const TensorPtr& x, int axis) {
    const AxisView v = axis_view(x, axis);
    std::vector<float> out(x->data.size());
    for (int o = 0; o < v.outer; ++o) {
        for (int i = 0; i < v.inner; ++i) {
            const size_t base = static_cast<size_t>(o) * v.n * v.inner + i;
            float mx = -std::numeric_limits<float>::infinity();
            for (int j = 0; j < v.n; ++j) mx = std::max(mx, x->data[base + static_cast<size_t>(j) * v.inner]);
            float denom = 0.0f;
            for (int j = 0; j < v.n; ++j) {
                denom += std::exp(x->data[base + static_cast<size_t>(j) * v.inner] - mx);
            }
            const float lse = mx + std::log(denom);
            for (int j = 0; j < v.n; ++j) {
                const size_t k = base + static_cast<size_t>(j) * v.inner;
                out[k] = x->data[k] - lse;
            }
        }
    }
    TensorPtr xin = x;
    auto node = make_node(x->shape, std::move(out), {x}, [xin, v](Tensor& self) {
        if (!xin->requires_grad) return;
        xin->ensure_grad();
        for (int o = 0; o < v.outer; ++o) {
            for (int i = 0; i < v.inner; ++i) {
                const size_t base = static_cast<size_t>(o) * v.n * v.inner + i;
                float gsum = 0.0f;
                for (int j = 0; j < v.n; ++j) gsum += self.grad[base + static_cast<size_t>(j) * v.inner];
                for (int j = 0; j < v.n; ++j) {
                    const size_t k = base + static_cast<size_t>(j) * v.inner;
                    xin->grad[k] += self.grad[k] - std::exp(self.data[k]) * gsum;
                }
            }
        }
    });
    check_finite(*node, "log_softmax");
    return node;
}

TensorPtr add(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "add");
    std::vector<float> out(a->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] + b->data[i];
    TensorPtr pa = a, pb = b;
    auto node = make_node(a->shape, std::move(out), {a, b}, [pa, pb](Tensor& self) {
        for (const TensorPtr& p : {pa, pb}) {
            if (!p->requires_grad) continue;
            p->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
        }
    });
    check_finite(*node, "add");
    return node;
}

TensorPtr sub(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "sub");
    std::vector<float> out(a->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] - b->data[i];
    TensorPtr pa = a, pb = b;
    auto node = make_node(a->shape, std::move(out), {a, b}, [pa, pb](Tensor& self) {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] -= self.grad[i];
        }
    });
    check_finite(*node, "sub");
    return node;
}

TensorPtr mul(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "mul");
    std::vector<float> out(a->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = a->data[i] * b->data[i];
    TensorPtr pa = a, pb = b;
    auto node = make_node(a->shape, std::move(out), {a, b}, [pa, pb](Tensor& self) {
        if (pa->requires_grad) {
            pa->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * pb->data[i];
        }
        if (pb->requires_grad) {
            pb->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i] * pa->data[i];
        }
    });
    check_finite(*node, "mul");
    return node;
}

TensorPtr min2(const TensorPtr& a, const TensorPtr& b) {
    require_same_shape(a, b, "min2");
    std::vector<float> out(a->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = std::min(a->data[i], b->data[i]);
    TensorPtr pa = a, pb = b;
    auto node = make_node(a->shape, std::move(out), {a, b}, [pa, pb](Tensor& self) {
        for (size_t i = 0; i < self.grad.size(); ++i) {
            const bool take_a = pa->data[i] <= pb->data[i];
            const TensorPtr& p = take_a ? pa : pb;
            if (p->requires_grad) accumulate(p, i, self.grad[i]);
        }
    });
    check_finite(*node, "min2");
    return node;
}

TensorPtr neg(const TensorPtr& x) { return affine(x, -1.0f, 0.0f); }

TensorPtr affine(const TensorPtr& x, float scale, float shift) {
    std::vector<float> out(x->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = scale * x->data[i] + shift;
    TensorPtr xin = x;
    auto node = make_node(x->shape, std::move(out), {x}, [xin, scale](Tensor& self) {
        if (!xin->requires_grad) return;
        xin->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) xin->grad[i] += scale * self.grad[i];
    });
    check_finite(*node, "affine");
    return node;
}

TensorPtr scale_by(const TensorPtr& x, const TensorPtr& s) {
    if (!s->is_scalar()) throw DimensionError("scale_by: scale must be a single-element tensor");
    const float sv = s->data[0];
    std::vector<float> out(x->data.size());
    for (size_t i = 0; i < out.size(); ++i) out[i] = sv * x->data[i];
    TensorPtr xin = x, sc = s;
    auto node = make_node(x->shape, std::move(out), {x, s}, [xin, sc](Tensor& self) {
        if (xin->requires_grad) {
            xin->ensure_grad();
            for (size_t i = 0; i < self.grad.size(); ++i) xin->grad[i] += sc->data[0] * self.grad[i];
        }
        if (sc->requires_grad) {
            sc->ensure_grad();
            float acc = 0.0f;
            for (size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * xin->data[i];
            sc->grad[0] += acc;
        }
    });
    check_finite(*node, "scale_by");
    return node;
}

TensorPtr sum_all(const TensorPtr& x) {
    float acc = 0.0f;
    for (float v : x->data) acc += v;
    TensorPtr xin = x;
    auto node = make_node({1}, {acc}, {x}, [xin](Tensor& self) {
        if (!xin->requires_grad) return;
        xin->ensure_grad();
        const float g = self.grad[0];
        for (size_t i = 0; i < xin->grad.size(); ++i) xin->grad[i] += g;
    });
    check_finite(*node, "sum");
    return node;
}

TensorPtr mean_all(const TensorPtr& x) {
    return affine(sum_all(x), 1.0f / static_cast<float>(x->numel()), 0.0f);
}

TensorPtr row_sum(const TensorPtr& x) {
    if (x->rank() != 2) throw DimensionError("row_sum: rank-2 input required");
    const int N = x->dim(0), D = x->dim(1);
    std::vector<float> out(static_cast<size_t>(N));
    for (int n = 0; n < N; ++n) {
        float acc = 0.0f;
        for (int d = 0; d < D; ++d) acc += x->data[static_cast<size_t>(n) * D + d];
        out[static_cast<size_t>(n)] = acc;
    }
    TensorPtr xin = x;
    auto node = make_node({N, 1}, std::move(out), {x}, [xin, N, D](Tensor& self) {
        if (!xin->requires_grad) return;
        xin->ensure_grad();
        for (int n = 0; n < N; ++n) {
            const float g = self.grad[static_cast<size_t>(n)];
            for (int d = 0; d < D; ++d) xin->grad[static_cast<size_t>(n) * D + d] += g;
        }
    });
    check_finite(*node, "row_sum");
    return node;
}

TensorPtr reshape(const TensorPtr& x, std::vector<int> shape) {
    if (shape_numel(shape) != x->numel()) throw DimensionError("reshape: element count changed");
    TensorPtr xin = x;
    return make_node(std::move(shape), x->data, {x}, [xin](Tensor& self) {
        if (!xin->requires_grad) return;
        xin->ensure_grad();
        for (size_t i = 0; i < self.grad.size(); ++i) xin->grad[i] += self.grad[i];
    });
}

TensorPtr flatten2d(const TensorPtr& x) {
    if (x->rank() < 2) throw DimensionError("flatten2d: rank >= 2 required");
    const int N = x->dim(0);
    return reshape(x, {N, x->numel() / N});
}

TensorPtr concat_axis1(const TensorPtr& a, const TensorPtr& b) {
    if (a->rank() != b->rank() || (a->rank() != 2 && a->rank() != 4)) {
        throw DimensionError("concat_axis1: rank-2 or rank-4 tensors of equal rank required");
    }
    for (int i = 0; i < a->rank(); ++i) {
        if (i != 1 && a->dim(i) != b->dim(i)) throw DimensionError("concat_axis1: shape mismatch");
    }
    const int N = a->dim(0);
    const int Ca = a->dim(1), Cb = b->dim(1);
    int inner = 1;
    for (int i = 2; i < a->rank(); ++i) inner *= a->dim(i);

    std::vector<int> shape = a->shape;
    shape[1] = Ca + Cb;
    std::vector<float> out(static_cast<size_t>(N) * (Ca + Cb) * inner);
    for (int n = 0; n < N; ++n) {
        float* dst = out.data() + static_cast<size_t>(n) * (Ca + Cb) * inner;
        const float* pa = a->data.data() + static_cast<size_t>(n) * Ca * inner;
        const float* pb = b->data.data() + static_cast<size_t>(n) * Cb * inner;
        std::copy(pa, pa + static_cast<size_t>(Ca) * inner, dst);
        std::copy(pb, pb + static_cast<size_t>(Cb) * inner, dst + static_cast<size_t>(Ca) * inner);
    }
    TensorPtr ta = a, tb = b;
    return make_node(std::move(shape), std::move(out), {a, b},
                     [ta, tb, N, Ca, Cb, inner](Tensor& self) {
                         for (int n = 0; n < N; ++n) {
                             const float* g = self.grad.data() + static_cast<size_t>(n) * (Ca + Cb) * inner;
                             if (ta->requires_grad) {
                                 ta->ensure_grad();
                                 float* dst = ta->grad.data() + static_cast<size_t>(n) * Ca * inner;
                                 for (size_t i = 0; i < static_cast<size_t>(Ca) * inner; ++i) dst[i] += g[i];
                             }
                             if (tb->requires_grad) {
                                 tb->ensure_grad();
                                 float* dst = tb->grad.data() + static_cast<size_t>(n) * Cb * inner;
                                 const float* gb = g + static_cast<size_t>(Ca) * inner;
                                 for (size_t i = 0; i < static_cast<size_t>(Cb) * inner; ++i) dst[i] += gb[i];
                             }
                         }
                     });
}

TensorPtr slice_axis1(const TensorPtr& x, int start, int len) {
    if (x->rank() != 2 && x->rank() != 4) throw DimensionError("slice_axis1: rank-2 or rank-4 required");
    const int N = x->dim(0), C = x->dim(1);
    if (start < 0 || len <= 0 || start + len > C) throw DimensionError("slice_axis1: range out of bounds");
    int inner = 1;
    for (int i = 2; i < x->rank(); ++i) inner *= x->dim(i);

    std::vector<int> shape = x->shape;
    shape[1] = len;
    std::vector<float> out(static_cast<size_t>(N) * len * inner);
    for (int n = 0; n < N; ++n) {
        const float* src = x->data.data() + (static_cast<size_t>(n) * C + start) * inner;
        std::copy(src, src + static_cast<size_t>(len) * inner,
                  out.data() + static_cast<size_t>(n) * len * inner);
    }
    TensorPtr xin = x;
    return make_node(std::move(shape), std::move(out), {x}, [xin, N, C, start, len, inner](Tensor& self) {
        if (!xin->requires_grad) return;
        xin->ensure_grad();
        for (int n = 0; n < N; ++n) {
            float* dst = xin->grad.data() + (static_cast<size_t>(n) * C + start) * inner;
            const float* g = self.grad.data() + static_cast<size_t>(n) * len * inner;
            for (size_t i = 0; i < static_cast<size_t>(len) * inner; ++i) dst[i] += g[i];
        }
    });
}

TensorPtr gather_cols(const TensorPtr& x, const std::vector<int>& idx) {
    if (x->rank() != 2) throw DimensionError("gather_cols: rank-2 input required");
    const int N = x->dim(0), K = x->dim(1);
    if (static_cast<int>(idx.size()) != N) throw DimensionError("gather_cols: one index per row required");
    std::vector<float> out(static_cast<size_t>(N));
    for (int n = 0; n < N; ++n) {
        const int k = idx[static_cast<size_t>(n)];
        if (k < 0 || k >= K) throw DimensionError("gather_cols: index out of range");
        out[static_cast<size_t>(n)] = x->data[static_cast<size_t>(n) * K + k];
    }
    TensorPtr xin = x;
    std::vector<int> idx_copy = idx;
    return make_node({N, 1}, std::move(out), {x}, [xin, idx_copy, N, K](Tensor& self) {
        if (!xin->requires_grad) return;
        xin->ensure_grad();
        for (int n = 0; n < N; ++n) {
            xin->grad[static_cast<size_t>(n) * K + idx_copy[static_cast<size_t>(n)]] +=
                self.grad[static_cast<size_t>(n)];
        }
    });
}

TensorPtr detach(const TensorPtr& x) {
    return Tensor::create(x->shape, x->data, false);
}

TensorPtr mse_loss(const TensorPtr& pred, const TensorPtr& target) {
    require_same_shape(pred, target, "mse_loss");
    if (pred->numel() == 0) throw UsageError("mse_loss: empty input");
    const float inv_n = 1.0f / static_cast<float>(pred->numel());
    float acc = 0.0f;
    for (size_t i = 0; i < pred->data.size(); ++i) {
        const float d = pred->data[i] - target->data[i];
        acc += d * d;
    }
    TensorPtr p = pred, t = target;
    auto node = make_node({1}, {acc * inv_n}, {pred, target}, [p, t, inv_n](Tensor& self) {
        const float g = self.grad[0] * 2.0f * inv_n;
        if (p->requires_grad) {
            p->ensure_grad();
            for (size_t i = 0; i < p->grad.size(); ++i) p->grad[i] += g * (p->data[i] - t->data[i]);
        }
        if (t->requires_grad) {
            t->ensure_grad();
            for (size_t i = 0; i < t->grad.size(); ++i) t->grad[i] -= g * (p->data[i] - t->data[i]);
        }
    });
    check_finite(*node, "mse_loss");
    return node;
}

TensorPtr cross_entropy_logits(const TensorPtr& logits, const std::vector<int>& labels) {
    if (logits->rank() != 2) throw DimensionError("cross_entropy_logits: rank-2 logits required");
    const int N = logits->dim(0), K = logits->dim(1);
    if (static_cast<int>(labels.size()) != N) {
        throw DimensionError("cross_entropy_logits: one label per row required");
    }
    float acc = 0.0f;
    for (int n = 0; n < N; ++n) {
        const int lbl = labels[static_cast<size_t>(n)];
        if (lbl < 0 || lbl >= K) throw DimensionError("cross_entropy_logits: label out of range");
        const float* row = logits->data.data() + static_cast<size_t>(n) * K;
        float mx = row[0];
        for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
        float denom = 0.0f;
        for (int k = 0; k < K; ++k) denom += std::exp(row[k] - mx);
        acc += mx + std::log(denom) - row[lbl];
    }
    const float inv_n = 1.0f / static_cast<float>(N);
    TensorPtr z = logits;
    std::vector<int> lbls = labels;
    auto node = make_node({1}, {acc * inv_n}, {logits}, [z, lbls, N, K, inv_n](Tensor& self) {
        if (!z->requires_grad) return;
        z->ensure_grad();
        const float g = self.grad[0] * inv_n;
        for (int n = 0; n < N; ++n) {
            const float* row = z->data.data() + static_cast<size_t>(n) * K;
            float* grow = z->grad.data() + static_cast<size_t>(n) * K;
            float mx = row[0];
            for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
            float denom = 0.0f;
            for (int k = 0; k < K; ++k) denom += std::exp(row[k] - mx);
            for (int k = 0; k < K; ++k) {
                const float p = std::exp(row[k] - mx) / denom;
                grow[k] += g * (p - (k == lbls[static_cast<size_t>(n)] ? 1.0f : 0.0f));
            }
        }
    });
    check_finite(*node, "cross_entropy_logits");
    return node;
}

TensorPtr entropy_of_logits(const TensorPtr& logits) {
    if (logits->rank() != 2) throw DimensionError("entropy_of_logits: rank-2 logits required");
    const int N = logits->dim(0), K = logits->dim(1);
    const float inv_n = 1.0f / static_cast<float>(N);
    float acc = 0.0f;
    for (int n = 0; n < N; ++n) {
        const float* row = logits->data.data() + static_cast<size_t>(n) * K;
        float mx = row[0];
        for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
        float denom = 0.0f;
        for (int k = 0; k < K; ++k) denom += std::exp(row[k] - mx);
        for (int k = 0; k < K; ++k) {
            const float p = std::exp(row[k] - mx) / denom;
            if (p > 0.0f) acc -= p * std::log(p);
        }
    }
    TensorPtr z = logits;
    auto node = make_node({1}, {acc * inv_n}, {logits}, [z, N, K, inv_n](Tensor& self) {
        if (!z->requires_grad) return;
        z->ensure_grad();
        const float g = self.grad[0] * inv_n;
        for (int n = 0; n < N; ++n) {
            const float* row = z->data.data() + static_cast<size_t>(n) * K;
            float* grow = z->grad.data() + static_cast<size_t>(n) * K;
            float mx = row[0];
            for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
            float denom = 0.0f;
            for (int k = 0; k < K; ++k) denom += std::exp(row[k] - mx);
            float h = 0.0f;
            for (int k = 0; k < K; ++k) {
                const float p = std::exp(row[k] - mx) / denom;
                if (p > 0.0f) h -= p * std::log(p);
            }
            for (int k = 0; k < K; ++k) {
                const float p = std::exp(row[k] - mx) / denom;
                const float logp = std::log(std::max(p, 1e-30f));
                grow[k] += g * (-p * (logp + h));
            }
        }
    });
    check_finite(*node, "entropy_of_logits");
    return node;
}

}  // namespace pad::numcore
