#pragma once

// Test-only reference implementations, independent of the library's kernels.
// Everything here is computed in double precision with straightforward
// bounds-checked loops; these back both the numeric comparisons and the
// finite-difference forward evaluations.

#include <cmath>
#include <cstddef>
#include <vector>

namespace refops {

struct Shape4 {
    int n, c, h, w;
    int numel() const { return n * c * h * w; }
};

inline std::vector<double> conv2d(const std::vector<double>& in, Shape4 is,
                                  const std::vector<double>& kernel, int F, int kH, int kW,
                                  const std::vector<double>& bias, int stride, int padding,
                                  int& out_h, int& out_w) {
    out_h = (is.h + 2 * padding - kH) / stride + 1;
    out_w = (is.w + 2 * padding - kW) / stride + 1;
    std::vector<double> out(static_cast<size_t>(is.n) * F * out_h * out_w, 0.0);
    for (int n = 0; n < is.n; ++n)
        for (int f = 0; f < F; ++f)
            for (int oh = 0; oh < out_h; ++oh)
                for (int ow = 0; ow < out_w; ++ow) {
                    double acc = bias[static_cast<size_t>(f)];
                    for (int c = 0; c < is.c; ++c)
                        for (int kh = 0; kh < kH; ++kh)
                            for (int kw = 0; kw < kW; ++kw) {
                                const int ih = oh * stride - padding + kh;
                                const int iw = ow * stride - padding + kw;
                                if (ih < 0 || ih >= is.h || iw < 0 || iw >= is.w) continue;
                                acc += in[((static_cast<size_t>(n) * is.c + c) * is.h + ih) * is.w + iw] *
                                       kernel[((static_cast<size_t>(f) * is.c + c) * kH + kh) * kW + kw];
                            }
                    out[((static_cast<size_t>(n) * F + f) * out_h + oh) * out_w + ow] = acc;
                }
    return out;
}

inline std::vector<double> dense(const std::vector<double>& in, int N, int D,
                                 const std::vector<double>& w, int M,
                                 const std::vector<double>& b) {
    std::vector<double> out(static_cast<size_t>(N) * M, 0.0);
    for (int n = 0; n < N; ++n)
        for (int m = 0; m < M; ++m) {
            double acc = b[static_cast<size_t>(m)];
            for (int d = 0; d < D; ++d) {
                acc += in[static_cast<size_t>(n) * D + d] * w[static_cast<size_t>(d) * M + m];
            }
            out[static_cast<size_t>(n) * M + m] = acc;
        }
    return out;
}

inline std::vector<double> relu(std::vector<double> x) {
    for (double& v : x) v = v > 0.0 ? v : 0.0;
    return x;
}

inline std::vector<double> tanh_v(std::vector<double> x) {
    for (double& v : x) v = std::tanh(v);
    return x;
}

inline std::vector<double> exp_v(std::vector<double> x) {
    for (double& v : x) v = std::exp(v);
    return x;
}

inline std::vector<double> log_v(std::vector<double> x) {
    for (double& v : x) v = std::log(v);
    return x;
}

// Row-wise softmax for [N,K].
inline std::vector<double> softmax_rows(const std::vector<double>& x, int N, int K) {
    std::vector<double> out(x.size());
    for (int n = 0; n < N; ++n) {
        const double* row = x.data() + static_cast<size_t>(n) * K;
        double mx = row[0];
        for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
        double denom = 0.0;
        for (int k = 0; k < K; ++k) denom += std::exp(row[k] - mx);
        for (int k = 0; k < K; ++k) out[static_cast<size_t>(n) * K + k] = std::exp(row[k] - mx) / denom;
    }
    return out;
}

inline std::vector<double> log_softmax_rows(const std::vector<double>& x, int N, int K) {
    std::vector<double> out(x.size());
    for (int n = 0; n < N; ++n) {
        const double* row = x.data() + static_cast<size_t>(n) * K;
        double mx = row[0];
        for (int k = 1; k < K; ++k) mx = std::max(mx, row[k]);
        double denom = 0.0;
        for (int k = 0; k < K; ++k) denom += std::exp(row[k] - mx);
        const double lse = mx + std::log(denom);
        for (int k = 0; k < K; ++k) out[static_cast<size_t>(n) * K + k] = row[k] - lse;
    }
    return out;
}

inline double mse(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return acc / static_cast<double>(a.size());
}

inline double cross_entropy(const std::vector<double>& logits, int N, int K,
                            const std::vector<int>& labels) {
    const std::vector<double> ls = log_softmax_rows(logits, N, K);
    double acc = 0.0;
    for (int n = 0; n < N; ++n) acc -= ls[static_cast<size_t>(n) * K + labels[static_cast<size_t>(n)]];
    return acc / static_cast<double>(N);
}

inline double entropy(const std::vector<double>& logits, int N, int K) {
    const std::vector<double> p = softmax_rows(logits, N, K);
    double acc = 0.0;
    for (size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) acc -= p[i] * std::log(p[i]);
    }
    return acc / static_cast<double>(N);
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

}  // namespace refops
