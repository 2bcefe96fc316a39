#pragma once

#include <functional>

#include "icf/tensor.hpp"

namespace icf {

// Description of a stride-1 2-D convolution layer; the unit of both
// computation and cost accounting.
struct ConvSpec {
    int64_t c_in = 0;
    int64_t c_out = 0;
    int64_t k = 1;
    int64_t groups = 1;
    int64_t dilation = 1;
    int64_t padding = 0;
    bool has_bias = true;

    // p = d*(k-1)/2, spatial size preserved (odd kernels).
    static ConvSpec same(int64_t c_in, int64_t c_out, int64_t k, int64_t groups = 1,
                         int64_t dilation = 1, bool has_bias = true);
    static ConvSpec depthwise(int64_t c, int64_t k, int64_t dilation = 1, bool has_bias = true);

    void validate() const;
    int64_t out_hw(int64_t in_hw) const { return in_hw + 2 * padding - dilation * (k - 1); }
};

template <class T>
struct ConvWeights4 {
    Tensor4<T> weight;     // (c_out, c_in/groups, k, k)
    std::vector<T> bias;   // length c_out, or empty when the spec has no bias
};

using ConvWeights = ConvWeights4<float>;
using DConvWeights = ConvWeights4<double>;

template <class T>
struct ConvGrads4 {
    Tensor4<T> input;
    Tensor4<T> weight;
    std::vector<T> bias;
};

// Cross-correlation (no kernel flip), stride 1, zero padding. Each output
// element is accumulated in 64-bit and rounded once.
template <class T>
Tensor4<T> conv2d(const Tensor4<T>& input, const ConvSpec& spec, const ConvWeights4<T>& w);

// Naive per-tap loop; conv2d must match it bitwise on every spec.
template <class T>
Tensor4<T> conv2d_reference(const Tensor4<T>& input, const ConvSpec& spec,
                            const ConvWeights4<T>& w);

template <class T>
ConvGrads4<T> conv2d_backward(const Tensor4<T>& input, const ConvSpec& spec,
                              const ConvWeights4<T>& w, const Tensor4<T>& grad_out);

// Exact GELU: x * Phi(x) with Phi the standard normal CDF via erf.
template <class T>
Tensor4<T> gelu(const Tensor4<T>& t);

template <class T>
Tensor4<T> gelu_backward(const Tensor4<T>& t, const Tensor4<T>& grad_out);

double gelu_scalar(double x);
double gelu_grad_scalar(double x);

// Output channel j takes input channel shuffle_perm(c, g)[j]:
// the (g, c/g) reshape-transpose-flatten convention.
std::vector<int64_t> shuffle_perm(int64_t c, int64_t g);

template <class T>
Tensor4<T> channel_shuffle(const Tensor4<T>& t, int64_t g);

// Inverse permutation, i.e. a shuffle with c/g groups.
template <class T>
Tensor4<T> channel_shuffle_backward(const Tensor4<T>& grad_out, int64_t g);

struct Coord4 {
    int64_t n, c, h, w;
};

// Central differences (f(t+h*e_i) - f(t-h*e_i)) / 2h on a 64-bit pipeline.
// The oracle against which every analytic backward in this library is checked.
std::vector<double> finite_diff_grad(const std::function<double(const DTensor&)>& f,
                                     const DTensor& t, const std::vector<Coord4>& coords,
                                     double h);

}  // namespace icf
