#include "icf/nn.hpp"

#include <cmath>

#include "icf/parallel.hpp"

namespace icf {

ConvSpec ConvSpec::same(int64_t c_in, int64_t c_out, int64_t k, int64_t groups, int64_t dilation,
                        bool has_bias) {
    if (k % 2 == 0) throw std::invalid_argument("ConvSpec::same: kernel must be odd");
    ConvSpec s{c_in, c_out, k, groups, dilation, dilation * (k - 1) / 2, has_bias};
    s.validate();
    return s;
}

ConvSpec ConvSpec::depthwise(int64_t c, int64_t k, int64_t dilation, bool has_bias) {
    return same(c, c, k, c, dilation, has_bias);
}

void ConvSpec::validate() const {
    if (c_in < 1 || c_out < 1 || k < 1 || groups < 1 || dilation < 1 || padding < 0)
        throw std::invalid_argument("ConvSpec: nonpositive field");
    if (c_in % groups != 0)
        throw std::invalid_argument("ConvSpec: c_in=" + std::to_string(c_in) +
                                    " not divisible by groups=" + std::to_string(groups));
    if (c_out % groups != 0)
        throw std::invalid_argument("ConvSpec: c_out=" + std::to_string(c_out) +
                                    " not divisible by groups=" + std::to_string(groups));
}

namespace {

template <class T>
void check_conv_args(const Tensor4<T>& input, const ConvSpec& spec, const ConvWeights4<T>& w) {
    spec.validate();
    if (input.shape.c != spec.c_in)
        throw std::invalid_argument("conv2d: input channels " + std::to_string(input.shape.c) +
                                    " != spec.c_in " + std::to_string(spec.c_in));
    const Shape4 want{spec.c_out, spec.c_in / spec.groups, spec.k, spec.k};
    if (!(w.weight.shape == want))
        throw std::invalid_argument("conv2d: weight shape " + w.weight.shape.str() +
                                    " != expected " + want.str());
    if (spec.has_bias && static_cast<int64_t>(w.bias.size()) != spec.c_out)
        throw std::invalid_argument("conv2d: bias length " + std::to_string(w.bias.size()) +
                                    " != c_out " + std::to_string(spec.c_out));
    if (!spec.has_bias && !w.bias.empty())
        throw std::invalid_argument("conv2d: bias present on a bias-free spec");
    if (spec.out_hw(input.shape.h) < 1 || spec.out_hw(input.shape.w) < 1)
        throw std::invalid_argument("conv2d: nonpositive output size for input " +
                                    input.shape.str());
}

}  // namespace

// Direct loop over every tap of every output element; the correctness anchor
// all other kernels must match bitwise.
template <class T>
Tensor4<T> conv2d_reference(const Tensor4<T>& input, const ConvSpec& spec,
                            const ConvWeights4<T>& w) {
    check_conv_args(input, spec, w);
    const int64_t n = input.shape.n, h = input.shape.h, wd = input.shape.w;
    const int64_t oh = spec.out_hw(h), ow = spec.out_hw(wd);
    const int64_t cpg_in = spec.c_in / spec.groups, cpg_out = spec.c_out / spec.groups;
    Tensor4<T> out({n, spec.c_out, oh, ow});

    parallel_for(n * spec.c_out, [&](int64_t plane) {
        const int64_t bn = plane / spec.c_out;
        const int64_t oc = plane % spec.c_out;
        const int64_t g = oc / cpg_out;
        const T* wbase = w.weight.data.data() + oc * cpg_in * spec.k * spec.k;
        const double bias = spec.has_bias ? static_cast<double>(w.bias[oc]) : 0.0;
        T* dst = out.data.data() + plane * oh * ow;
        for (int64_t oy = 0; oy < oh; ++oy) {
            for (int64_t ox = 0; ox < ow; ++ox) {
                double acc = 0.0;
                for (int64_t ic = 0; ic < cpg_in; ++ic) {
                    const T* in_plane =
                        input.data.data() + ((bn * spec.c_in + g * cpg_in + ic) * h) * wd;
                    const T* wrow = wbase + ic * spec.k * spec.k;
                    for (int64_t ky = 0; ky < spec.k; ++ky) {
                        const int64_t iy = oy - spec.padding + ky * spec.dilation;
                        if (iy < 0 || iy >= h) continue;
                        for (int64_t kx = 0; kx < spec.k; ++kx) {
                            const int64_t ix = ox - spec.padding + kx * spec.dilation;
                            if (ix < 0 || ix >= wd) continue;
                            acc += static_cast<double>(in_plane[iy * wd + ix]) *
                                   static_cast<double>(wrow[ky * spec.k + kx]);
                        }
                    }
                }
                dst[oy * ow + ox] = static_cast<T>(acc + bias);
            }
        }
    });
    return out;
}

// 1x1 fast path: streams whole planes with the same per-element accumulation
// order (input channels ascending) as the reference kernel.
template <class T>
static Tensor4<T> conv2d_1x1(const Tensor4<T>& input, const ConvSpec& spec,
                             const ConvWeights4<T>& w) {
    const int64_t n = input.shape.n, h = input.shape.h, wd = input.shape.w;
    const int64_t plane = h * wd;
    const int64_t cpg_in = spec.c_in / spec.groups, cpg_out = spec.c_out / spec.groups;
    Tensor4<T> out({n, spec.c_out, h, wd});

    parallel_for(n * spec.c_out, [&](int64_t p) {
        const int64_t bn = p / spec.c_out;
        const int64_t oc = p % spec.c_out;
        const int64_t g = oc / cpg_out;
        const T* wrow = w.weight.data.data() + oc * cpg_in;
        std::vector<double> acc(static_cast<size_t>(plane), 0.0);
        for (int64_t ic = 0; ic < cpg_in; ++ic) {
            const double wv = static_cast<double>(wrow[ic]);
            const T* src = input.data.data() + (bn * spec.c_in + g * cpg_in + ic) * plane;
            for (int64_t i = 0; i < plane; ++i) acc[static_cast<size_t>(i)] += wv * src[i];
        }
        const double bias = spec.has_bias ? static_cast<double>(w.bias[oc]) : 0.0;
        T* dst = out.data.data() + p * plane;
        for (int64_t i = 0; i < plane; ++i)
            dst[i] = static_cast<T>(acc[static_cast<size_t>(i)] + bias);
    });
    return out;
}

template <class T>
Tensor4<T> conv2d(const Tensor4<T>& input, const ConvSpec& spec, const ConvWeights4<T>& w) {
    if (spec.k == 1 && spec.padding == 0) {
        check_conv_args(input, spec, w);
        return conv2d_1x1(input, spec, w);
    }
    return conv2d_reference(input, spec, w);
}

template <class T>
ConvGrads4<T> conv2d_backward(const Tensor4<T>& input, const ConvSpec& spec,
                              const ConvWeights4<T>& w, const Tensor4<T>& grad_out) {
    check_conv_args(input, spec, w);
    const int64_t n = input.shape.n, h = input.shape.h, wd = input.shape.w;
    const int64_t oh = spec.out_hw(h), ow = spec.out_hw(wd);
    const Shape4 want_go{n, spec.c_out, oh, ow};
    if (!(grad_out.shape == want_go))
        throw std::invalid_argument("conv2d_backward: grad_out shape " + grad_out.shape.str() +
                                    " != expected " + want_go.str());

    const int64_t cpg_in = spec.c_in / spec.groups, cpg_out = spec.c_out / spec.groups;
    std::vector<double> gi(input.data.size(), 0.0);
    std::vector<double> gw(w.weight.data.size(), 0.0);
    std::vector<double> gb(static_cast<size_t>(spec.c_out), 0.0);

    for (int64_t bn = 0; bn < n; ++bn) {
        for (int64_t oc = 0; oc < spec.c_out; ++oc) {
            const int64_t g = oc / cpg_out;
            const T* wbase = w.weight.data.data() + oc * cpg_in * spec.k * spec.k;
            double* gwbase = gw.data() + oc * cpg_in * spec.k * spec.k;
            for (int64_t oy = 0; oy < oh; ++oy) {
                for (int64_t ox = 0; ox < ow; ++ox) {
                    const double go =
                        static_cast<double>(grad_out.data[((bn * spec.c_out + oc) * oh + oy) * ow + ox]);
                    gb[static_cast<size_t>(oc)] += go;
                    for (int64_t ic = 0; ic < cpg_in; ++ic) {
                        const int64_t cin = g * cpg_in + ic;
                        const T* in_plane = input.data.data() + (bn * spec.c_in + cin) * h * wd;
                        double* gi_plane = gi.data() + (bn * spec.c_in + cin) * h * wd;
                        for (int64_t ky = 0; ky < spec.k; ++ky) {
                            const int64_t iy = oy - spec.padding + ky * spec.dilation;
                            if (iy < 0 || iy >= h) continue;
                            for (int64_t kx = 0; kx < spec.k; ++kx) {
                                const int64_t ix = ox - spec.padding + kx * spec.dilation;
                                if (ix < 0 || ix >= wd) continue;
                                const double wv =
                                    static_cast<double>(wbase[(ic * spec.k + ky) * spec.k + kx]);
                                gi_plane[iy * wd + ix] += go * wv;
                                gwbase[(ic * spec.k + ky) * spec.k + kx] +=
                                    go * static_cast<double>(in_plane[iy * wd + ix]);
                            }
                        }
                    }
                }
            }
        }
    }

    ConvGrads4<T> grads;
    grads.input = Tensor4<T>(input.shape);
    for (size_t i = 0; i < gi.size(); ++i) grads.input.data[i] = static_cast<T>(gi[i]);
    grads.weight = Tensor4<T>(w.weight.shape);
    for (size_t i = 0; i < gw.size(); ++i) grads.weight.data[i] = static_cast<T>(gw[i]);
    if (spec.has_bias) {
        grads.bias.resize(static_cast<size_t>(spec.c_out));
        for (size_t i = 0; i < gb.size(); ++i) grads.bias[i] = static_cast<T>(gb[i]);
    }
    return grads;
}

namespace {
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
}

double gelu_scalar(double x) {
    return x * 0.5 * (1.0 + std::erf(x * kInvSqrt2));
}

double gelu_grad_scalar(double x) {
    const double cdf = 0.5 * (1.0 + std::erf(x * kInvSqrt2));
    const double pdf = std::exp(-0.5 * x * x) * kInvSqrt2Pi;
    return cdf + x * pdf;
}

template <class T>
Tensor4<T> gelu(const Tensor4<T>& t) {
    Tensor4<T> out(t.shape);
    for (size_t i = 0; i < t.data.size(); ++i)
        out.data[i] = static_cast<T>(gelu_scalar(static_cast<double>(t.data[i])));
    return out;
}

template <class T>
Tensor4<T> gelu_backward(const Tensor4<T>& t, const Tensor4<T>& grad_out) {
    if (!(t.shape == grad_out.shape))
        throw std::invalid_argument("gelu_backward: shape mismatch " + t.shape.str() + " vs " +
                                    grad_out.shape.str());
    Tensor4<T> out(t.shape);
    for (size_t i = 0; i < t.data.size(); ++i)
        out.data[i] = static_cast<T>(static_cast<double>(grad_out.data[i]) *
                                     gelu_grad_scalar(static_cast<double>(t.data[i])));
    return out;
}

std::vector<int64_t> shuffle_perm(int64_t c, int64_t g) {
    if (g < 1 || c % g != 0)
        throw std::invalid_argument("channel_shuffle: c=" + std::to_string(c) +
                                    " not divisible by g=" + std::to_string(g));
    const int64_t cg = c / g;
    std::vector<int64_t> perm(static_cast<size_t>(c));
    for (int64_t j = 0; j < c; ++j) {
        const int64_t a = j / g, b = j % g;
        perm[static_cast<size_t>(j)] = b * cg + a;
    }
    return perm;
}

template <class T>
static Tensor4<T> apply_channel_perm(const Tensor4<T>& t, const std::vector<int64_t>& perm) {
    Tensor4<T> out(t.shape);
    const int64_t plane = t.shape.h * t.shape.w;
    for (int64_t n = 0; n < t.shape.n; ++n)
        for (int64_t j = 0; j < t.shape.c; ++j) {
            const T* src = t.data.data() + (n * t.shape.c + perm[static_cast<size_t>(j)]) * plane;
            std::copy(src, src + plane, out.data.data() + (n * t.shape.c + j) * plane);
        }
    return out;
}

template <class T>
Tensor4<T> channel_shuffle(const Tensor4<T>& t, int64_t g) {
    return apply_channel_perm(t, shuffle_perm(t.shape.c, g));
}

template <class T>
Tensor4<T> channel_shuffle_backward(const Tensor4<T>& grad_out, int64_t g) {
    if (g < 1 || grad_out.shape.c % g != 0)
        throw std::invalid_argument("channel_shuffle_backward: c=" +
                                    std::to_string(grad_out.shape.c) +
                                    " not divisible by g=" + std::to_string(g));
    return channel_shuffle(grad_out, grad_out.shape.c / g);
}

std::vector<double> finite_diff_grad(const std::function<double(const DTensor&)>& f,
                                     const DTensor& t, const std::vector<Coord4>& coords,
                                     double h) {
    if (!(h > 0)) throw std::invalid_argument("finite_diff_grad: h must be > 0");
    std::vector<double> out;
    out.reserve(coords.size());
    DTensor probe = t;
    for (const Coord4& c : coords) {
        if (c.n < 0 || c.n >= t.shape.n || c.c < 0 || c.c >= t.shape.c || c.h < 0 ||
            c.h >= t.shape.h || c.w < 0 || c.w >= t.shape.w)
            throw std::invalid_argument("finite_diff_grad: coordinate out of range");
        const int64_t i = t.index(c.n, c.c, c.h, c.w);
        const double orig = probe.data[static_cast<size_t>(i)];
        probe.data[static_cast<size_t>(i)] = orig + h;
        const double fp = f(probe);
        probe.data[static_cast<size_t>(i)] = orig - h;
        const double fm = f(probe);
        probe.data[static_cast<size_t>(i)] = orig;
        out.push_back((fp - fm) / (2.0 * h));
    }
    return out;
}

template Tensor4<float> conv2d_reference(const Tensor4<float>&, const ConvSpec&,
                                         const ConvWeights4<float>&);
template Tensor4<double> conv2d_reference(const Tensor4<double>&, const ConvSpec&,
                                          const ConvWeights4<double>&);
template Tensor4<float> conv2d(const Tensor4<float>&, const ConvSpec&, const ConvWeights4<float>&);
template Tensor4<double> conv2d(const Tensor4<double>&, const ConvSpec&,
                                const ConvWeights4<double>&);
template ConvGrads4<float> conv2d_backward(const Tensor4<float>&, const ConvSpec&,
                                           const ConvWeights4<float>&, const Tensor4<float>&);
template ConvGrads4<double> conv2d_backward(const Tensor4<double>&, const ConvSpec&,
                                            const ConvWeights4<double>&, const Tensor4<double>&);
template Tensor4<float> gelu(const Tensor4<float>&);
template Tensor4<double> gelu(const Tensor4<double>&);
template Tensor4<float> gelu_backward(const Tensor4<float>&, const Tensor4<float>&);
template Tensor4<double> gelu_backward(const Tensor4<double>&, const Tensor4<double>&);
template Tensor4<float> channel_shuffle(const Tensor4<float>&, int64_t);
template Tensor4<double> channel_shuffle(const Tensor4<double>&, int64_t);
template Tensor4<float> channel_shuffle_backward(const Tensor4<float>&, int64_t);
template Tensor4<double> channel_shuffle_backward(const Tensor4<double>&, int64_t);

}  // namespace icf
