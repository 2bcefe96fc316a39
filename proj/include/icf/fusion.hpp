#pragma once

#include <utility>

#include "icf/nn.hpp"

namespace icf {

// Channel shuffle projection: shuffle -> grouped 1x1 -> GELU -> grouped 1x1.
template <class T>
struct CspParams4 {
    int64_t c_in = 0, c_mid = 0, c_out = 0;
    int64_t shuffle_groups = 1, groups_g1 = 1, groups_g2 = 1;
    ConvWeights4<T> g1, g2;

    ConvSpec g1_spec() const;
    ConvSpec g2_spec() const;
    void validate() const;
};

// Shuffle gate: gate = GELU(grouped 1x1(shuffled)) * shuffled, plus residual.
template <class T>
struct CcsgParams4 {
    int64_t channels = 0;
    int64_t shuffle_groups = 1, conv_groups = 1;
    ConvWeights4<T> gate;

    ConvSpec gate_spec() const;
};

// Large-kernel gate context: depthwise 5x5 then depthwise 5x5 dilation 2.
template <class T>
struct ClkgParams4 {
    int64_t channels = 0;
    ConvWeights4<T> dw5, dw5d;

    ConvSpec dw5_spec() const { return ConvSpec::depthwise(channels, 5, 1, has_bias()); }
    ConvSpec dw5d_spec() const { return ConvSpec::depthwise(channels, 5, 2, has_bias()); }
    bool has_bias() const { return !dw5.bias.empty(); }
};

// Multi-scale distillation: three depthwise branches concatenated with the
// input, projected by a CSP down to the aligned width.
template <class T>
struct MsfdParams4 {
    int64_t c_hat = 0;  // input width; every branch preserves it
    ConvWeights4<T> dw3, dw5, dw5d;
    CspParams4<T> csp;  // 4*c_hat -> c_out

    ConvSpec dw3_spec() const { return ConvSpec::depthwise(c_hat, 3, 1, has_bias()); }
    ConvSpec dw5_spec() const { return ConvSpec::depthwise(c_hat, 5, 1, has_bias()); }
    ConvSpec dw5d_spec() const { return ConvSpec::depthwise(c_hat, 5, 2, has_bias()); }
    bool has_bias() const { return !dw3.bias.empty(); }
};

template <class T>
struct FusionLevelParams4 {
    int64_t c_rgb = 0, c_ir = 0;
    MsfdParams4<T> msfd;      // c_rgb -> c_ir
    CcsgParams4<T> ccsg;      // on 2*c_ir
    ClkgParams4<T> clkg;      // on 2*c_ir
    CspParams4<T> csp_out;    // 2*c_ir -> 2*c_ir
};

using CspParams = CspParams4<float>;
using CcsgParams = CcsgParams4<float>;
using ClkgParams = ClkgParams4<float>;
using MsfdParams = MsfdParams4<float>;
using FusionLevelParams = FusionLevelParams4<float>;

template <class T>
Tensor4<T> csp_forward(const Tensor4<T>& t, const CspParams4<T>& p);
template <class T>
Tensor4<T> csp_backward(const Tensor4<T>& t, const CspParams4<T>& p, const Tensor4<T>& grad_out);

template <class T>
Tensor4<T> ccsg_forward(const Tensor4<T>& f_in, const CcsgParams4<T>& p);
template <class T>
Tensor4<T> ccsg_backward(const Tensor4<T>& f_in, const CcsgParams4<T>& p,
                         const Tensor4<T>& grad_out);

// The two-layer large-kernel context block on its own (13x13 receptive field).
template <class T>
Tensor4<T> clkg_context(const Tensor4<T>& f_in, const ClkgParams4<T>& p);
template <class T>
Tensor4<T> clkg_forward(const Tensor4<T>& f_in, const ClkgParams4<T>& p);
template <class T>
Tensor4<T> clkg_backward(const Tensor4<T>& f_in, const ClkgParams4<T>& p,
                         const Tensor4<T>& grad_out);

template <class T>
Tensor4<T> msfd_forward(const Tensor4<T>& f_rgb, const MsfdParams4<T>& p);
template <class T>
Tensor4<T> msfd_backward(const Tensor4<T>& f_rgb, const MsfdParams4<T>& p,
                         const Tensor4<T>& grad_out);

// concat(rgb, ir) -> CCSG -> CLKG -> CSP -> split in two -> add.
template <class T>
Tensor4<T> fusion_block_forward(const Tensor4<T>& f_rgb_hat, const Tensor4<T>& f_ir,
                                const FusionLevelParams4<T>& p);
template <class T>
std::pair<Tensor4<T>, Tensor4<T>> fusion_block_backward(const Tensor4<T>& f_rgb_hat,
                                                        const Tensor4<T>& f_ir,
                                                        const FusionLevelParams4<T>& p,
                                                        const Tensor4<T>& grad_out);

enum class Modality { rgb, ir, fused };

struct FeaturePyramid {
    Modality modality = Modality::rgb;
    std::vector<std::pair<int, Tensor>> levels;  // (level id, feature map)

    const Tensor* find(int level_id) const;
};

struct FusionParams {
    std::vector<std::pair<int, FusionLevelParams>> levels;
};

FeaturePyramid pyramid_fuse(const FeaturePyramid& rgb, const FeaturePyramid& ir,
                            const FusionParams& params);

// ---- configuration ----------------------------------------------------

struct FusionConfig {
    int resolution = 640;
    std::vector<int> levels = {3, 4, 5};
    std::vector<int64_t> c_rgb = {128, 256, 512};
    std::vector<int64_t> c_ir = {512, 1024, 2048};
    int64_t ccsg_shuffle_groups = 2;
    int64_t ccsg_conv_groups = 2;
    int64_t msfd_csp_shuffle_groups = 4;
    int64_t msfd_csp_groups = 4;
    int64_t tail_csp_shuffle_groups = 2;
    int64_t tail_csp_groups = 2;
    bool bias = true;

    void validate() const;
    int level_stride(int level_id) const;  // 8/16/32 for levels 3/4/5
};

// Stable enumeration of every convolution in the configured stack, used by
// parameter init, parameter files and cost accounting alike.
struct NamedConv {
    std::string name;  // e.g. "l3.msfd.dw3"
    ConvSpec spec;
    int level_id;
};
std::vector<NamedConv> enumerate_convs(const FusionConfig& cfg);

// Source of weights during parameter construction: given the enumeration
// index and spec of a conv, produce its weights.
using WeightProvider = std::function<ConvWeights(size_t index, const NamedConv&)>;

FusionLevelParams build_level_params(const FusionConfig& cfg, size_t level_index,
                                     const WeightProvider& provider);
FusionParams build_fusion_params(const FusionConfig& cfg, const WeightProvider& provider);

// uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)), fan_in = (c_in/g)*k^2; tensor i
// draws from sub_seed(base, i) in enumeration order.
FusionParams init_fusion_params(const FusionConfig& cfg, Seed base);
ConvWeights init_conv_weights(const ConvSpec& spec, Seed seed);

DConvWeights widen_weights(const ConvWeights& w);
CspParams4<double> widen_params(const CspParams& p);
CcsgParams4<double> widen_params(const CcsgParams& p);
ClkgParams4<double> widen_params(const ClkgParams& p);
MsfdParams4<double> widen_params(const MsfdParams& p);
FusionLevelParams4<double> widen_params(const FusionLevelParams& p);

}  // namespace icf
