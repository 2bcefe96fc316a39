#include "icf/fusion.hpp"

#include <cmath>

namespace icf {

template <class T>
ConvSpec CspParams4<T>::g1_spec() const {
    return ConvSpec{c_in, c_mid, 1, groups_g1, 1, 0, !g1.bias.empty()};
}

template <class T>
ConvSpec CspParams4<T>::g2_spec() const {
    return ConvSpec{c_mid, c_out, 1, groups_g2, 1, 0, !g2.bias.empty()};
}

template <class T>
void CspParams4<T>::validate() const {
    if (shuffle_groups < 1 || c_in % shuffle_groups != 0)
        throw std::invalid_argument("csp: c_in=" + std::to_string(c_in) +
                                    " not divisible by shuffle_groups=" +
                                    std::to_string(shuffle_groups));
    g1_spec().validate();
    g2_spec().validate();
}

template <class T>
ConvSpec CcsgParams4<T>::gate_spec() const {
    return ConvSpec{channels, channels, 1, conv_groups, 1, 0, !gate.bias.empty()};
}

template <class T>
Tensor4<T> csp_forward(const Tensor4<T>& t, const CspParams4<T>& p) {
    p.validate();
    if (t.shape.c != p.c_in)
        throw std::invalid_argument("csp_forward: input channels " + std::to_string(t.shape.c) +
                                    " != c_in " + std::to_string(p.c_in));
    Tensor4<T> x = channel_shuffle(t, p.shuffle_groups);
    x = conv2d(x, p.g1_spec(), p.g1);
    x = gelu(x);
    return conv2d(x, p.g2_spec(), p.g2);
}

template <class T>
Tensor4<T> csp_backward(const Tensor4<T>& t, const CspParams4<T>& p, const Tensor4<T>& grad_out) {
    p.validate();
    const Tensor4<T> shuffled = channel_shuffle(t, p.shuffle_groups);
    const Tensor4<T> pre = conv2d(shuffled, p.g1_spec(), p.g1);
    const Tensor4<T> act = gelu(pre);

    Tensor4<T> g = conv2d_backward(act, p.g2_spec(), p.g2, grad_out).input;
    g = gelu_backward(pre, g);
    g = conv2d_backward(shuffled, p.g1_spec(), p.g1, g).input;
    return channel_shuffle_backward(g, p.shuffle_groups);
}

template <class T>
Tensor4<T> ccsg_forward(const Tensor4<T>& f_in, const CcsgParams4<T>& p) {
    if (f_in.shape.c != p.channels)
        throw std::invalid_argument("ccsg_forward: input channels " +
                                    std::to_string(f_in.shape.c) + " != " +
                                    std::to_string(p.channels));
    const Tensor4<T> shuffled = channel_shuffle(f_in, p.shuffle_groups);
    const Tensor4<T> transformed = conv2d(shuffled, p.gate_spec(), p.gate);
    const Tensor4<T> gate = ew_mul(gelu(transformed), shuffled);
    return ew_add(f_in, gate);
}

template <class T>
Tensor4<T> ccsg_backward(const Tensor4<T>& f_in, const CcsgParams4<T>& p,
                         const Tensor4<T>& grad_out) {
    const Tensor4<T> shuffled = channel_shuffle(f_in, p.shuffle_groups);
    const Tensor4<T> transformed = conv2d(shuffled, p.gate_spec(), p.gate);
    const Tensor4<T> act = gelu(transformed);

    // gate = act * shuffled; out = f_in + gate
    const Tensor4<T> d_act = ew_mul(grad_out, shuffled);
    Tensor4<T> d_shuffled = ew_mul(grad_out, act);
    const Tensor4<T> d_transformed = gelu_backward(transformed, d_act);
    d_shuffled = ew_add(d_shuffled, conv2d_backward(shuffled, p.gate_spec(), p.gate,
                                                    d_transformed).input);
    return ew_add(grad_out, channel_shuffle_backward(d_shuffled, p.shuffle_groups));
}

template <class T>
Tensor4<T> clkg_context(const Tensor4<T>& f_in, const ClkgParams4<T>& p) {
    if (f_in.shape.c != p.channels)
        throw std::invalid_argument("clkg: input channels " + std::to_string(f_in.shape.c) +
                                    " != " + std::to_string(p.channels));
    return conv2d(conv2d(f_in, p.dw5_spec(), p.dw5), p.dw5d_spec(), p.dw5d);
}

template <class T>
Tensor4<T> clkg_forward(const Tensor4<T>& f_in, const ClkgParams4<T>& p) {
    const Tensor4<T> ctx = clkg_context(f_in, p);
    return ew_add(f_in, ew_mul(gelu(ctx), f_in));
}

template <class T>
Tensor4<T> clkg_backward(const Tensor4<T>& f_in, const ClkgParams4<T>& p,
                         const Tensor4<T>& grad_out) {
    const Tensor4<T> mid = conv2d(f_in, p.dw5_spec(), p.dw5);
    const Tensor4<T> ctx = conv2d(mid, p.dw5d_spec(), p.dw5d);
    const Tensor4<T> act = gelu(ctx);

    // out = f_in + act * f_in
    const Tensor4<T> d_act = ew_mul(grad_out, f_in);
    Tensor4<T> d_in = ew_add(grad_out, ew_mul(grad_out, act));
    Tensor4<T> d_ctx = gelu_backward(ctx, d_act);
    d_ctx = conv2d_backward(mid, p.dw5d_spec(), p.dw5d, d_ctx).input;
    d_ctx = conv2d_backward(f_in, p.dw5_spec(), p.dw5, d_ctx).input;
    return ew_add(d_in, d_ctx);
}

template <class T>
Tensor4<T> msfd_forward(const Tensor4<T>& f_rgb, const MsfdParams4<T>& p) {
    if (f_rgb.shape.c != p.c_hat)
        throw std::invalid_argument("msfd_forward: input channels " +
                                    std::to_string(f_rgb.shape.c) + " != " +
                                    std::to_string(p.c_hat));
    const Tensor4<T> b3 = conv2d(f_rgb, p.dw3_spec(), p.dw3);
    const Tensor4<T> b5 = conv2d(f_rgb, p.dw5_spec(), p.dw5);
    const Tensor4<T> b5d = conv2d(f_rgb, p.dw5d_spec(), p.dw5d);
    const Tensor4<T> cat =
        concat_channels(concat_channels(f_rgb, b3), concat_channels(b5, b5d));
    return csp_forward(cat, p.csp);
}

template <class T>
Tensor4<T> msfd_backward(const Tensor4<T>& f_rgb, const MsfdParams4<T>& p,
                         const Tensor4<T>& grad_out) {
    const Tensor4<T> b3 = conv2d(f_rgb, p.dw3_spec(), p.dw3);
    const Tensor4<T> b5 = conv2d(f_rgb, p.dw5_spec(), p.dw5);
    const Tensor4<T> b5d = conv2d(f_rgb, p.dw5d_spec(), p.dw5d);
    const Tensor4<T> cat =
        concat_channels(concat_channels(f_rgb, b3), concat_channels(b5, b5d));

    const Tensor4<T> d_cat = csp_backward(cat, p.csp, grad_out);
    auto parts = split_channels(d_cat, 4);
    Tensor4<T> d_in = parts[0];
    d_in = ew_add(d_in, conv2d_backward(f_rgb, p.dw3_spec(), p.dw3, parts[1]).input);
    d_in = ew_add(d_in, conv2d_backward(f_rgb, p.dw5_spec(), p.dw5, parts[2]).input);
    d_in = ew_add(d_in, conv2d_backward(f_rgb, p.dw5d_spec(), p.dw5d, parts[3]).input);
    return d_in;
}

template <class T>
Tensor4<T> fusion_block_forward(const Tensor4<T>& f_rgb_hat, const Tensor4<T>& f_ir,
                                const FusionLevelParams4<T>& p) {
    if (f_rgb_hat.shape.c != p.c_ir || f_ir.shape.c != p.c_ir)
        throw std::invalid_argument("fusion_block: both inputs must have c_ir=" +
                                    std::to_string(p.c_ir) + " channels, got " +
                                    f_rgb_hat.shape.str() + " and " + f_ir.shape.str());
    Tensor4<T> x = concat_channels(f_rgb_hat, f_ir);
    x = ccsg_forward(x, p.ccsg);
    x = clkg_forward(x, p.clkg);
    x = csp_forward(x, p.csp_out);
    auto halves = split_channels(x, 2);
    return ew_add(halves[0], halves[1]);
}

template <class T>
std::pair<Tensor4<T>, Tensor4<T>> fusion_block_backward(const Tensor4<T>& f_rgb_hat,
                                                        const Tensor4<T>& f_ir,
                                                        const FusionLevelParams4<T>& p,
                                                        const Tensor4<T>& grad_out) {
    const Tensor4<T> cat = concat_channels(f_rgb_hat, f_ir);
    const Tensor4<T> after_ccsg = ccsg_forward(cat, p.ccsg);
    const Tensor4<T> after_clkg = clkg_forward(after_ccsg, p.clkg);

    // split+add means both halves receive grad_out verbatim
    Tensor4<T> g = concat_channels(grad_out, grad_out);
    g = csp_backward(after_clkg, p.csp_out, g);
    g = clkg_backward(after_ccsg, p.clkg, g);
    g = ccsg_backward(cat, p.ccsg, g);
    auto parts = split_channels(g, 2);
    return {parts[0], parts[1]};
}

const Tensor* FeaturePyramid::find(int level_id) const {
    for (const auto& [id, t] : levels)
        if (id == level_id) return &t;
    return nullptr;
}

FeaturePyramid pyramid_fuse(const FeaturePyramid& rgb, const FeaturePyramid& ir,
                            const FusionParams& params) {
    FeaturePyramid fused;
    fused.modality = Modality::fused;

    const Tensor* prev = nullptr;
    for (const auto& [level_id, p] : params.levels) {
        const Tensor* fr = rgb.find(level_id);
        const Tensor* fi = ir.find(level_id);
        if (!fr || !fi)
            throw std::invalid_argument("pyramid_fuse: missing level " +
                                        std::to_string(level_id) + " in " +
                                        (fr ? "ir" : "rgb") + " pyramid");
        if (fr->shape.n != fi->shape.n)
            throw std::invalid_argument("pyramid_fuse: batch mismatch on n at level " +
                                        std::to_string(level_id));
        if (fr->shape.h != fi->shape.h || fr->shape.w != fi->shape.w)
            throw std::invalid_argument(
                "pyramid_fuse: spatial mismatch on " +
                std::string(fr->shape.h != fi->shape.h ? "h" : "w") + " at level " +
                std::to_string(level_id) + ": " + fr->shape.str() + " vs " + fi->shape.str());
        if (prev && (prev->shape.h != 2 * fr->shape.h || prev->shape.w != 2 * fr->shape.w))
            throw std::invalid_argument("pyramid_fuse: spatial sizes must halve per level, got " +
                                        prev->shape.str() + " then " + fr->shape.str());

        Tensor refined = msfd_forward(*fr, p.msfd);
        fused.levels.emplace_back(level_id, fusion_block_forward(refined, *fi, p));
        prev = fr;
    }
    return fused;
}

// ---- configuration ----------------------------------------------------

void FusionConfig::validate() const {
    if (c_rgb.size() != levels.size() || c_ir.size() != levels.size())
        throw std::invalid_argument("config: c_rgb/c_ir must list one width per level");
    if (resolution < 1) throw std::invalid_argument("config: resolution must be positive");
    for (int lv : levels)
        if (lv < 3 || lv > 5) throw std::invalid_argument("config: level ids must be 3..5");
    for (size_t i = 0; i < levels.size(); ++i)
        if (c_rgb[i] < 1 || c_ir[i] < 1)
            throw std::invalid_argument("config: channel widths must be positive");
}

int FusionConfig::level_stride(int level_id) const {
    switch (level_id) {
        case 3: return 8;
        case 4: return 16;
        case 5: return 32;
        default: throw std::invalid_argument("level_stride: level must be 3..5");
    }
}

std::vector<NamedConv> enumerate_convs(const FusionConfig& cfg) {
    cfg.validate();
    std::vector<NamedConv> out;
    for (size_t i = 0; i < cfg.levels.size(); ++i) {
        const int lv = cfg.levels[i];
        const int64_t ch = cfg.c_rgb[i];
        const int64_t ci = cfg.c_ir[i];
        const int64_t cc = 2 * ci;
        const std::string prefix = "l" + std::to_string(lv) + ".";
        auto push = [&](const std::string& name, ConvSpec spec) {
            out.push_back({prefix + name, spec, lv});
        };
        push("msfd.dw3", ConvSpec::depthwise(ch, 3, 1, cfg.bias));
        push("msfd.dw5", ConvSpec::depthwise(ch, 5, 1, cfg.bias));
        push("msfd.dw5d", ConvSpec::depthwise(ch, 5, 2, cfg.bias));
        push("msfd.csp.g1", ConvSpec{4 * ch, 4 * ch, 1, cfg.msfd_csp_groups, 1, 0, cfg.bias});
        push("msfd.csp.g2", ConvSpec{4 * ch, ci, 1, cfg.msfd_csp_groups, 1, 0, cfg.bias});
        push("ccsg.gate", ConvSpec{cc, cc, 1, cfg.ccsg_conv_groups, 1, 0, cfg.bias});
        push("clkg.dw5", ConvSpec::depthwise(cc, 5, 1, cfg.bias));
        push("clkg.dw5d", ConvSpec::depthwise(cc, 5, 2, cfg.bias));
        push("csp_out.g1", ConvSpec{cc, cc, 1, cfg.tail_csp_groups, 1, 0, cfg.bias});
        push("csp_out.g2", ConvSpec{cc, cc, 1, cfg.tail_csp_groups, 1, 0, cfg.bias});
    }
    return out;
}

namespace {

constexpr size_t kConvsPerLevel = 10;

ConvWeights take(const std::vector<NamedConv>& convs, const WeightProvider& provider,
                 size_t index) {
    ConvWeights w = provider(index, convs[index]);
    const ConvSpec& spec = convs[index].spec;
    const Shape4 want{spec.c_out, spec.c_in / spec.groups, spec.k, spec.k};
    if (!(w.weight.shape == want))
        throw std::invalid_argument("params: weight for " + convs[index].name + " has shape " +
                                    w.weight.shape.str() + ", expected " + want.str());
    if (spec.has_bias && static_cast<int64_t>(w.bias.size()) != spec.c_out)
        throw std::invalid_argument("params: bias for " + convs[index].name + " has length " +
                                    std::to_string(w.bias.size()) + ", expected " +
                                    std::to_string(spec.c_out));
    return w;
}

}  // namespace

FusionLevelParams build_level_params(const FusionConfig& cfg, size_t level_index,
                                     const WeightProvider& provider) {
    cfg.validate();
    if (level_index >= cfg.levels.size())
        throw std::invalid_argument("build_level_params: level index out of range");
    const auto convs = enumerate_convs(cfg);
    const size_t base = level_index * kConvsPerLevel;
    const int64_t ch = cfg.c_rgb[level_index];
    const int64_t ci = cfg.c_ir[level_index];

    FusionLevelParams p;
    p.c_rgb = ch;
    p.c_ir = ci;
    p.msfd.c_hat = ch;
    p.msfd.dw3 = take(convs, provider, base + 0);
    p.msfd.dw5 = take(convs, provider, base + 1);
    p.msfd.dw5d = take(convs, provider, base + 2);
    p.msfd.csp.c_in = 4 * ch;
    p.msfd.csp.c_mid = 4 * ch;
    p.msfd.csp.c_out = ci;
    p.msfd.csp.shuffle_groups = cfg.msfd_csp_shuffle_groups;
    p.msfd.csp.groups_g1 = cfg.msfd_csp_groups;
    p.msfd.csp.groups_g2 = cfg.msfd_csp_groups;
    p.msfd.csp.g1 = take(convs, provider, base + 3);
    p.msfd.csp.g2 = take(convs, provider, base + 4);
    p.ccsg.channels = 2 * ci;
    p.ccsg.shuffle_groups = cfg.ccsg_shuffle_groups;
    p.ccsg.conv_groups = cfg.ccsg_conv_groups;
    p.ccsg.gate = take(convs, provider, base + 5);
    p.clkg.channels = 2 * ci;
    p.clkg.dw5 = take(convs, provider, base + 6);
    p.clkg.dw5d = take(convs, provider, base + 7);
    p.csp_out.c_in = 2 * ci;
    p.csp_out.c_mid = 2 * ci;
    p.csp_out.c_out = 2 * ci;
    p.csp_out.shuffle_groups = cfg.tail_csp_shuffle_groups;
    p.csp_out.groups_g1 = cfg.tail_csp_groups;
    p.csp_out.groups_g2 = cfg.tail_csp_groups;
    p.csp_out.g1 = take(convs, provider, base + 8);
    p.csp_out.g2 = take(convs, provider, base + 9);
    return p;
}

FusionParams build_fusion_params(const FusionConfig& cfg, const WeightProvider& provider) {
    FusionParams out;
    for (size_t i = 0; i < cfg.levels.size(); ++i)
        out.levels.emplace_back(cfg.levels[i], build_level_params(cfg, i, provider));
    return out;
}

ConvWeights init_conv_weights(const ConvSpec& spec, Seed seed) {
    spec.validate();
    const double fan_in = static_cast<double>(spec.c_in / spec.groups) *
                          static_cast<double>(spec.k) * static_cast<double>(spec.k);
    const float bound = static_cast<float>(std::sqrt(1.0 / fan_in));
    ConvWeights w;
    w.weight = seeded_uniform({spec.c_out, spec.c_in / spec.groups, spec.k, spec.k}, -bound,
                              bound, sub_seed(seed, 0));
    if (spec.has_bias) {
        const Tensor b = seeded_uniform({1, spec.c_out, 1, 1}, -bound, bound, sub_seed(seed, 1));
        w.bias.assign(b.data.begin(), b.data.end());
    }
    return w;
}

FusionParams init_fusion_params(const FusionConfig& cfg, Seed base) {
    return build_fusion_params(cfg, [&](size_t index, const NamedConv& nc) {
        return init_conv_weights(nc.spec, sub_seed(base, index));
    });
}

DConvWeights widen_weights(const ConvWeights& w) {
    DConvWeights out;
    out.weight = widen(w.weight);
    out.bias.assign(w.bias.begin(), w.bias.end());
    return out;
}

CspParams4<double> widen_params(const CspParams& p) {
    CspParams4<double> d;
    d.c_in = p.c_in;
    d.c_mid = p.c_mid;
    d.c_out = p.c_out;
    d.shuffle_groups = p.shuffle_groups;
    d.groups_g1 = p.groups_g1;
    d.groups_g2 = p.groups_g2;
    d.g1 = widen_weights(p.g1);
    d.g2 = widen_weights(p.g2);
    return d;
}

CcsgParams4<double> widen_params(const CcsgParams& p) {
    CcsgParams4<double> d;
    d.channels = p.channels;
    d.shuffle_groups = p.shuffle_groups;
    d.conv_groups = p.conv_groups;
    d.gate = widen_weights(p.gate);
    return d;
}

ClkgParams4<double> widen_params(const ClkgParams& p) {
    ClkgParams4<double> d;
    d.channels = p.channels;
    d.dw5 = widen_weights(p.dw5);
    d.dw5d = widen_weights(p.dw5d);
    return d;
}

MsfdParams4<double> widen_params(const MsfdParams& p) {
    MsfdParams4<double> d;
    d.c_hat = p.c_hat;
    d.dw3 = widen_weights(p.dw3);
    d.dw5 = widen_weights(p.dw5);
    d.dw5d = widen_weights(p.dw5d);
    d.csp = widen_params(p.csp);
    return d;
}

FusionLevelParams4<double> widen_params(const FusionLevelParams& p) {
    FusionLevelParams4<double> d;
    d.c_rgb = p.c_rgb;
    d.c_ir = p.c_ir;
    d.msfd = widen_params(p.msfd);
    d.ccsg = widen_params(p.ccsg);
    d.clkg = widen_params(p.clkg);
    d.csp_out = widen_params(p.csp_out);
    return d;
}

template struct CspParams4<float>;
template struct CspParams4<double>;
template struct CcsgParams4<float>;
template struct CcsgParams4<double>;

template Tensor4<float> csp_forward(const Tensor4<float>&, const CspParams4<float>&);
template Tensor4<double> csp_forward(const Tensor4<double>&, const CspParams4<double>&);
template Tensor4<float> csp_backward(const Tensor4<float>&, const CspParams4<float>&,
                                     const Tensor4<float>&);
template Tensor4<double> csp_backward(const Tensor4<double>&, const CspParams4<double>&,
                                      const Tensor4<double>&);
template Tensor4<float> ccsg_forward(const Tensor4<float>&, const CcsgParams4<float>&);
template Tensor4<double> ccsg_forward(const Tensor4<double>&, const CcsgParams4<double>&);
template Tensor4<float> ccsg_backward(const Tensor4<float>&, const CcsgParams4<float>&,
                                      const Tensor4<float>&);
template Tensor4<double> ccsg_backward(const Tensor4<double>&, const CcsgParams4<double>&,
                                       const Tensor4<double>&);
template Tensor4<float> clkg_context(const Tensor4<float>&, const ClkgParams4<float>&);
template Tensor4<double> clkg_context(const Tensor4<double>&, const ClkgParams4<double>&);
template Tensor4<float> clkg_forward(const Tensor4<float>&, const ClkgParams4<float>&);
template Tensor4<double> clkg_forward(const Tensor4<double>&, const ClkgParams4<double>&);
template Tensor4<float> clkg_backward(const Tensor4<float>&, const ClkgParams4<float>&,
                                      const Tensor4<float>&);
template Tensor4<double> clkg_backward(const Tensor4<double>&, const ClkgParams4<double>&,
                                       const Tensor4<double>&);
template Tensor4<float> msfd_forward(const Tensor4<float>&, const MsfdParams4<float>&);
template Tensor4<double> msfd_forward(const Tensor4<double>&, const MsfdParams4<double>&);
template Tensor4<float> msfd_backward(const Tensor4<float>&, const MsfdParams4<float>&,
                                      const Tensor4<float>&);
template Tensor4<double> msfd_backward(const Tensor4<double>&, const MsfdParams4<double>&,
                                       const Tensor4<double>&);
template Tensor4<float> fusion_block_forward(const Tensor4<float>&, const Tensor4<float>&,
                                             const FusionLevelParams4<float>&);
template Tensor4<double> fusion_block_forward(const Tensor4<double>&, const Tensor4<double>&,
                                              const FusionLevelParams4<double>&);
template std::pair<Tensor4<float>, Tensor4<float>> fusion_block_backward(
    const Tensor4<float>&, const Tensor4<float>&, const FusionLevelParams4<float>&,
    const Tensor4<float>&);
template std::pair<Tensor4<double>, Tensor4<double>> fusion_block_backward(
    const Tensor4<double>&, const Tensor4<double>&, const FusionLevelParams4<double>&,
    const Tensor4<double>&);

}  // namespace icf
