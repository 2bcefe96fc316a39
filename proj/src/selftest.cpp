#include "icf/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "icf/complexity.hpp"
#include "icf/gradcheck.hpp"

namespace icf {

namespace {

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape && a.data == b.data;
}

bool tensor_suite(Seed seed) {
    const Tensor t = seeded_uniform({2, 12, 5, 4}, -2.0f, 3.0f, sub_seed(seed, 0));
    for (int64_t parts : {2, 3, 4}) {
        const auto pieces = split_channels(t, parts);
        Tensor glued = pieces[0];
        for (size_t i = 1; i < pieces.size(); ++i) glued = concat_channels(glued, pieces[i]);
        if (!bitwise_equal(glued, t)) return false;
    }
    const Tensor again = seeded_uniform({2, 12, 5, 4}, -2.0f, 3.0f, sub_seed(seed, 0));
    if (!bitwise_equal(t, again)) return false;
    for (float v : t.data)
        if (!(v >= -2.0f && v < 3.0f)) return false;
    return all_finite(t);
}

bool shuffle_suite() {
    const std::pair<int64_t, int64_t> cases[] = {{4, 2}, {6, 3}, {8, 2}, {8, 4}, {12, 3}};
    for (const auto& [c, g] : cases) {
        const Tensor t = seeded_uniform({1, c, 3, 3}, 0.0f, 1.0f, Seed{uint64_t(c * 100 + g)});
        const Tensor back = channel_shuffle(channel_shuffle(t, g), c / g);
        if (!bitwise_equal(back, t)) return false;
        Tensor sorted_in = t, sorted_out = channel_shuffle(t, g);
        std::sort(sorted_in.data.begin(), sorted_in.data.end());
        std::sort(sorted_out.data.begin(), sorted_out.data.end());
        if (sorted_in.data != sorted_out.data) return false;
    }
    return true;
}

bool conv_suite(Seed seed) {
    // optimized kernel must match the direct loop bitwise
    const ConvSpec g1{8, 8, 1, 2, 1, 0, true};
    const ConvWeights w1 = init_conv_weights(g1, sub_seed(seed, 1));
    const Tensor x = seeded_uniform({2, 8, 7, 5}, -1.0f, 1.0f, sub_seed(seed, 2));
    if (!bitwise_equal(conv2d(x, g1, w1), conv2d_reference(x, g1, w1))) return false;

    // linearity on a bias-free spec
    const ConvSpec spec = ConvSpec::same(4, 6, 3, 2, 1, false);
    const ConvWeights w = init_conv_weights(spec, sub_seed(seed, 3));
    const Tensor a = seeded_uniform({1, 4, 6, 6}, -1.0f, 1.0f, sub_seed(seed, 4));
    const Tensor b = seeded_uniform({1, 4, 6, 6}, -1.0f, 1.0f, sub_seed(seed, 5));
    Tensor combo(a.shape);
    for (size_t i = 0; i < combo.data.size(); ++i)
        combo.data[i] = 2.0f * a.data[i] + 0.5f * b.data[i];
    const Tensor lhs = conv2d(combo, spec, w);
    const Tensor ya = conv2d(a, spec, w), yb = conv2d(b, spec, w);
    for (size_t i = 0; i < lhs.data.size(); ++i) {
        const double want = 2.0 * ya.data[i] + 0.5 * yb.data[i];
        const double scale = std::max({std::abs(want), 2.0 * std::abs(ya.data[i]),
                                       0.5 * std::abs(yb.data[i]), 1e-3});
        if (std::abs(lhs.data[i] - want) / scale > 1e-6) return false;
    }
    return true;
}

bool gelu_suite(Seed seed) {
    const Tensor x = seeded_uniform({1, 4, 8, 8}, -6.0f, 6.0f, sub_seed(seed, 6));
    for (float v : x.data) {
        const double diff = gelu_scalar(v) - gelu_scalar(-static_cast<double>(v));
        if (std::abs(diff - v) > 1e-7) return false;
    }
    double prev = gelu_scalar(0.0);
    for (double v = 0.0; v <= 8.0; v += 0.05) {
        const double cur = gelu_scalar(v);
        if (cur < prev) return false;
        prev = cur;
    }
    return true;
}

bool residual_suite(Seed seed) {
    const Tensor x = seeded_uniform({1, 8, 6, 6}, -2.0f, 2.0f, sub_seed(seed, 7));

    CcsgParams ccsg;
    ccsg.channels = 8;
    ccsg.shuffle_groups = 2;
    ccsg.conv_groups = 2;
    ccsg.gate = zero_conv_weights(ccsg.gate_spec());
    if (!bitwise_equal(ccsg_forward(x, ccsg), x)) return false;

    ClkgParams clkg;
    clkg.channels = 8;
    clkg.dw5 = zero_conv_weights(ConvSpec::depthwise(8, 5, 1, true));
    clkg.dw5d = zero_conv_weights(ConvSpec::depthwise(8, 5, 2, true));
    if (!bitwise_equal(clkg_forward(x, clkg), x)) return false;

    // degenerate fusion block: gates zeroed, projection passing the GELU
    // saturation domain through untouched => output is the modality sum
    FusionLevelParams p;
    p.c_rgb = 8;
    p.c_ir = 8;
    p.ccsg.channels = 16;
    p.ccsg.shuffle_groups = 2;
    p.ccsg.conv_groups = 2;
    p.ccsg.gate = zero_conv_weights(p.ccsg.gate_spec());
    p.clkg.channels = 16;
    p.clkg.dw5 = zero_conv_weights(ConvSpec::depthwise(16, 5, 1, true));
    p.clkg.dw5d = zero_conv_weights(ConvSpec::depthwise(16, 5, 2, true));
    p.csp_out.c_in = p.csp_out.c_mid = p.csp_out.c_out = 16;
    p.csp_out.shuffle_groups = 1;
    p.csp_out.groups_g1 = p.csp_out.groups_g2 = 1;
    p.csp_out.g1 = identity_1x1_weights(16, 1, true);
    p.csp_out.g2 = identity_1x1_weights(16, 1, true);

    const Tensor a = seeded_uniform({1, 8, 5, 5}, 16.0f, 32.0f, sub_seed(seed, 8));
    const Tensor b = seeded_uniform({1, 8, 5, 5}, 16.0f, 32.0f, sub_seed(seed, 9));
    return bitwise_equal(fusion_block_forward(a, b, p), ew_add(a, b));
}

bool locality_suite(Seed seed) {
    ClkgParams clkg;
    clkg.channels = 2;
    clkg.dw5 = zero_conv_weights(ConvSpec::depthwise(2, 5, 1, true));
    clkg.dw5d = zero_conv_weights(ConvSpec::depthwise(2, 5, 2, true));
    std::fill(clkg.dw5.weight.data.begin(), clkg.dw5.weight.data.end(), 1.0f);
    std::fill(clkg.dw5d.weight.data.begin(), clkg.dw5d.weight.data.end(), 1.0f);

    const Tensor ctx = clkg_context(impulse<float>({1, 2, 21, 21}, 0, 0, 10, 10), clkg);
    for (int64_t y = 0; y < 21; ++y)
        for (int64_t x = 0; x < 21; ++x) {
            const bool inside = std::abs(y - 10) <= 6 && std::abs(x - 10) <= 6;
            const float v = ctx.at(0, 0, y, x);
            if (inside && v == 0.0f) return false;
            if (!inside && v != 0.0f) return false;
        }

    // a single-pixel perturbation must stay inside the 13x13 window
    ClkgParams rnd;
    rnd.channels = 2;
    rnd.dw5 = init_conv_weights(ConvSpec::depthwise(2, 5, 1, true), sub_seed(seed, 10));
    rnd.dw5d = init_conv_weights(ConvSpec::depthwise(2, 5, 2, true), sub_seed(seed, 11));
    const Tensor base = seeded_uniform({1, 2, 21, 21}, -1.0f, 1.0f, sub_seed(seed, 12));
    Tensor poked = base;
    poked.at(0, 1, 10, 10) += 0.75f;
    const Tensor y0 = clkg_forward(base, rnd), y1 = clkg_forward(poked, rnd);
    for (int64_t c = 0; c < 2; ++c)
        for (int64_t y = 0; y < 21; ++y)
            for (int64_t x = 0; x < 21; ++x) {
                const bool window = std::abs(y - 10) <= 6 && std::abs(x - 10) <= 6;
                if (!window && y0.at(0, c, y, x) != y1.at(0, c, y, x)) return false;
            }
    return true;
}

bool wavelet_suite(Seed seed) {
    GrayImage img(32, 32);
    const Tensor noise = seeded_uniform({1, 1, 32, 32}, 0.0f, 1.0f, sub_seed(seed, 13));
    for (size_t i = 0; i < img.pix.size(); ++i) img.pix[i] = noise.data[i];

    const SubbandSet s = haar_dwt2(img);
    const GrayImage back = haar_idwt2(s);
    for (size_t i = 0; i < img.pix.size(); ++i)
        if (std::abs(back.pix[i] - img.pix[i]) > 1e-12) return false;

    double in_energy = 0.0;
    for (double v : img.pix) in_energy += v * v;
    const EnergyReport e = subband_energy(s);
    if (std::abs(e.total() - in_energy) / in_energy > 1e-9) return false;

    GrayImage vert(16, 16);  // rows constant => e_hl == 0
    for (int64_t y = 0; y < 16; ++y)
        for (int64_t x = 0; x < 16; ++x) vert.at(y, x) = static_cast<double>(y) / 15.0;
    return subband_energy(haar_dwt2(vert)).e_hl == 0.0;
}

bool complexity_suite() {
    const ConvSpec specs[] = {ConvSpec::same(8, 8, 3, 2, 1, false),
                              ConvSpec::depthwise(16, 5, 2, false),
                              ConvSpec{12, 24, 1, 4, 1, 0, false}};
    for (const auto& spec : specs)
        if (count_macs(spec, 10, 7) != count_params(spec) * 70) return false;
    return true;
}

bool io_suite(Seed seed) {
    const Tensor t = seeded_uniform({2, 3, 4, 5}, -10.0f, 10.0f, sub_seed(seed, 14));
    std::stringstream buf;
    write_tensor(buf, t);
    const Tensor back = read_tensor(buf, "<memory>");
    return back.shape == t.shape && back.data == t.data;
}

}  // namespace

bool run_selftest(Seed seed, ReportDoc& doc) {
    struct Suite {
        const char* name;
        std::function<bool()> run;
    };
    const Suite suites[] = {
        {"tensor.concat_split_roundtrip", [&] { return tensor_suite(seed); }},
        {"nn.shuffle_algebra", [] { return shuffle_suite(); }},
        {"nn.conv_kernels", [&] { return conv_suite(seed); }},
        {"nn.gelu_identities", [&] { return gelu_suite(seed); }},
        {"fusion.residual_identities", [&] { return residual_suite(seed); }},
        {"fusion.clkg_locality", [&] { return locality_suite(seed); }},
        {"wavelet.reconstruction", [&] { return wavelet_suite(seed); }},
        {"complexity.macs_params_identity", [] { return complexity_suite(); }},
        {"io.tensor_roundtrip", [&] { return io_suite(seed); }},
    };

    bool all_ok = true;
    for (const Suite& s : suites) {
        bool ok = false;
        try {
            ok = s.run();
        } catch (const std::exception&) {
            ok = false;
        }
        doc.add(s.name, ok ? "pass" : "fail");
        all_ok = all_ok && ok;
    }
    doc.add("result", all_ok ? "pass" : "fail");
    return all_ok;
}

}  // namespace icf
