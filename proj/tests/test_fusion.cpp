#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "icf/gradcheck.hpp"

using namespace icf;

namespace {

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    return a.shape == b.shape && a.data == b.data;
}

double rel_err(double a, double b) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

MsfdParams make_msfd(int64_t c_hat, int64_t c_out, Seed seed) {
    MsfdParams p;
    p.c_hat = c_hat;
    p.dw3 = init_conv_weights(ConvSpec::depthwise(c_hat, 3, 1, true), sub_seed(seed, 0));
    p.dw5 = init_conv_weights(ConvSpec::depthwise(c_hat, 5, 1, true), sub_seed(seed, 1));
    p.dw5d = init_conv_weights(ConvSpec::depthwise(c_hat, 5, 2, true), sub_seed(seed, 2));
    p.csp.c_in = 4 * c_hat;
    p.csp.c_mid = 4 * c_hat;
    p.csp.c_out = c_out;
    p.csp.shuffle_groups = 4;
    p.csp.groups_g1 = 4;
    p.csp.groups_g2 = 4;
    p.csp.g1 = init_conv_weights(p.csp.g1_spec(), sub_seed(seed, 3));
    p.csp.g2 = init_conv_weights(p.csp.g2_spec(), sub_seed(seed, 4));
    return p;
}

CcsgParams make_ccsg(int64_t c, Seed seed) {
    CcsgParams p;
    p.channels = c;
    p.shuffle_groups = 2;
    p.conv_groups = 2;
    p.gate = init_conv_weights(p.gate_spec(), seed);
    return p;
}

ClkgParams make_clkg(int64_t c, Seed seed) {
    ClkgParams p;
    p.channels = c;
    p.dw5 = init_conv_weights(ConvSpec::depthwise(c, 5, 1, true), sub_seed(seed, 0));
    p.dw5d = init_conv_weights(ConvSpec::depthwise(c, 5, 2, true), sub_seed(seed, 1));
    return p;
}

ClkgParams zero_clkg(int64_t c) {
    ClkgParams p;
    p.channels = c;
    p.dw5 = zero_conv_weights(ConvSpec::depthwise(c, 5, 1, true));
    p.dw5d = zero_conv_weights(ConvSpec::depthwise(c, 5, 2, true));
    return p;
}

// fusion block with zero gates and a pass-through tail projection
FusionLevelParams degenerate_block(int64_t c_ir) {
    FusionLevelParams p;
    p.c_rgb = c_ir;
    p.c_ir = c_ir;
    p.ccsg.channels = 2 * c_ir;
    p.ccsg.shuffle_groups = 2;
    p.ccsg.conv_groups = 2;
    p.ccsg.gate = zero_conv_weights(p.ccsg.gate_spec());
    p.clkg = zero_clkg(2 * c_ir);
    p.csp_out.c_in = p.csp_out.c_mid = p.csp_out.c_out = 2 * c_ir;
    p.csp_out.shuffle_groups = 1;
    p.csp_out.groups_g1 = p.csp_out.groups_g2 = 1;
    p.csp_out.g1 = identity_1x1_weights(2 * c_ir, 1, true);
    p.csp_out.g2 = identity_1x1_weights(2 * c_ir, 1, true);
    return p;
}

}  // namespace

TEST_CASE("msfd concatenates four branches and projects to c_out") {
    const MsfdParams p = make_msfd(8, 12, Seed{1});
    const Tensor x = seeded_uniform({1, 8, 16, 16}, -1.0f, 1.0f, Seed{2});
    const Tensor y = msfd_forward(x, p);
    CHECK(y.shape == Shape4{1, 12, 16, 16});
}

TEST_CASE("msfd with all-zero weights and biases yields zero") {
    MsfdParams p;
    p.c_hat = 4;
    p.dw3 = zero_conv_weights(ConvSpec::depthwise(4, 3, 1, true));
    p.dw5 = zero_conv_weights(ConvSpec::depthwise(4, 5, 1, true));
    p.dw5d = zero_conv_weights(ConvSpec::depthwise(4, 5, 2, true));
    p.csp.c_in = p.csp.c_mid = 16;
    p.csp.c_out = 8;
    p.csp.shuffle_groups = 4;
    p.csp.groups_g1 = p.csp.groups_g2 = 4;
    p.csp.g1 = zero_conv_weights(p.csp.g1_spec());
    p.csp.g2 = zero_conv_weights(p.csp.g2_spec());
    const Tensor y = msfd_forward(seeded_uniform({1, 4, 6, 6}, -2.0f, 2.0f, Seed{3}), p);
    CHECK(bitwise_equal(y, Tensor::zeros({1, 8, 6, 6})));
}

TEST_CASE("msfd rejects the wrong input width") {
    const MsfdParams p = make_msfd(8, 8, Seed{4});
    CHECK_THROWS_AS(msfd_forward(Tensor({1, 6, 8, 8}), p), std::invalid_argument);
}

TEST_CASE("csp with identity projections reduces to GELU") {
    CspParams p;
    p.c_in = p.c_mid = p.c_out = 6;
    p.shuffle_groups = 1;
    p.groups_g1 = p.groups_g2 = 1;
    p.g1 = identity_1x1_weights(6, 1, true);
    p.g2 = identity_1x1_weights(6, 1, true);
    const Tensor x = seeded_uniform({1, 6, 5, 5}, -2.0f, 2.0f, Seed{5});
    CHECK(bitwise_equal(csp_forward(x, p), gelu(x)));
}

TEST_CASE("csp with zero g1 broadcasts the g2 bias") {
    CspParams p;
    p.c_in = p.c_mid = p.c_out = 4;
    p.shuffle_groups = 2;
    p.groups_g1 = p.groups_g2 = 2;
    p.g1 = zero_conv_weights(p.g1_spec());
    p.g2 = zero_conv_weights(p.g2_spec());
    p.g2.bias = {1.5f, -0.25f, 0.0f, 3.0f};
    const Tensor y = csp_forward(seeded_uniform({1, 4, 3, 3}, -1.0f, 1.0f, Seed{6}), p);
    for (int64_t c = 0; c < 4; ++c)
        for (int64_t i = 0; i < 3; ++i)
            for (int64_t j = 0; j < 3; ++j) CHECK(y.at(0, c, i, j) == p.g2.bias[c]);

    // bias-free variant collapses to zeros
    CspParams q = p;
    q.g1 = zero_conv_weights(ConvSpec{4, 4, 1, 2, 1, 0, false});
    q.g2 = zero_conv_weights(ConvSpec{4, 4, 1, 2, 1, 0, false});
    const Tensor z = csp_forward(seeded_uniform({1, 4, 3, 3}, -1.0f, 1.0f, Seed{7}), q);
    CHECK(bitwise_equal(z, Tensor::zeros({1, 4, 3, 3})));
}

TEST_CASE("csp validates divisibility") {
    CspParams p;
    p.c_in = p.c_mid = p.c_out = 6;
    p.shuffle_groups = 4;  // 6 % 4 != 0
    p.groups_g1 = p.groups_g2 = 1;
    p.g1 = identity_1x1_weights(6, 1, true);
    p.g2 = identity_1x1_weights(6, 1, true);
    CHECK_THROWS_AS(csp_forward(Tensor({1, 6, 2, 2}), p), std::invalid_argument);
}

TEST_CASE("ccsg with a zero gate path is the bitwise identity") {
    CcsgParams p;
    p.channels = 8;
    p.shuffle_groups = 2;
    p.conv_groups = 2;
    p.gate = zero_conv_weights(p.gate_spec());
    const Tensor x = seeded_uniform({2, 8, 5, 5}, -2.0f, 2.0f, Seed{8});
    CHECK(bitwise_equal(ccsg_forward(x, p), x));
}

TEST_CASE("ccsg closed form on constant input with identity gate conv") {
    CcsgParams p;
    p.channels = 4;
    p.shuffle_groups = 1;
    p.conv_groups = 4;  // per-channel identity
    p.gate = identity_1x1_weights(4, 4, true);
    const float c = 0.8f;
    const Tensor x = Tensor::full({1, 4, 3, 3}, c);
    const Tensor y = ccsg_forward(x, p);
    const float want = static_cast<float>(c + gelu_scalar(c) * c);
    for (float v : y.data) CHECK(v == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("clkg with zero kernels is the bitwise identity") {
    const Tensor x = seeded_uniform({1, 6, 7, 7}, -3.0f, 3.0f, Seed{9});
    CHECK(bitwise_equal(clkg_forward(x, zero_clkg(6)), x));
}

TEST_CASE("clkg context support is exactly 13x13 for all-ones kernels") {
    ClkgParams p = zero_clkg(1);
    std::fill(p.dw5.weight.data.begin(), p.dw5.weight.data.end(), 1.0f);
    std::fill(p.dw5d.weight.data.begin(), p.dw5d.weight.data.end(), 1.0f);
    const Tensor ctx = clkg_context(impulse<float>({1, 1, 19, 19}, 0, 0, 9, 9), p);
    for (int64_t y = 0; y < 19; ++y)
        for (int64_t x = 0; x < 19; ++x) {
            const bool inside = std::abs(y - 9) <= 6 && std::abs(x - 9) <= 6;
            if (inside)
                CHECK(ctx.at(0, 0, y, x) > 0.0f);
            else
                CHECK(ctx.at(0, 0, y, x) == 0.0f);
        }
}

TEST_CASE("clkg gate is bounded by the activated context times the input") {
    const ClkgParams p = make_clkg(4, Seed{10});
    const Tensor x = seeded_uniform({1, 4, 9, 9}, -2.0f, 2.0f, Seed{11});
    const Tensor y = clkg_forward(x, p);
    const Tensor act = gelu(clkg_context(x, p));
    for (size_t i = 0; i < y.data.size(); ++i) {
        const double lhs = std::abs(y.data[i] - x.data[i]);
        const double rhs = std::abs(act.data[i]) * std::abs(x.data[i]);
        CHECK(lhs <= rhs * (1.0 + 1e-6) + 1e-7);
    }
}

TEST_CASE("clkg perturbations stay inside a 13x13 window plus the residual") {
    const ClkgParams p = make_clkg(2, Seed{12});
    const Tensor base = seeded_uniform({1, 2, 21, 21}, -1.0f, 1.0f, Seed{13});
    Tensor poked = base;
    poked.at(0, 0, 10, 10) += 0.5f;
    const Tensor y0 = clkg_forward(base, p);
    const Tensor y1 = clkg_forward(poked, p);
    for (int64_t c = 0; c < 2; ++c)
        for (int64_t y = 0; y < 21; ++y)
            for (int64_t x = 0; x < 21; ++x) {
                const bool window = std::abs(y - 10) <= 6 && std::abs(x - 10) <= 6;
                if (!window) CHECK(y0.at(0, c, y, x) == y1.at(0, c, y, x));
            }
}

TEST_CASE("fusion block: degenerate configuration returns the modality sum") {
    const FusionLevelParams p = degenerate_block(8);
    // GELU saturates for inputs this large, so the tail projection is exact
    const Tensor a = seeded_uniform({1, 8, 5, 5}, 16.0f, 32.0f, Seed{14});
    const Tensor b = seeded_uniform({1, 8, 5, 5}, 16.0f, 32.0f, Seed{15});
    CHECK(bitwise_equal(fusion_block_forward(a, b, p), ew_add(a, b)));
}

TEST_CASE("fusion block: paired +/- projections recover the sum on generic inputs") {
    // G1 stacks (x, -x); G2 takes the difference of the halves, so the erf
    // reflection identity gelu(x) - gelu(-x) = x makes the tail an identity
    // up to f32 rounding.
    FusionLevelParams p = degenerate_block(4);
    p.csp_out.c_mid = 16;
    p.csp_out.g1 = zero_conv_weights(ConvSpec{8, 16, 1, 1, 1, 0, true});
    for (int64_t i = 0; i < 8; ++i) {
        p.csp_out.g1.weight.at(i, i, 0, 0) = 1.0f;
        p.csp_out.g1.weight.at(8 + i, i, 0, 0) = -1.0f;
    }
    p.csp_out.g2 = zero_conv_weights(ConvSpec{16, 8, 1, 1, 1, 0, true});
    for (int64_t i = 0; i < 8; ++i) {
        p.csp_out.g2.weight.at(i, i, 0, 0) = 1.0f;
        p.csp_out.g2.weight.at(i, 8 + i, 0, 0) = -1.0f;
    }
    const Tensor a = seeded_uniform({1, 4, 6, 6}, -2.0f, 2.0f, Seed{16});
    const Tensor b = seeded_uniform({1, 4, 6, 6}, -2.0f, 2.0f, Seed{17});
    const Tensor y = fusion_block_forward(a, b, p);
    const Tensor want = ew_add(a, b);
    for (size_t i = 0; i < y.data.size(); ++i)
        CHECK(std::abs(y.data[i] - want.data[i]) <=
              2e-7 * std::max(1.0f, std::abs(want.data[i])));
}

TEST_CASE("fusion block shape contract") {
    FusionConfig cfg;
    cfg.levels = {3};
    cfg.c_rgb = {16};
    cfg.c_ir = {16};
    const FusionLevelParams p = init_fusion_params(cfg, Seed{18}).levels[0].second;
    const Tensor a = seeded_uniform({1, 16, 20, 20}, -1.0f, 1.0f, Seed{19});
    const Tensor b = seeded_uniform({1, 16, 20, 20}, -1.0f, 1.0f, Seed{20});
    CHECK(fusion_block_forward(a, b, p).shape == Shape4{1, 16, 20, 20});
    CHECK_THROWS_AS(fusion_block_forward(a, Tensor({1, 8, 20, 20}), p), std::invalid_argument);
}

TEST_CASE("blocks preserve spatial dimensions") {
    const Tensor x = seeded_uniform({1, 8, 11, 7}, -1.0f, 1.0f, Seed{21});
    CHECK(ccsg_forward(x, make_ccsg(8, Seed{22})).shape == x.shape);
    CHECK(clkg_forward(x, make_clkg(8, Seed{23})).shape == x.shape);
    CHECK(msfd_forward(x, make_msfd(8, 8, Seed{24})).shape == x.shape);
}

TEST_CASE("batch processing equals per-sample processing bitwise") {
    const CcsgParams ccsg = make_ccsg(8, Seed{25});
    const ClkgParams clkg = make_clkg(8, Seed{26});
    const Tensor s0 = seeded_uniform({1, 8, 6, 6}, -1.0f, 1.0f, Seed{27});
    const Tensor s1 = seeded_uniform({1, 8, 6, 6}, -1.0f, 1.0f, Seed{28});
    Tensor batch({2, 8, 6, 6});
    std::copy(s0.data.begin(), s0.data.end(), batch.data.begin());
    std::copy(s1.data.begin(), s1.data.end(), batch.data.begin() + s0.numel());

    const Tensor yb = clkg_forward(ccsg_forward(batch, ccsg), clkg);
    const Tensor y0 = clkg_forward(ccsg_forward(s0, ccsg), clkg);
    const Tensor y1 = clkg_forward(ccsg_forward(s1, ccsg), clkg);
    CHECK(std::equal(y0.data.begin(), y0.data.end(), yb.data.begin()));
    CHECK(std::equal(y1.data.begin(), y1.data.end(), yb.data.begin() + y0.numel()));
}

TEST_CASE("block gradients match finite differences") {
    const auto results = run_gradcheck_suite(Seed{31});
    for (const auto& r : results) {
        INFO(r.block, " max_rel_err=", r.max_rel_err);
        CHECK(r.max_rel_err <= 1e-5);
    }
    CHECK(gradcheck_passed(results));
}

TEST_CASE("msfd gradient on a (1,4,6,6) input matches finite differences") {
    const MsfdParams p = make_msfd(4, 4, Seed{32});
    const MsfdParams4<double> p64 = widen_params(p);
    const DTensor x = widen(seeded_uniform({1, 4, 6, 6}, -1.0f, 1.0f, Seed{33}));
    const DTensor analytic = msfd_backward(x, p64, widen(Tensor::full({1, 4, 6, 6}, 1.0f)));
    const auto f = [&](const DTensor& v) {
        const DTensor y = msfd_forward(v, p64);
        double acc = 0;
        for (double d : y.data) acc += d;
        for (double d : v.data) acc += 4.0 * d;
        return acc;
    };
    std::vector<Coord4> coords;
    for (int64_t c = 0; c < 4; ++c)
        for (int64_t i = 0; i < 6; ++i) coords.push_back({0, c, i, (i + c) % 6});
    const auto numeric = finite_diff_grad(f, x, coords, 1e-3);
    for (size_t i = 0; i < coords.size(); ++i) {
        const Coord4& c = coords[i];
        CHECK(rel_err(analytic.at(c.n, c.c, c.h, c.w) + 4.0, numeric[i]) <= 1e-5);
    }
}

TEST_CASE("ccsg and clkg gradients on their own input shapes") {
    struct Dir {
        DTensor analytic;
        std::function<double(const DTensor&)> f;
        DTensor x;
    };
    std::vector<Dir> dirs;

    {
        CcsgParams p = make_ccsg(8, Seed{40});
        const CcsgParams4<double> p64 = widen_params(p);
        const DTensor x = widen(seeded_uniform({1, 8, 5, 5}, -1.0f, 1.0f, Seed{41}));
        dirs.push_back({ccsg_backward(x, p64, widen(Tensor::full({1, 8, 5, 5}, 1.0f))),
                        [p64](const DTensor& v) {
                            const DTensor y = ccsg_forward(v, p64);
                            double acc = 0;
                            for (double d : y.data) acc += d;
                            for (double d : v.data) acc += 4.0 * d;
                            return acc;
                        },
                        x});
    }
    {
        ClkgParams p = make_clkg(4, Seed{42});
        const ClkgParams4<double> p64 = widen_params(p);
        const DTensor x = widen(seeded_uniform({1, 4, 9, 9}, -1.0f, 1.0f, Seed{43}));
        dirs.push_back({clkg_backward(x, p64, widen(Tensor::full({1, 4, 9, 9}, 1.0f))),
                        [p64](const DTensor& v) {
                            const DTensor y = clkg_forward(v, p64);
                            double acc = 0;
                            for (double d : y.data) acc += d;
                            for (double d : v.data) acc += 4.0 * d;
                            return acc;
                        },
                        x});
    }

    for (const Dir& dir : dirs) {
        std::vector<Coord4> coords;
        for (int64_t c = 0; c < dir.x.shape.c; ++c)
            for (int64_t i = 0; i < dir.x.shape.h; ++i)
                coords.push_back({0, c, i, (i * 3 + c) % dir.x.shape.w});
        const auto numeric = finite_diff_grad(dir.f, dir.x, coords, 1e-3);
        for (size_t i = 0; i < coords.size(); ++i) {
            const Coord4& c = coords[i];
            CHECK(rel_err(dir.analytic.at(c.n, c.c, c.h, c.w) + 4.0, numeric[i]) <= 1e-5);
        }
    }
}

TEST_CASE("f32 backward agrees with the f64 backward") {
    FusionConfig cfg;
    cfg.levels = {3};
    cfg.c_rgb = {8};
    cfg.c_ir = {8};
    const FusionLevelParams p = init_fusion_params(cfg, Seed{34}).levels[0].second;
    const FusionLevelParams4<double> p64 = widen_params(p);
    const Tensor a = seeded_uniform({1, 8, 6, 6}, -1.0f, 1.0f, Seed{35});
    const Tensor b = seeded_uniform({1, 8, 6, 6}, -1.0f, 1.0f, Seed{36});
    const Tensor ones = Tensor::full({1, 8, 6, 6}, 1.0f);

    const auto [ga32, gb32] = fusion_block_backward(a, b, p, ones);
    const auto [ga64, gb64] = fusion_block_backward(widen(a), widen(b), p64, widen(ones));
    for (size_t i = 0; i < ga32.data.size(); ++i) {
        CHECK(std::abs(ga32.data[i] - ga64.data[i]) <=
              1e-4 * std::max(1.0, std::abs(ga64.data[i])));
        CHECK(std::abs(gb32.data[i] - gb64.data[i]) <=
              1e-4 * std::max(1.0, std::abs(gb64.data[i])));
    }
}

TEST_CASE("pyramid_fuse runs all levels and tags the output") {
    FusionConfig cfg;
    cfg.resolution = 64;
    cfg.levels = {3, 4, 5};
    cfg.c_rgb = {4, 4, 4};
    cfg.c_ir = {8, 8, 8};
    const FusionParams params = init_fusion_params(cfg, Seed{37});

    FeaturePyramid rgb{Modality::rgb, {}}, ir{Modality::ir, {}};
    uint64_t s = 100;
    for (int i = 0; i < 3; ++i) {
        const int64_t hw = 8 >> i;
        rgb.levels.emplace_back(cfg.levels[i],
                                seeded_uniform({1, 4, hw, hw}, -1.0f, 1.0f, Seed{s++}));
        ir.levels.emplace_back(cfg.levels[i],
                               seeded_uniform({1, 8, hw, hw}, -1.0f, 1.0f, Seed{s++}));
    }
    const FeaturePyramid fused = pyramid_fuse(rgb, ir, params);
    CHECK(fused.modality == Modality::fused);
    REQUIRE(fused.levels.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(fused.levels[i].first == cfg.levels[i]);
        CHECK(fused.levels[i].second.shape == Shape4{1, 8, 8 >> i, 8 >> i});
    }
}

TEST_CASE("pyramid_fuse degenerate parameters reduce to refined-plus-ir") {
    FusionConfig cfg;
    cfg.levels = {3, 4};
    cfg.c_rgb = {4, 4};
    cfg.c_ir = {4, 4};
    FusionParams params;
    for (int i = 0; i < 2; ++i) {
        FusionLevelParams p = degenerate_block(4);
        p.c_rgb = 4;
        // MSFD collapses to a constant saturated plateau: zero weights, g2 bias 24
        p.msfd.c_hat = 4;
        p.msfd.dw3 = zero_conv_weights(ConvSpec::depthwise(4, 3, 1, true));
        p.msfd.dw5 = zero_conv_weights(ConvSpec::depthwise(4, 5, 1, true));
        p.msfd.dw5d = zero_conv_weights(ConvSpec::depthwise(4, 5, 2, true));
        p.msfd.csp.c_in = p.msfd.csp.c_mid = 16;
        p.msfd.csp.c_out = 4;
        p.msfd.csp.shuffle_groups = 4;
        p.msfd.csp.groups_g1 = p.msfd.csp.groups_g2 = 4;
        p.msfd.csp.g1 = zero_conv_weights(ConvSpec{16, 16, 1, 4, 1, 0, true});
        p.msfd.csp.g2 = zero_conv_weights(ConvSpec{16, 4, 1, 4, 1, 0, true});
        std::fill(p.msfd.csp.g2.bias.begin(), p.msfd.csp.g2.bias.end(), 24.0f);
        params.levels.emplace_back(cfg.levels[i], p);
    }

    FeaturePyramid rgb{Modality::rgb, {}}, ir{Modality::ir, {}};
    rgb.levels.emplace_back(3, seeded_uniform({1, 4, 8, 8}, -1.0f, 1.0f, Seed{200}));
    rgb.levels.emplace_back(4, seeded_uniform({1, 4, 4, 4}, -1.0f, 1.0f, Seed{201}));
    ir.levels.emplace_back(3, seeded_uniform({1, 4, 8, 8}, 16.0f, 32.0f, Seed{202}));
    ir.levels.emplace_back(4, seeded_uniform({1, 4, 4, 4}, 16.0f, 32.0f, Seed{203}));

    const FeaturePyramid fused = pyramid_fuse(rgb, ir, params);
    for (int i = 0; i < 2; ++i) {
        const Tensor& f_ir = ir.levels[static_cast<size_t>(i)].second;
        const Tensor want = ew_add(Tensor::full(f_ir.shape, 24.0f), f_ir);
        CHECK(bitwise_equal(fused.levels[static_cast<size_t>(i)].second, want));
    }
}

TEST_CASE("pyramid_fuse validates levels and shapes") {
    FusionConfig cfg;
    cfg.levels = {3, 4};
    cfg.c_rgb = {4, 4};
    cfg.c_ir = {4, 4};
    const FusionParams params = init_fusion_params(cfg, Seed{38});

    FeaturePyramid rgb{Modality::rgb, {}}, ir{Modality::ir, {}};
    rgb.levels.emplace_back(3, Tensor({1, 4, 8, 8}));
    ir.levels.emplace_back(3, Tensor({1, 4, 8, 8}));
    CHECK_THROWS_WITH_AS(pyramid_fuse(rgb, ir, params), doctest::Contains("missing level"),
                         std::invalid_argument);

    rgb.levels.emplace_back(4, Tensor({1, 4, 4, 4}));
    ir.levels.emplace_back(4, Tensor({1, 4, 4, 5}));
    CHECK_THROWS_WITH_AS(pyramid_fuse(rgb, ir, params), doctest::Contains("spatial mismatch"),
                         std::invalid_argument);

    ir.levels[1].second = Tensor({1, 4, 5, 5});  // breaks the halving chain
    rgb.levels[1].second = Tensor({1, 4, 5, 5});
    CHECK_THROWS_WITH_AS(pyramid_fuse(rgb, ir, params), doctest::Contains("halve"),
                         std::invalid_argument);
}

TEST_CASE("parameter initialization is deterministic and respects fan-in bounds") {
    FusionConfig cfg;
    cfg.levels = {3};
    cfg.c_rgb = {8};
    cfg.c_ir = {8};
    const FusionParams a = init_fusion_params(cfg, Seed{55});
    const FusionParams b = init_fusion_params(cfg, Seed{55});
    CHECK(bitwise_equal(a.levels[0].second.ccsg.gate.weight, b.levels[0].second.ccsg.gate.weight));
    CHECK(a.levels[0].second.msfd.dw5.bias == b.levels[0].second.msfd.dw5.bias);

    const FusionParams c = init_fusion_params(cfg, Seed{56});
    CHECK_FALSE(bitwise_equal(a.levels[0].second.ccsg.gate.weight,
                              c.levels[0].second.ccsg.gate.weight));

    // depthwise 5x5: fan_in 25 -> bound 0.2
    for (float v : a.levels[0].second.clkg.dw5.weight.data) {
        CHECK(v >= -0.2f);
        CHECK(v < 0.2f);
    }
}
