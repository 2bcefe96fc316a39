#include "icf/gradcheck.hpp"

#include <cmath>

namespace icf {

ConvWeights zero_conv_weights(const ConvSpec& spec) {
    spec.validate();
    ConvWeights w;
    w.weight = Tensor::zeros({spec.c_out, spec.c_in / spec.groups, spec.k, spec.k});
    if (spec.has_bias) w.bias.assign(static_cast<size_t>(spec.c_out), 0.0f);
    return w;
}

ConvWeights identity_1x1_weights(int64_t c, int64_t groups, bool bias, float scale) {
    if (groups < 1 || c % groups != 0)
        throw std::invalid_argument("identity_1x1_weights: c not divisible by groups");
    const int64_t cpg = c / groups;
    ConvWeights w;
    w.weight = Tensor::zeros({c, cpg, 1, 1});
    for (int64_t oc = 0; oc < c; ++oc) w.weight.at(oc, oc % cpg, 0, 0) = scale;
    if (bias) w.bias.assign(static_cast<size_t>(c), 0.0f);
    return w;
}

namespace {

constexpr double kStep = 1e-3;
constexpr double kDenomFloor = 1e-8;
constexpr int kCoordTarget = 56;  // >= 50 per the gradient-fidelity contract

double rel_err(double a, double b) {
    const double denom = std::max(std::max(std::abs(a), std::abs(b)), kDenomFloor);
    return std::abs(a - b) / denom;
}

// Deterministic sample of distinct coordinates spread over the tensor.
std::vector<Coord4> sample_coords(Shape4 s, Seed seed, int want) {
    const int64_t total = s.numel();
    const int64_t take = std::min<int64_t>(want, total);
    std::vector<int64_t> flat(static_cast<size_t>(total));
    for (int64_t i = 0; i < total; ++i) flat[static_cast<size_t>(i)] = i;
    for (int64_t i = total - 1; i > 0; --i) {  // Fisher-Yates keyed by mix64
        const int64_t j = static_cast<int64_t>(
            mix64(seed.value + static_cast<uint64_t>(i) * 0x632BE59BD9B4E019ull) %
            static_cast<uint64_t>(i + 1));
        std::swap(flat[static_cast<size_t>(i)], flat[static_cast<size_t>(j)]);
    }
    std::vector<Coord4> coords;
    coords.reserve(static_cast<size_t>(take));
    for (int64_t i = 0; i < take; ++i) {
        int64_t r = flat[static_cast<size_t>(i)];
        const int64_t x = r % s.w;
        r /= s.w;
        const int64_t y = r % s.h;
        r /= s.h;
        const int64_t c = r % s.c;
        r /= s.c;
        coords.push_back({r, c, y, x});
    }
    return coords;
}

double weighted_sum(const DTensor& out, const DTensor& weights) {
    double acc = 0.0;
    for (size_t i = 0; i < out.data.size(); ++i) acc += out.data[i] * weights.data[i];
    return acc;
}

double plain_sum(const DTensor& t) {
    double acc = 0.0;
    for (double v : t.data) acc += v;
    return acc;
}

// The scalar functional under test is f(x) = sum(forward(x)) + kAnchor*sum(x).
// The linear anchor differentiates exactly and shifts the analytic and
// numeric sides identically, so every backward error still enters the
// comparison 1:1 while no denominator can collapse to a cancellation zero.
constexpr double kAnchor = 4.0;

// One direction of a block check, both sides on the f64 pipeline. Inputs and
// parameters are f32 values promoted, so both sides evaluate the same point.
struct BlockCheck {
    std::string name;
    DTensor input;
    std::function<DTensor(const DTensor& x, const DTensor& grad_out)> backward;
    std::function<DTensor(const DTensor& x)> forward;
};

GradCheckResult check_block(const BlockCheck& blk, Seed seed) {
    const DTensor ones = widen(Tensor::full(blk.input.shape, 1.0f));
    const DTensor analytic = blk.backward(blk.input, ones);

    const auto f = [&](const DTensor& x) {
        return plain_sum(blk.forward(x)) + kAnchor * plain_sum(x);
    };
    const auto coords = sample_coords(blk.input.shape, sub_seed(seed, 102), kCoordTarget);
    const std::vector<double> numeric = finite_diff_grad(f, blk.input, coords, kStep);

    GradCheckResult res{blk.name, 0.0, static_cast<int>(coords.size())};
    for (size_t i = 0; i < coords.size(); ++i) {
        const Coord4& c = coords[i];
        res.max_rel_err = std::max(
            res.max_rel_err, rel_err(analytic.at(c.n, c.c, c.h, c.w) + kAnchor, numeric[i]));
    }
    return res;
}

}  // namespace

std::vector<GradCheckResult> run_gradcheck_suite(Seed seed) {
    std::vector<GradCheckResult> results;
    const Shape4 in_shape{1, 8, 6, 6};

    // conv2d primitive: grouped dilated 3x3, checking input, weight and bias
    {
        const ConvSpec spec = ConvSpec::same(8, 8, 3, 2, 2, true);
        const DConvWeights w = widen_weights(init_conv_weights(spec, sub_seed(seed, 1)));
        const DTensor x = widen(seeded_uniform(in_shape, -1.0f, 1.0f, sub_seed(seed, 2)));
        const DTensor lw = widen(seeded_uniform(in_shape, -1.0f, 1.0f, sub_seed(seed, 3)));
        const ConvGrads4<double> grads = conv2d_backward(x, spec, w, lw);

        {
            const auto f = [&](const DTensor& v) { return weighted_sum(conv2d(v, spec, w), lw); };
            const auto coords = sample_coords(in_shape, sub_seed(seed, 4), kCoordTarget);
            const auto numeric = finite_diff_grad(f, x, coords, kStep);
            GradCheckResult res{"conv2d.input", 0.0, static_cast<int>(coords.size())};
            for (size_t i = 0; i < coords.size(); ++i) {
                const Coord4& c = coords[i];
                res.max_rel_err = std::max(res.max_rel_err,
                                           rel_err(grads.input.at(c.n, c.c, c.h, c.w), numeric[i]));
            }
            results.push_back(res);
        }
        {
            const auto f = [&](const DTensor& v) {
                DConvWeights probe = w;
                probe.weight = v;
                return weighted_sum(conv2d(x, spec, probe), lw);
            };
            const auto coords = sample_coords(w.weight.shape, sub_seed(seed, 5), kCoordTarget);
            const auto numeric = finite_diff_grad(f, w.weight, coords, kStep);
            GradCheckResult res{"conv2d.weight", 0.0, static_cast<int>(coords.size())};
            for (size_t i = 0; i < coords.size(); ++i) {
                const Coord4& c = coords[i];
                res.max_rel_err = std::max(
                    res.max_rel_err, rel_err(grads.weight.at(c.n, c.c, c.h, c.w), numeric[i]));
            }
            results.push_back(res);
        }
        {
            GradCheckResult res{"conv2d.bias", 0.0, static_cast<int>(w.bias.size())};
            for (size_t bi = 0; bi < w.bias.size(); ++bi) {
                DConvWeights probe = w;
                probe.bias[bi] += kStep;
                const double fp = weighted_sum(conv2d(x, spec, probe), lw);
                probe.bias[bi] -= 2 * kStep;
                const double fm = weighted_sum(conv2d(x, spec, probe), lw);
                res.max_rel_err =
                    std::max(res.max_rel_err, rel_err(grads.bias[bi], (fp - fm) / (2 * kStep)));
            }
            results.push_back(res);
        }
    }

    // GELU
    {
        BlockCheck blk;
        blk.name = "gelu";
        blk.input = widen(seeded_uniform(in_shape, -3.0f, 3.0f, sub_seed(seed, 6)));
        blk.backward = [](const DTensor& x, const DTensor& g) { return gelu_backward(x, g); };
        blk.forward = [](const DTensor& x) { return gelu(x); };
        results.push_back(check_block(blk, sub_seed(seed, 7)));
    }

    // the architecture blocks, c_ir = 8 variants on (1,8,6,6)
    FusionConfig cfg;
    cfg.resolution = 48;
    cfg.levels = {3};
    cfg.c_rgb = {8};
    cfg.c_ir = {8};
    const FusionLevelParams4<double> p =
        widen_params(init_fusion_params(cfg, sub_seed(seed, 8)).levels[0].second);

    {
        BlockCheck blk;
        blk.name = "msfd";
        blk.input = widen(seeded_uniform(in_shape, -1.0f, 1.0f, sub_seed(seed, 9)));
        blk.backward = [&](const DTensor& x, const DTensor& g) {
            return msfd_backward(x, p.msfd, g);
        };
        blk.forward = [&](const DTensor& x) { return msfd_forward(x, p.msfd); };
        results.push_back(check_block(blk, sub_seed(seed, 10)));
    }
    {
        // standalone CSP at width 8
        CspParams csp;
        csp.c_in = csp.c_mid = csp.c_out = 8;
        csp.shuffle_groups = 2;
        csp.groups_g1 = csp.groups_g2 = 2;
        csp.g1 = init_conv_weights(csp.g1_spec(), sub_seed(seed, 11));
        csp.g2 = init_conv_weights(csp.g2_spec(), sub_seed(seed, 12));
        const CspParams4<double> csp64 = widen_params(csp);

        BlockCheck blk;
        blk.name = "csp";
        blk.input = widen(seeded_uniform(in_shape, -1.0f, 1.0f, sub_seed(seed, 13)));
        blk.backward = [&](const DTensor& x, const DTensor& g) {
            return csp_backward(x, csp64, g);
        };
        blk.forward = [&](const DTensor& x) { return csp_forward(x, csp64); };
        results.push_back(check_block(blk, sub_seed(seed, 14)));
    }
    {
        // CCSG at width 8
        CcsgParams ccsg;
        ccsg.channels = 8;
        ccsg.shuffle_groups = 2;
        ccsg.conv_groups = 2;
        ccsg.gate = init_conv_weights(ccsg.gate_spec(), sub_seed(seed, 15));
        const CcsgParams4<double> ccsg64 = widen_params(ccsg);

        BlockCheck blk;
        blk.name = "ccsg";
        blk.input = widen(seeded_uniform(in_shape, -1.0f, 1.0f, sub_seed(seed, 16)));
        blk.backward = [&](const DTensor& x, const DTensor& g) {
            return ccsg_backward(x, ccsg64, g);
        };
        blk.forward = [&](const DTensor& x) { return ccsg_forward(x, ccsg64); };
        results.push_back(check_block(blk, sub_seed(seed, 17)));
    }
    {
        // CLKG at width 8
        ClkgParams clkg;
        clkg.channels = 8;
        clkg.dw5 = init_conv_weights(ConvSpec::depthwise(8, 5, 1, true), sub_seed(seed, 18));
        clkg.dw5d = init_conv_weights(ConvSpec::depthwise(8, 5, 2, true), sub_seed(seed, 19));
        const ClkgParams4<double> clkg64 = widen_params(clkg);

        BlockCheck blk;
        blk.name = "clkg";
        blk.input = widen(seeded_uniform(in_shape, -1.0f, 1.0f, sub_seed(seed, 20)));
        blk.backward = [&](const DTensor& x, const DTensor& g) {
            return clkg_backward(x, clkg64, g);
        };
        blk.forward = [&](const DTensor& x) { return clkg_forward(x, clkg64); };
        results.push_back(check_block(blk, sub_seed(seed, 21)));
    }
    {
        // full fusion block w.r.t. both inputs
        const DTensor a = widen(seeded_uniform(in_shape, -1.0f, 1.0f, sub_seed(seed, 22)));
        const DTensor b = widen(seeded_uniform(in_shape, -1.0f, 1.0f, sub_seed(seed, 23)));
        const DTensor ones = widen(Tensor::full(in_shape, 1.0f));
        const auto [ga, gb] = fusion_block_backward(a, b, p, ones);

        const auto coords_a = sample_coords(in_shape, sub_seed(seed, 25), kCoordTarget / 2 + 1);
        const auto coords_b = sample_coords(in_shape, sub_seed(seed, 26), kCoordTarget / 2 + 1);
        const auto f_a = [&](const DTensor& x) {
            return plain_sum(fusion_block_forward(x, b, p)) + kAnchor * plain_sum(x);
        };
        const auto f_b = [&](const DTensor& x) {
            return plain_sum(fusion_block_forward(a, x, p)) + kAnchor * plain_sum(x);
        };
        const auto num_a = finite_diff_grad(f_a, a, coords_a, kStep);
        const auto num_b = finite_diff_grad(f_b, b, coords_b, kStep);

        GradCheckResult res{"fusion_block", 0.0,
                            static_cast<int>(coords_a.size() + coords_b.size())};
        for (size_t i = 0; i < coords_a.size(); ++i) {
            const Coord4& c = coords_a[i];
            res.max_rel_err = std::max(res.max_rel_err,
                                       rel_err(ga.at(c.n, c.c, c.h, c.w) + kAnchor, num_a[i]));
        }
        for (size_t i = 0; i < coords_b.size(); ++i) {
            const Coord4& c = coords_b[i];
            res.max_rel_err = std::max(res.max_rel_err,
                                       rel_err(gb.at(c.n, c.c, c.h, c.w) + kAnchor, num_b[i]));
        }
        results.push_back(res);
    }

    return results;
}

bool gradcheck_passed(const std::vector<GradCheckResult>& results, double tol) {
    for (const auto& r : results)
        if (!(r.max_rel_err <= tol)) return false;
    return true;
}

}  // namespace icf
