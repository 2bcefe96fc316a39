#pragma once

#include "icf/fusion.hpp"

namespace icf {

// Weights that make a gate path vanish (zero kernel, zero bias).
ConvWeights zero_conv_weights(const ConvSpec& spec);

// Square per-group identity 1x1 weights, optionally scaled; zero bias.
ConvWeights identity_1x1_weights(int64_t c, int64_t groups, bool bias, float scale = 1.0f);

struct GradCheckResult {
    std::string block;
    double max_rel_err = 0.0;
    int coords = 0;
};

// Finite-difference verification of every analytic backward: conv2d
// (input/weight/bias), GELU, and the MSFD/CSP/CCSG/CLKG/fusion blocks on
// (1,8,6,6) inputs. h = 1e-3, central differences on the f64 pipeline,
// relative error floored at 1e-8.
std::vector<GradCheckResult> run_gradcheck_suite(Seed seed);

constexpr double kGradCheckTol = 1e-5;

bool gradcheck_passed(const std::vector<GradCheckResult>& results,
                      double tol = kGradCheckTol);

}  // namespace icf
