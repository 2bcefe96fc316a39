#pragma once

#include "icf/fusion.hpp"

namespace icf {

struct LayerCost {
    std::string name;
    int64_t params = 0;
    int64_t macs = 0;
};

struct CostReport {
    std::vector<LayerCost> layers;
    int64_t total_params = 0;
    int64_t total_macs = 0;
    FusionConfig config;  // echoed into the emitted report
};

// params = c_out * (c_in/g) * k^2, plus c_out when the layer has a bias.
int64_t count_params(const ConvSpec& spec);

// macs = c_out * (c_in/g) * k^2 * h * w under "same" padding, stride 1.
// One MAC per kernel tap; biases and activations excluded.
int64_t count_macs(const ConvSpec& spec, int64_t h, int64_t w);

// Every convolution of the configured stack, at the spatial size its pyramid
// level sees for the config's input resolution.
CostReport report_fusion_config(const FusionConfig& cfg);

}  // namespace icf
