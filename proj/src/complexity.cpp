#include "icf/complexity.hpp"

namespace icf {

int64_t count_params(const ConvSpec& spec) {
    spec.validate();
    return spec.c_out * (spec.c_in / spec.groups) * spec.k * spec.k +
           (spec.has_bias ? spec.c_out : 0);
}

int64_t count_macs(const ConvSpec& spec, int64_t h, int64_t w) {
    spec.validate();
    if (h < 1 || w < 1) throw std::invalid_argument("count_macs: spatial size must be positive");
    return spec.c_out * (spec.c_in / spec.groups) * spec.k * spec.k * h * w;
}

CostReport report_fusion_config(const FusionConfig& cfg) {
    CostReport report;
    report.config = cfg;
    for (const NamedConv& nc : enumerate_convs(cfg)) {
        const int64_t hw = cfg.resolution / cfg.level_stride(nc.level_id);
        if (hw < 1)
            throw std::invalid_argument("report_fusion_config: resolution too small for level " +
                                        std::to_string(nc.level_id));
        LayerCost cost{nc.name, count_params(nc.spec), count_macs(nc.spec, hw, hw)};
        report.total_params += cost.params;
        report.total_macs += cost.macs;
        report.layers.push_back(std::move(cost));
    }
    return report;
}

}  // namespace icf
