#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "icf/complexity.hpp"
#include "icf/gradcheck.hpp"
#include "icf/io.hpp"
#include "icf/parallel.hpp"

namespace py = pybind11;
using namespace icf;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;
using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const FloatArray& a) {
    if (a.ndim() != 4) throw std::invalid_argument("expected a 4-D NCHW array");
    Tensor t({a.shape(0), a.shape(1), a.shape(2), a.shape(3)});
    std::copy(a.data(), a.data() + t.numel(), t.data.begin());
    return t;
}

FloatArray from_tensor(const Tensor& t) {
    FloatArray a({t.shape.n, t.shape.c, t.shape.h, t.shape.w});
    std::copy(t.data.begin(), t.data.end(), a.mutable_data());
    return a;
}

GrayImage to_image(const DoubleArray& a) {
    if (a.ndim() != 2) throw std::invalid_argument("expected a 2-D image array");
    GrayImage img(a.shape(0), a.shape(1));
    std::copy(a.data(), a.data() + img.h * img.w, img.pix.begin());
    return img;
}

DoubleArray from_image(const GrayImage& img) {
    DoubleArray a({img.h, img.w});
    std::copy(img.pix.begin(), img.pix.end(), a.mutable_data());
    return a;
}

ConvSpec make_spec(int64_t c_in, int64_t c_out, int64_t k, int64_t groups, int64_t dilation,
                   int64_t padding, bool has_bias) {
    ConvSpec spec{c_in, c_out, k, groups, dilation, padding, has_bias};
    spec.validate();
    return spec;
}

ConvWeights make_weights(const FloatArray& weight, const std::optional<FloatArray>& bias) {
    ConvWeights w;
    w.weight = to_tensor(weight);
    if (bias) {
        if (bias->ndim() != 1) throw std::invalid_argument("bias must be 1-D");
        w.bias.assign(bias->data(), bias->data() + bias->shape(0));
    }
    return w;
}

// Seeded fusion stack over explicit per-level widths.
class FusionModel {
public:
    FusionModel(FusionConfig cfg, uint64_t seed) : cfg_(std::move(cfg)) {
        cfg_.validate();
        params_ = init_fusion_params(cfg_, Seed{seed});
    }

    std::vector<int> levels() const { return cfg_.levels; }

    FloatArray refine(size_t level_index, const FloatArray& rgb) const {
        return from_tensor(msfd_forward(to_tensor(rgb), level_at(level_index).msfd));
    }

    FloatArray fuse_level(size_t level_index, const FloatArray& rgb_hat,
                          const FloatArray& ir) const {
        return from_tensor(
            fusion_block_forward(to_tensor(rgb_hat), to_tensor(ir), level_at(level_index)));
    }

    std::vector<FloatArray> fuse(const std::vector<FloatArray>& rgb,
                                 const std::vector<FloatArray>& ir) const {
        if (rgb.size() != cfg_.levels.size() || ir.size() != cfg_.levels.size())
            throw std::invalid_argument("fuse: one tensor per configured level required");
        FeaturePyramid pr{Modality::rgb, {}}, pi{Modality::ir, {}};
        for (size_t i = 0; i < rgb.size(); ++i) {
            pr.levels.emplace_back(cfg_.levels[i], to_tensor(rgb[i]));
            pi.levels.emplace_back(cfg_.levels[i], to_tensor(ir[i]));
        }
        const FeaturePyramid fused = pyramid_fuse(pr, pi, params_);
        std::vector<FloatArray> out;
        for (const auto& [id, t] : fused.levels) out.push_back(from_tensor(t));
        return out;
    }

    py::dict cost() const {
        const CostReport report = report_fusion_config(cfg_);
        py::dict d;
        d["params"] = report.total_params;
        d["macs"] = report.total_macs;
        py::list layers;
        for (const LayerCost& l : report.layers) {
            py::dict e;
            e["name"] = l.name;
            e["params"] = l.params;
            e["macs"] = l.macs;
            layers.append(e);
        }
        d["layers"] = layers;
        return d;
    }

private:
    const FusionLevelParams& level_at(size_t i) const {
        if (i >= params_.levels.size())
            throw std::invalid_argument("level index out of range");
        return params_.levels[i].second;
    }

    FusionConfig cfg_;
    FusionParams params_;
};

FusionConfig config_from_kwargs(int resolution, std::vector<int> levels,
                                std::vector<int64_t> c_rgb, std::vector<int64_t> c_ir,
                                bool bias) {
    FusionConfig cfg;
    cfg.resolution = resolution;
    cfg.levels = std::move(levels);
    cfg.c_rgb = std::move(c_rgb);
    cfg.c_ir = std::move(c_ir);
    cfg.bias = bias;
    cfg.validate();
    return cfg;
}

}  // namespace

PYBIND11_MODULE(_icfusion, m) {
    m.doc() = "cross-modal feature fusion kernels";

    m.def("set_num_threads", &set_num_threads, py::arg("n"));

    m.def(
        "seeded_uniform",
        [](std::vector<int64_t> shape, float lo, float hi, uint64_t seed) {
            if (shape.size() != 4) throw std::invalid_argument("shape must have 4 entries");
            return from_tensor(
                seeded_uniform({shape[0], shape[1], shape[2], shape[3]}, lo, hi, Seed{seed}));
        },
        py::arg("shape"), py::arg("lo"), py::arg("hi"), py::arg("seed"));

    m.def(
        "conv2d",
        [](const FloatArray& x, const FloatArray& weight, const std::optional<FloatArray>& bias,
           int64_t groups, int64_t dilation, int64_t padding) {
            const Tensor input = to_tensor(x);
            const ConvWeights w = make_weights(weight, bias);
            const ConvSpec spec =
                make_spec(input.shape.c, w.weight.shape.n, w.weight.shape.h, groups, dilation,
                          padding, bias.has_value());
            return from_tensor(conv2d(input, spec, w));
        },
        py::arg("x"), py::arg("weight"), py::arg("bias") = py::none(), py::arg("groups") = 1,
        py::arg("dilation") = 1, py::arg("padding") = 0);

    m.def(
        "gelu", [](const FloatArray& x) { return from_tensor(gelu(to_tensor(x))); }, py::arg("x"));

    m.def(
        "channel_shuffle",
        [](const FloatArray& x, int64_t g) {
            return from_tensor(channel_shuffle(to_tensor(x), g));
        },
        py::arg("x"), py::arg("groups"));

    m.def("shuffle_perm", &shuffle_perm, py::arg("channels"), py::arg("groups"));

    m.def(
        "haar_dwt2",
        [](const DoubleArray& img) {
            const SubbandSet s = haar_dwt2(to_image(img));
            return py::make_tuple(from_image(s.ll), from_image(s.lh), from_image(s.hl),
                                  from_image(s.hh));
        },
        py::arg("image"));

    m.def(
        "haar_idwt2",
        [](const DoubleArray& ll, const DoubleArray& lh, const DoubleArray& hl,
           const DoubleArray& hh) {
            return from_image(
                haar_idwt2(subbands_of(to_image(ll), to_image(lh), to_image(hl), to_image(hh))));
        },
        py::arg("ll"), py::arg("lh"), py::arg("hl"), py::arg("hh"));

    m.def(
        "subband_energy",
        [](const DoubleArray& img) {
            const EnergyReport e = subband_energy(haar_dwt2(to_image(img)));
            py::dict d;
            d["ll"] = e.e_ll;
            d["lh"] = e.e_lh;
            d["hl"] = e.e_hl;
            d["hh"] = e.e_hh;
            d["hf_ratio"] = e.hf_ratio();
            return d;
        },
        py::arg("image"));

    m.def(
        "count_params",
        [](int64_t c_in, int64_t c_out, int64_t k, int64_t groups, bool bias) {
            return count_params(make_spec(c_in, c_out, k, groups, 1, 0, bias));
        },
        py::arg("c_in"), py::arg("c_out"), py::arg("k"), py::arg("groups") = 1,
        py::arg("bias") = true);

    m.def(
        "count_macs",
        [](int64_t c_in, int64_t c_out, int64_t k, int64_t h, int64_t w, int64_t groups,
           bool bias) {
            return count_macs(make_spec(c_in, c_out, k, groups, 1, 0, bias), h, w);
        },
        py::arg("c_in"), py::arg("c_out"), py::arg("k"), py::arg("h"), py::arg("w"),
        py::arg("groups") = 1, py::arg("bias") = true);

    py::class_<FusionModel>(m, "FusionModel")
        .def(py::init([](int resolution, std::vector<int> levels, std::vector<int64_t> c_rgb,
                         std::vector<int64_t> c_ir, bool bias, uint64_t seed) {
                 return FusionModel(
                     config_from_kwargs(resolution, std::move(levels), std::move(c_rgb),
                                        std::move(c_ir), bias),
                     seed);
             }),
             py::arg("resolution") = 640, py::arg("levels") = std::vector<int>{3, 4, 5},
             py::arg("c_rgb") = std::vector<int64_t>{128, 256, 512},
             py::arg("c_ir") = std::vector<int64_t>{512, 1024, 2048}, py::arg("bias") = true,
             py::arg("seed") = 0)
        .def("levels", &FusionModel::levels)
        .def("refine", &FusionModel::refine, py::arg("level_index"), py::arg("rgb"))
        .def("fuse_level", &FusionModel::fuse_level, py::arg("level_index"), py::arg("rgb_hat"),
             py::arg("ir"))
        .def("fuse", &FusionModel::fuse, py::arg("rgb"), py::arg("ir"))
        .def("cost", &FusionModel::cost);
}
