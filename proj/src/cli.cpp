#include "icf/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "icf/complexity.hpp"
#include "icf/gradcheck.hpp"
#include "icf/io.hpp"
#include "icf/parallel.hpp"
#include "icf/selftest.hpp"

namespace icf {

namespace {

namespace fs = std::filesystem;

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file " + out_path);
    out << text;
    if (!out) throw std::runtime_error("write failed on " + out_path);
}

std::string join_ints(const std::vector<int>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

std::string join_ints(const std::vector<int64_t>& v) {
    std::string s;
    for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
    return s;
}

void echo_config(ReportDoc& doc, const FusionConfig& cfg) {
    doc.add("config.resolution", static_cast<int64_t>(cfg.resolution));
    doc.add("config.levels", join_ints(cfg.levels));
    doc.add("config.c_rgb", join_ints(cfg.c_rgb));
    doc.add("config.c_ir", join_ints(cfg.c_ir));
    doc.add("config.ccsg_shuffle_groups", cfg.ccsg_shuffle_groups);
    doc.add("config.ccsg_conv_groups", cfg.ccsg_conv_groups);
    doc.add("config.msfd_csp_shuffle_groups", cfg.msfd_csp_shuffle_groups);
    doc.add("config.msfd_csp_groups", cfg.msfd_csp_groups);
    doc.add("config.tail_csp_shuffle_groups", cfg.tail_csp_shuffle_groups);
    doc.add("config.tail_csp_groups", cfg.tail_csp_groups);
    doc.add("config.bias", cfg.bias ? "true" : "false");
}

FusionConfig config_or_default(const std::string& path) {
    if (path.empty()) return FusionConfig{};
    return load_config(path);
}

int run_fuse(const std::string& config_path, uint64_t seed, const std::string& params_dir,
             const std::string& out_dir, const std::vector<std::string>& inputs) {
    const FusionConfig cfg = config_or_default(config_path);
    const size_t nlevels = cfg.levels.size();
    if (inputs.size() != 2 * nlevels)
        throw std::invalid_argument("fuse: expected " + std::to_string(2 * nlevels) +
                                    " tensor files (rgb levels ascending, then ir), got " +
                                    std::to_string(inputs.size()));

    FeaturePyramid rgb{Modality::rgb, {}}, ir{Modality::ir, {}};
    for (size_t i = 0; i < nlevels; ++i)
        rgb.levels.emplace_back(cfg.levels[i], read_tensor(inputs[i]));
    for (size_t i = 0; i < nlevels; ++i)
        ir.levels.emplace_back(cfg.levels[i], read_tensor(inputs[nlevels + i]));

    const FusionParams params = params_dir.empty()
                                    ? init_fusion_params(cfg, Seed{seed})
                                    : read_params_dir(params_dir, cfg);
    const FeaturePyramid fused = pyramid_fuse(rgb, ir, params);

    fs::create_directories(out_dir);
    for (const auto& [level_id, t] : fused.levels)
        write_tensor((fs::path(out_dir) / ("fused_l" + std::to_string(level_id) + ".icft"))
                         .string(),
                     t);
    return 0;
}

int run_wavelet(const std::string& rgb_path, const std::string& ir_path, int levels,
                const std::string& out_path) {
    const GrayImage rgb = read_image(rgb_path);
    const GrayImage ir = read_image(ir_path);
    const PairAnalysis analysis = analyze_pair(rgb, ir, levels);

    ReportDoc doc;
    doc.tool = "wavelet";
    doc.add("rgb_image", fs::path(rgb_path).filename().string());
    doc.add("ir_image", fs::path(ir_path).filename().string());
    doc.add("levels", static_cast<int64_t>(levels));
    for (const auto& lv : analysis.levels) {
        const std::string p = "level" + std::to_string(lv.level) + ".";
        auto add_modality = [&](const std::string& m, const EnergyReport& e) {
            doc.add(p + m + ".e_ll", e.e_ll);
            doc.add(p + m + ".e_lh", e.e_lh);
            doc.add(p + m + ".e_hl", e.e_hl);
            doc.add(p + m + ".e_hh", e.e_hh);
            doc.add(p + m + ".hf_ratio", e.hf_ratio());
        };
        add_modality("rgb", lv.rgb);
        add_modality("ir", lv.ir);
        const double rgb_edges = lv.rgb.e_lh + lv.rgb.e_hl;
        const double ir_edges = lv.ir.e_lh + lv.ir.e_hl;
        doc.add(p + "rgb.e_lh_hl", rgb_edges);
        doc.add(p + "ir.e_lh_hl", ir_edges);
        doc.add(p + "higher_lh_hl", ir_edges > rgb_edges   ? "ir"
                                    : ir_edges < rgb_edges ? "rgb"
                                                           : "equal");
    }
    emit(doc.render(), out_path);
    return 0;
}

int run_count(const std::string& config_path, const std::string& out_path) {
    const FusionConfig cfg = config_or_default(config_path);
    const CostReport report = report_fusion_config(cfg);

    ReportDoc doc;
    doc.tool = "count";
    echo_config(doc, cfg);
    for (const LayerCost& layer : report.layers)
        doc.add("layer." + layer.name,
                "params=" + std::to_string(layer.params) + " macs=" + std::to_string(layer.macs));
    doc.add("total.params", report.total_params);
    doc.add("total.macs", report.total_macs);
    doc.add("note", "fusion stack only; backbone and detection head are out of scope");
    emit(doc.render(), out_path);
    return 0;
}

int run_gradcheck(uint64_t seed, const std::string& out_path) {
    const auto results = run_gradcheck_suite(Seed{seed});
    ReportDoc doc;
    doc.tool = "gradcheck";
    doc.add("seed", static_cast<int64_t>(seed));
    doc.add("tolerance", kGradCheckTol);
    for (const auto& r : results)
        doc.add(r.block, "max_rel_err=" + format_double(r.max_rel_err) +
                             " coords=" + std::to_string(r.coords));
    const bool ok = gradcheck_passed(results);
    doc.add("result", ok ? "pass" : "fail");
    emit(doc.render(), out_path);
    return ok ? 0 : 1;
}

int run_selftest_cmd(uint64_t seed, const std::string& out_path) {
    ReportDoc doc;
    doc.tool = "selftest";
    doc.add("seed", static_cast<int64_t>(seed));
    const bool ok = run_selftest(Seed{seed}, doc);
    emit(doc.render(), out_path);
    return ok ? 0 : 1;
}

int run_init_params(const std::string& config_path, uint64_t seed, const std::string& out_dir) {
    const FusionConfig cfg = config_or_default(config_path);
    write_params_dir(out_dir, cfg, Seed{seed});
    return 0;
}

}  // namespace

int cli_main(const std::vector<std::string>& args) {
    CLI::App app{"ic-fusion: cross-modal feature fusion toolkit"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker threads (results are thread-count independent)");

    std::string config_path, out_path, params_dir;
    uint64_t seed = 0;
    int levels = 1;
    std::vector<std::string> inputs;

    auto* fuse = app.add_subcommand("fuse", "fuse rgb/ir tensor pyramids");
    fuse->add_option("--config", config_path, "config file");
    fuse->add_option("--seed", seed, "parameter seed");
    fuse->add_option("--params", params_dir, "parameter directory from init-params");
    fuse->add_option("--out", out_path, "output directory")->required();
    fuse->add_option("tensors", inputs, "rgb level tensors ascending, then ir")->required();

    auto* wavelet = app.add_subcommand("wavelet", "sub-band energy report for an image pair");
    std::string rgb_path, ir_path;
    wavelet->add_option("rgb", rgb_path, "rgb image (P5/P6)")->required();
    wavelet->add_option("ir", ir_path, "ir image (P5/P6)")->required();
    wavelet->add_option("--levels", levels, "decomposition levels")->check(CLI::PositiveNumber);
    wavelet->add_option("--out", out_path, "report file (stdout if omitted)");

    auto* count = app.add_subcommand("count", "parameter and MAC accounting");
    count->add_option("--config", config_path, "config file");
    count->add_option("--out", out_path, "report file (stdout if omitted)");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient verification");
    gradcheck->add_option("--seed", seed, "seed for inputs and parameters");
    gradcheck->add_option("--out", out_path, "report file (stdout if omitted)");

    auto* selftest = app.add_subcommand("selftest", "run all property suites");
    selftest->add_option("--seed", seed, "seed for generated data");
    selftest->add_option("--out", out_path, "report file (stdout if omitted)");

    auto* init_params = app.add_subcommand("init-params", "write seeded parameter files");
    init_params->add_option("--config", config_path, "config file");
    init_params->add_option("--seed", seed, "parameter seed");
    init_params->add_option("--out", out_path, "output directory")->required();

    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n" << app.help();
        return 1;
    }

    try {
        if (threads > 0) set_num_threads(threads);
        if (fuse->parsed()) return run_fuse(config_path, seed, params_dir, out_path, inputs);
        if (wavelet->parsed()) return run_wavelet(rgb_path, ir_path, levels, out_path);
        if (count->parsed()) return run_count(config_path, out_path);
        if (gradcheck->parsed()) return run_gradcheck(seed, out_path);
        if (selftest->parsed()) return run_selftest_cmd(seed, out_path);
        if (init_params->parsed()) return run_init_params(config_path, seed, out_path);
        std::cerr << "error: no subcommand\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}

}  // namespace icf
