#include "icf/wavelet.hpp"

#include <cmath>

namespace icf {

GrayImage::GrayImage(int64_t h_, int64_t w_) : h(h_), w(w_) {
    if (h < 1 || w < 1)
        throw std::invalid_argument("GrayImage: dims must be positive, got " + std::to_string(h) +
                                    "x" + std::to_string(w));
    pix.assign(static_cast<size_t>(h * w), 0.0);
}

double EnergyReport::hf_ratio() const {
    const double t = total();
    if (t == 0.0) return 0.0;
    return (e_lh + e_hl + e_hh) / t;
}

namespace {

void require_even(const GrayImage& img) {
    if (img.h % 2 != 0 || img.w % 2 != 0)
        throw std::invalid_argument("haar_dwt2: dims must be even, got " + std::to_string(img.h) +
                                    "x" + std::to_string(img.w));
}

}  // namespace

SubbandSet haar_dwt2(const GrayImage& img) {
    require_even(img);
    const int64_t oh = img.h / 2, ow = img.w / 2;
    SubbandSet s{GrayImage(oh, ow), GrayImage(oh, ow), GrayImage(oh, ow), GrayImage(oh, ow)};
    for (int64_t y = 0; y < oh; ++y) {
        for (int64_t x = 0; x < ow; ++x) {
            const double a = img.at(2 * y, 2 * x);
            const double b = img.at(2 * y, 2 * x + 1);
            const double c = img.at(2 * y + 1, 2 * x);
            const double d = img.at(2 * y + 1, 2 * x + 1);
            s.ll.at(y, x) = (a + b + c + d) * 0.5;
            s.lh.at(y, x) = ((a + b) - (c + d)) * 0.5;
            s.hl.at(y, x) = ((a + c) - (b + d)) * 0.5;
            s.hh.at(y, x) = (a - b - c + d) * 0.5;
        }
    }
    return s;
}

SubbandSet subbands_of(const GrayImage& ll, const GrayImage& lh, const GrayImage& hl,
                       const GrayImage& hh) {
    auto same = [&](const GrayImage& g) { return g.h == ll.h && g.w == ll.w; };
    if (!same(lh) || !same(hl) || !same(hh))
        throw std::invalid_argument("subbands_of: band dims differ");
    return SubbandSet{ll, lh, hl, hh};
}

GrayImage haar_idwt2(const SubbandSet& s) {
    const int64_t oh = s.ll.h, ow = s.ll.w;
    auto same = [&](const GrayImage& g) { return g.h == oh && g.w == ow; };
    if (!same(s.lh) || !same(s.hl) || !same(s.hh))
        throw std::invalid_argument("haar_idwt2: band dims differ");
    GrayImage img(2 * oh, 2 * ow);
    for (int64_t y = 0; y < oh; ++y) {
        for (int64_t x = 0; x < ow; ++x) {
            const double ll = s.ll.at(y, x), lh = s.lh.at(y, x);
            const double hl = s.hl.at(y, x), hh = s.hh.at(y, x);
            img.at(2 * y, 2 * x) = (ll + lh + hl + hh) * 0.5;
            img.at(2 * y, 2 * x + 1) = (ll + lh - hl - hh) * 0.5;
            img.at(2 * y + 1, 2 * x) = (ll - lh + hl - hh) * 0.5;
            img.at(2 * y + 1, 2 * x + 1) = (ll - lh - hl + hh) * 0.5;
        }
    }
    return img;
}

EnergyReport subband_energy(const SubbandSet& s) {
    auto energy = [](const GrayImage& g) {
        double e = 0.0;
        for (double v : g.pix) e += v * v;
        return e;
    };
    return EnergyReport{energy(s.ll), energy(s.lh), energy(s.hl), energy(s.hh)};
}

PairAnalysis analyze_pair(const GrayImage& rgb, const GrayImage& ir, int levels) {
    if (rgb.h != ir.h || rgb.w != ir.w)
        throw std::invalid_argument("analyze_pair: image dims differ: " + std::to_string(rgb.h) +
                                    "x" + std::to_string(rgb.w) + " vs " + std::to_string(ir.h) +
                                    "x" + std::to_string(ir.w));
    if (levels < 1) throw std::invalid_argument("analyze_pair: levels must be >= 1");

    PairAnalysis out;
    GrayImage cur_rgb = reflect_pad_to_even(rgb);
    GrayImage cur_ir = reflect_pad_to_even(ir);
    for (int lv = 1; lv <= levels; ++lv) {
        if (cur_rgb.h < 2 || cur_rgb.w < 2)
            throw std::invalid_argument("analyze_pair: image too small for level " +
                                        std::to_string(lv));
        SubbandSet s_rgb = haar_dwt2(cur_rgb);
        SubbandSet s_ir = haar_dwt2(cur_ir);
        out.levels.push_back({lv, subband_energy(s_rgb), subband_energy(s_ir)});
        cur_rgb = reflect_pad_to_even(s_rgb.ll);
        cur_ir = reflect_pad_to_even(s_ir.ll);
    }
    return out;
}

GrayImage reflect_pad_to_even(const GrayImage& img) {
    if (img.h % 2 == 0 && img.w % 2 == 0) return img;
    const int64_t nh = img.h + (img.h % 2), nw = img.w + (img.w % 2);
    GrayImage out(nh, nw);
    for (int64_t y = 0; y < nh; ++y) {
        const int64_t sy = y < img.h ? y : 2 * img.h - 1 - y;
        for (int64_t x = 0; x < nw; ++x) {
            const int64_t sx = x < img.w ? x : 2 * img.w - 1 - x;
            out.at(y, x) = img.at(sy, sx);
        }
    }
    return out;
}

}  // namespace icf
