#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace icf {

// Grayscale image with even dimensions, 64-bit pixels, row-major.
// Pixels are [0,1] at ingestion; sub-band planes reuse the type unconstrained.
struct GrayImage {
    int64_t h = 0, w = 0;
    std::vector<double> pix;

    GrayImage() = default;
    GrayImage(int64_t h, int64_t w);

    double& at(int64_t y, int64_t x) { return pix[static_cast<size_t>(y * w + x)]; }
    double at(int64_t y, int64_t x) const { return pix[static_cast<size_t>(y * w + x)]; }
};

// One level of orthonormal 2-D Haar analysis; each band is (h/2, w/2).
struct SubbandSet {
    GrayImage ll, lh, hl, hh;
};

struct EnergyReport {
    double e_ll = 0, e_lh = 0, e_hl = 0, e_hh = 0;

    double total() const { return e_ll + e_lh + e_hl + e_hh; }
    double hf_ratio() const;
};

// Per 2x2 block [[a,b],[c,d]]:
//   LL=(a+b+c+d)/2  LH=((a+b)-(c+d))/2  HL=((a+c)-(b+d))/2  HH=(a-b-c+d)/2
// Orthonormal: sub-band energies sum to the input energy.
SubbandSet haar_dwt2(const GrayImage& img);

SubbandSet subbands_of(const GrayImage& ll, const GrayImage& lh, const GrayImage& hl,
                       const GrayImage& hh);

GrayImage haar_idwt2(const SubbandSet& s);

EnergyReport subband_energy(const SubbandSet& s);

// Per-modality, per-level sub-band energies of an aligned image pair,
// recursing on LL for deeper levels.
struct PairAnalysis {
    struct Level {
        int level = 0;
        EnergyReport rgb, ir;
    };
    std::vector<Level> levels;
};

PairAnalysis analyze_pair(const GrayImage& rgb, const GrayImage& ir, int levels);

// Reflects the last row/column when a dimension is odd.
GrayImage reflect_pad_to_even(const GrayImage& img);

}  // namespace icf
