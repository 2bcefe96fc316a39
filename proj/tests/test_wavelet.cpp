#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "icf/tensor.hpp"
#include "icf/wavelet.hpp"

using namespace icf;

namespace {

GrayImage random_image(int64_t h, int64_t w, Seed seed) {
    GrayImage img(h, w);
    const Tensor noise = seeded_uniform({1, 1, h, w}, 0.0f, 1.0f, seed);
    for (size_t i = 0; i < img.pix.size(); ++i) img.pix[i] = noise.data[i];
    return img;
}

double image_energy(const GrayImage& img) {
    double e = 0;
    for (double v : img.pix) e += v * v;
    return e;
}

}  // namespace

TEST_CASE("constant image concentrates everything in LL") {
    const double v = 0.37;
    GrayImage img(8, 8);
    std::fill(img.pix.begin(), img.pix.end(), v);
    const SubbandSet s = haar_dwt2(img);
    for (int64_t i = 0; i < 4; ++i)
        for (int64_t j = 0; j < 4; ++j) {
            CHECK(s.ll.at(i, j) == doctest::Approx(2 * v).epsilon(1e-12));
            CHECK(s.lh.at(i, j) == 0.0);
            CHECK(s.hl.at(i, j) == 0.0);
            CHECK(s.hh.at(i, j) == 0.0);
        }
    CHECK(subband_energy(s).hf_ratio() == 0.0);
}

TEST_CASE("single 2x2 block transforms per the stated formulas") {
    GrayImage img(2, 2);
    img.at(0, 0) = 1.0;  // [[1,0],[0,0]]
    const SubbandSet s = haar_dwt2(img);
    CHECK(s.ll.at(0, 0) == 0.5);
    CHECK(s.lh.at(0, 0) == 0.5);
    CHECK(s.hl.at(0, 0) == 0.5);
    CHECK(s.hh.at(0, 0) == 0.5);
    CHECK(subband_energy(s).total() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("checkerboard tile splits energy between LL and HH") {
    GrayImage img(2, 2);
    img.at(0, 0) = 1.0;  // [[1,0],[0,1]]
    img.at(1, 1) = 1.0;
    const SubbandSet s = haar_dwt2(img);
    CHECK(s.ll.at(0, 0) == 1.0);
    CHECK(s.lh.at(0, 0) == 0.0);
    CHECK(s.hl.at(0, 0) == 0.0);
    CHECK(s.hh.at(0, 0) == 1.0);
    CHECK(subband_energy(s).hf_ratio() == 0.5);
}

TEST_CASE("Parseval holds to 1e-9 relative on random 64x64 images") {
    for (uint64_t seed : {1u, 2u, 3u}) {
        const GrayImage img = random_image(64, 64, Seed{seed});
        const EnergyReport e = subband_energy(haar_dwt2(img));
        const double direct = image_energy(img);  // direct summation oracle
        CHECK(std::abs(e.total() - direct) / direct <= 1e-9);
    }
}

TEST_CASE("round trip is exact to 1e-12") {
    const GrayImage img = random_image(32, 32, Seed{4});
    const GrayImage back = haar_idwt2(haar_dwt2(img));
    REQUIRE(back.h == 32);
    REQUIRE(back.w == 32);
    for (size_t i = 0; i < img.pix.size(); ++i) CHECK(std::abs(back.pix[i] - img.pix[i]) <= 1e-12);
}

TEST_CASE("zero sub-bands reconstruct a zero image") {
    GrayImage z(4, 4);
    const GrayImage img = haar_idwt2(SubbandSet{z, z, z, z});
    for (double v : img.pix) CHECK(v == 0.0);
}

TEST_CASE("LL-only reconstruction is 2x2 block-average upsampling") {
    const GrayImage img = random_image(16, 16, Seed{5});
    SubbandSet s = haar_dwt2(img);
    const GrayImage zero(8, 8);
    const GrayImage rec = haar_idwt2(SubbandSet{s.ll, zero, zero, zero});
    for (int64_t y = 0; y < 8; ++y)
        for (int64_t x = 0; x < 8; ++x) {
            const double avg = (img.at(2 * y, 2 * x) + img.at(2 * y, 2 * x + 1) +
                                img.at(2 * y + 1, 2 * x) + img.at(2 * y + 1, 2 * x + 1)) /
                               4.0;
            for (int64_t dy = 0; dy < 2; ++dy)
                for (int64_t dx = 0; dx < 2; ++dx)
                    CHECK(rec.at(2 * y + dy, 2 * x + dx) == doctest::Approx(avg).epsilon(1e-12));
        }
}

TEST_CASE("orientation convention: row-constant image has zero HL energy") {
    GrayImage vert(16, 16);  // varies down the rows only
    for (int64_t y = 0; y < 16; ++y)
        for (int64_t x = 0; x < 16; ++x) vert.at(y, x) = static_cast<double>(y) / 15.0;
    const EnergyReport ev = subband_energy(haar_dwt2(vert));
    CHECK(ev.e_hl == 0.0);
    CHECK(ev.e_lh > 0.0);

    GrayImage horiz(16, 16);  // varies along the columns only
    for (int64_t y = 0; y < 16; ++y)
        for (int64_t x = 0; x < 16; ++x) horiz.at(y, x) = static_cast<double>(x) / 15.0;
    const EnergyReport eh = subband_energy(haar_dwt2(horiz));
    CHECK(eh.e_lh == 0.0);
    CHECK(eh.e_hl > 0.0);
}

TEST_CASE("dwt2 is linear") {
    const GrayImage a = random_image(16, 16, Seed{6});
    const GrayImage b = random_image(16, 16, Seed{7});
    GrayImage combo(16, 16);
    for (size_t i = 0; i < combo.pix.size(); ++i) combo.pix[i] = 1.5 * a.pix[i] - 0.5 * b.pix[i];
    const SubbandSet sc = haar_dwt2(combo);
    const SubbandSet sa = haar_dwt2(a), sb = haar_dwt2(b);
    for (size_t i = 0; i < sc.ll.pix.size(); ++i) {
        CHECK(sc.ll.pix[i] ==
              doctest::Approx(1.5 * sa.ll.pix[i] - 0.5 * sb.ll.pix[i]).epsilon(1e-12));
        CHECK(sc.hh.pix[i] ==
              doctest::Approx(1.5 * sa.hh.pix[i] - 0.5 * sb.hh.pix[i]).epsilon(1e-12));
    }
}

TEST_CASE("step edge carries more high-frequency energy than a smooth ramp") {
    GrayImage step(64, 64);  // edge inside a block pair, column 31
    for (int64_t y = 0; y < 64; ++y)
        for (int64_t x = 31; x < 64; ++x) step.at(y, x) = 1.0;
    GrayImage ramp(64, 64);
    for (int64_t y = 0; y < 64; ++y)
        for (int64_t x = 0; x < 64; ++x) ramp.at(y, x) = static_cast<double>(x) / 63.0;

    const double r_step = subband_energy(haar_dwt2(step)).hf_ratio();
    const double r_ramp = subband_energy(haar_dwt2(ramp)).hf_ratio();
    // frozen from tests/oracles/wavelet_oracle.py
    CHECK(r_step == doctest::Approx(0.0151515152).epsilon(1e-6));
    CHECK(r_ramp == doctest::Approx(0.0001874766).epsilon(1e-6));
    CHECK(r_step > r_ramp);
}

TEST_CASE("odd dimensions are rejected by the transform itself") {
    CHECK_THROWS_WITH_AS(haar_dwt2(GrayImage(3, 4)), doctest::Contains("even"),
                         std::invalid_argument);
    GrayImage bad(4, 4);
    CHECK_THROWS_AS(haar_idwt2(SubbandSet{bad, GrayImage(2, 2), GrayImage(2, 2), GrayImage(2, 2)}),
                    std::invalid_argument);
}

TEST_CASE("reflect padding extends odd dimensions by mirroring") {
    GrayImage img(3, 3);
    for (int64_t y = 0; y < 3; ++y)
        for (int64_t x = 0; x < 3; ++x) img.at(y, x) = y * 3 + x;
    const GrayImage padded = reflect_pad_to_even(img);
    REQUIRE(padded.h == 4);
    REQUIRE(padded.w == 4);
    CHECK(padded.at(3, 0) == img.at(2, 0));
    CHECK(padded.at(0, 3) == img.at(0, 2));
    CHECK(padded.at(3, 3) == img.at(2, 2));
}

TEST_CASE("analyze_pair reports per level and recurses on LL") {
    const GrayImage img = random_image(32, 32, Seed{8});
    const PairAnalysis same = analyze_pair(img, img, 2);
    REQUIRE(same.levels.size() == 2);
    for (const auto& lv : same.levels) {
        CHECK(lv.rgb.e_ll == lv.ir.e_ll);
        CHECK(lv.rgb.hf_ratio() == lv.ir.hf_ratio());
    }
    // level 2 must equal a direct transform of the level-1 LL band
    const SubbandSet s1 = haar_dwt2(img);
    const EnergyReport e2 = subband_energy(haar_dwt2(s1.ll));
    CHECK(same.levels[1].rgb.e_ll == doctest::Approx(e2.e_ll).epsilon(1e-12));
    CHECK(same.levels[1].rgb.e_hh == doctest::Approx(e2.e_hh).epsilon(1e-12));

    CHECK_THROWS_AS(analyze_pair(img, random_image(16, 16, Seed{9}), 1), std::invalid_argument);
    CHECK_THROWS_AS(analyze_pair(img, img, 0), std::invalid_argument);
}
