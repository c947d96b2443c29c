#include <gtest/gtest.h>

#include <set>

#include "contrail/error.hpp"
#include "contrail/synth.hpp"
#include "oracles.hpp"

using namespace contrail;

TEST(Synth, NoContrailsGivesEmptyMask) {
    SynthParams p;
    p.n_contrails = {0, 0};
    for (std::uint64_t i = 0; i < 5; ++i) {
        EXPECT_EQ(generate_scene(p, i).mask.count(), 0U);
    }
}

TEST(Synth, DeterministicInSeedAndIndex) {
    const SynthParams p;
    const Sample a = generate_scene(p, 3);
    const Sample b = generate_scene(p, 3);
    EXPECT_EQ(a.image, b.image);
    EXPECT_EQ(a.mask, b.mask);
    EXPECT_EQ(a.scene_id, "synth-3");
    EXPECT_FALSE(generate_scene(p, 4).mask == a.mask);
    SynthParams other = p;
    other.seed = 8;
    EXPECT_FALSE(generate_scene(other, 3).image == a.image);
}

TEST(Synth, OrderIndependent) {
    const SynthParams p;
    const auto all = generate_dataset(p, 6);
    for (std::uint64_t i = 6; i-- > 0;) {
        const Sample s = generate_scene(p, i);
        EXPECT_EQ(s.image, all[i].image);
        EXPECT_EQ(s.mask, all[i].mask);
    }
}

TEST(Synth, SingleStripAreaBounds) {
    SynthParams p;
    p.n_contrails = {1, 1};
    p.line_width = {3.0, 3.0};
    const double n = 64.0 * 64.0;
    const double lo = 3 * 64 / n * 0.3;
    const double hi = 3 * 91 / n * 1.5;
    for (std::uint64_t i = 0; i < 100; ++i) {
        const double frac = static_cast<double>(generate_scene(p, i).mask.count()) / n;
        EXPECT_GE(frac, lo) << "scene " << i;
        EXPECT_LE(frac, hi) << "scene " << i;
    }
}

TEST(Synth, MaskComesFromGeometryNotPixels) {
    SynthParams a;
    SynthParams b = a;
    b.blur_sigma = 0.0;
    b.noise_std = 0.3;
    for (std::uint64_t i = 0; i < 10; ++i) {
        EXPECT_EQ(generate_scene(a, i).mask, generate_scene(b, i).mask);
    }
}

TEST(Synth, ImageInUnitRangeAndStripsAreDark) {
    const SynthParams p;
    for (std::uint64_t i = 0; i < 10; ++i) {
        const Sample s = generate_scene(p, i);
        ASSERT_EQ(s.image.channels, 3);
        double in = 0, out = 0;
        std::size_t n_in = 0, n_out = 0;
        for (int r = 0; r < s.image.height; ++r) {
            for (int c = 0; c < s.image.width; ++c) {
                const float v = s.image.at(r, c, 0);
                EXPECT_GE(v, 0.0F);
                EXPECT_LE(v, 1.0F);
                if (s.mask.at(r, c)) {
                    in += v;
                    ++n_in;
                } else {
                    out += v;
                    ++n_out;
                }
            }
        }
        ASSERT_GT(n_in, 0U);
        EXPECT_LT(in / static_cast<double>(n_in), out / static_cast<double>(n_out));
    }
}

TEST(Synth, Dataset) {
    const SynthParams p;
    EXPECT_TRUE(generate_dataset(p, 0).empty());
    const auto ds = generate_dataset(p, 20);
    std::set<std::string> ids;
    for (const auto& s : ds) {
        ids.insert(s.scene_id);
    }
    EXPECT_EQ(ids.size(), 20U);
    EXPECT_EQ(ds[19].scene_id, "synth-19");
}

TEST(Synth, FingerprintIsStable) {
    // FNV-1a over the concatenated mask bytes of the default 20-scene set,
    // recorded from the reference build.
    std::vector<std::uint8_t> bytes;
    for (const auto& s : generate_dataset(SynthParams{}, 20)) {
        bytes.insert(bytes.end(), s.mask.data.begin(), s.mask.data.end());
    }
    EXPECT_EQ(oracle::fnv1a(bytes), 0x37e99aebb026a95aULL);
}

TEST(Synth, RejectsBadParams) {
    SynthParams p;
    p.width = 0;
    EXPECT_THROW((void)generate_scene(p, 0), Error);
    p = SynthParams{};
    p.n_contrails = {3, 1};
    EXPECT_THROW((void)generate_scene(p, 0), Error);
    p = SynthParams{};
    p.blur_sigma = -1.0;
    EXPECT_THROW((void)generate_scene(p, 0), Error);
}
