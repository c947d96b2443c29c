#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "contrail/error.hpp"
#include "contrail/gradcheck.hpp"
#include "contrail/losses.hpp"
#include "oracles.hpp"

using namespace contrail;

namespace {

// g = [1, 1, 0, 0], p = [1, 0, 1, 0]: S_tp = 1, S_fn = 1, S_fp = 1, S_p = 2, S_g = 2.
struct Fixture {
    ProbMap p{2, 2};
    Mask g{2, 2};
    Fixture() {
        p.data = {1, 0, 1, 0};
        g.data = {1, 1, 0, 0};
    }
};

LossParams eps0() {
    LossParams lp;
    lp.epsilon = 0.0;
    return lp;
}

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        m = std::max(m, std::abs(a[i] - b[i]));
    }
    return m;
}

}  // namespace

TEST(Dice, PerfectPredictionIsZero) {
    std::mt19937_64 rng(1);
    const Mask g = oracle::random_mask(rng, 6, 6);
    ProbMap p(6, 6);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p.data[i] = g.data[i];
    }
    EXPECT_EQ(dice_loss(p, g, LossParams{}).value, 0.0);
}

TEST(Dice, FixtureValues) {
    const Fixture f;
    LossParams lp;
    lp.epsilon = 1e-6;
    EXPECT_NEAR(dice_loss(f.p, f.g, lp).value, 1 - (2 + 1e-6) / (4 + 1e-6), 1e-15);
    EXPECT_NEAR(dice_loss(f.p, f.g, lp).value, 0.5, 1e-6);
    lp.dice_variant = DiceVariant::verbatim;
    EXPECT_NEAR(dice_loss(f.p, f.g, lp).value, 1 - (1 + 1e-6) / (4 + 1e-6), 1e-15);
    EXPECT_NEAR(dice_loss(f.p, f.g, lp).value, 0.75, 1e-6);
}

TEST(Dice, VerbatimIsHalfAtPerfectPrediction) {
    const Fixture f;
    ProbMap perfect(2, 2);
    perfect.data = {1, 1, 0, 0};
    LossParams lp = eps0();
    lp.dice_variant = DiceVariant::verbatim;
    EXPECT_DOUBLE_EQ(dice_loss(perfect, f.g, lp).value, 0.5);
}

TEST(Dice, MatchesScalarOracle) {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 20; ++t) {
        const ProbMap p = oracle::random_probs(rng, 5, 7);
        const Mask g = oracle::random_mask(rng, 5, 7);
        LossParams lp;
        EXPECT_NEAR(dice_loss(p, g, lp).value, oracle::dice(p, g, lp.epsilon), 1e-14);
        lp.dice_variant = DiceVariant::verbatim;
        EXPECT_NEAR(dice_loss(p, g, lp).value, oracle::dice(p, g, lp.epsilon, false), 1e-14);
    }
}

TEST(Tversky, FixtureValue) {
    const Fixture f;
    EXPECT_DOUBLE_EQ(tversky_loss(f.p, f.g, eps0()).value, 0.5);
}

TEST(Tversky, PerfectPredictionExactlyZero) {
    std::mt19937_64 rng(3);
    for (double eps : {0.0, 1e-6, 1.0}) {
        const Mask g = oracle::random_mask(rng, 8, 8);
        ProbMap p(8, 8);
        for (std::size_t i = 0; i < p.size(); ++i) {
            p.data[i] = g.data[i];
        }
        LossParams lp;
        lp.epsilon = eps;
        EXPECT_EQ(tversky_loss(p, g, lp).value, 0.0);
        EXPECT_EQ(focal_tversky_loss(p, g, lp).value, 0.0);
        EXPECT_EQ(jaccard_loss(p, g, lp).value, 0.0);
    }
}

TEST(Tversky, MatchesScalarOracle) {
    std::mt19937_64 rng(4);
    for (int t = 0; t < 20; ++t) {
        const ProbMap p = oracle::random_probs(rng, 4, 9);
        const Mask g = oracle::random_mask(rng, 4, 9);
        const LossParams lp;
        EXPECT_NEAR(tversky_loss(p, g, lp).value, 1 - oracle::tversky_index(p, g, 0.7, 0.3, 1e-6), 1e-14);
    }
}

TEST(Tversky, MonotoneInFalsePositives) {
    std::mt19937_64 rng(5);
    const LossParams lp;
    for (int t = 0; t < 50; ++t) {
        ProbMap p = oracle::random_probs(rng, 6, 6, 0.0, 0.9);
        Mask g = oracle::random_mask(rng, 6, 6);
        const std::size_t i = rng() % p.size();
        g.data[i] = 0;
        const double before = tversky_loss(p, g, lp).value;
        p.data[i] += 0.1;
        EXPECT_GE(tversky_loss(p, g, lp).value, before);
    }
}

TEST(FocalTversky, FixtureValue) {
    const Fixture f;
    EXPECT_NEAR(focal_tversky_loss(f.p, f.g, eps0()).value, std::pow(0.5, 0.75), 1e-15);
    EXPECT_NEAR(focal_tversky_loss(f.p, f.g, eps0()).value, 0.59460, 1e-5);
}

TEST(FocalTversky, GradientVanishesAtOptimum) {
    Mask g(3, 3);
    g.data = {1, 0, 1, 0, 0, 1, 1, 0, 0};
    ProbMap p(3, 3);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p.data[i] = g.data[i];
    }
    const LossResult r = focal_tversky_loss(p, g, LossParams{});
    EXPECT_EQ(r.value, 0.0);
    for (double v : r.grad) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Jaccard, FixtureValue) {
    const Fixture f;
    EXPECT_NEAR(jaccard_loss(f.p, f.g, eps0()).value, 1.0 - 1.0 / 3.0, 1e-15);
}

TEST(Focal, SinglePixelValue) {
    ProbMap p(1, 1, 0.5);
    Mask g(1, 1, 1);
    EXPECT_NEAR(focal_loss(p, g, LossParams{}).value, 0.25 * 0.25 * std::log(2.0), 1e-15);
    EXPECT_NEAR(focal_loss(p, g, LossParams{}).value, 0.04332, 1e-5);
}

TEST(Focal, ReducesToHalfBce) {
    std::mt19937_64 rng(6);
    LossParams lp;
    lp.focal_gamma = 0.0;
    lp.focal_alpha = 0.5;
    for (int t = 0; t < 20; ++t) {
        const ProbMap p = oracle::random_probs(rng, 7, 3);
        const Mask g = oracle::random_mask(rng, 7, 3);
        EXPECT_NEAR(focal_loss(p, g, lp).value, 0.5 * oracle::bce_mean(p, g), 1e-13);
    }
}

TEST(Focal, PerfectPredictionLimit) {
    Mask g(4, 4);
    g.data = {1, 0, 0, 1, 1, 1, 0, 0, 0, 1, 0, 1, 1, 0, 1, 0};
    ProbMap p(4, 4);
    for (std::size_t i = 0; i < p.size(); ++i) {
        p.data[i] = g.data[i];
    }
    double previous = 1.0;
    for (double clamp : {1e-2, 1e-4, 1e-7}) {
        LossParams lp;
        lp.focal_clamp = clamp;
        const LossResult r = focal_loss(p, g, lp);
        EXPECT_LE(r.value, lp.focal_alpha * clamp);
        EXPECT_LT(r.value, previous);
        previous = r.value;
        for (double v : r.grad) {
            EXPECT_EQ(v, 0.0);  // every pixel sits in the clamped region
        }
    }
}

TEST(Combined, FixtureValue) {
    const Fixture f;
    const double expected = 0.5 * 0.5 + 0.5 * std::pow(0.5, 0.75);
    EXPECT_NEAR(combined_loss(f.p, f.g, eps0()).value, expected, 1e-15);
    EXPECT_NEAR(combined_loss(f.p, f.g, eps0()).value, 0.54730, 1e-5);
}

TEST(Reductions, HoldOnRandomInputs) {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 50; ++t) {
        const ProbMap p = oracle::random_probs(rng, 8, 8);
        const Mask g = oracle::random_mask(rng, 8, 8);

        LossParams one = LossParams{};
        one.gamma = 1.0;
        const LossResult ft = focal_tversky_loss(p, g, one);
        const LossResult tv = tversky_loss(p, g, one);
        EXPECT_NEAR(ft.value, tv.value, 1e-12);
        EXPECT_LE(max_abs_diff(ft.grad, tv.grad), 1e-12);

        LossParams half = eps0();
        half.alpha = half.beta = 0.5;
        const LossResult tvh = tversky_loss(p, g, half);
        const LossResult dc = dice_loss(p, g, half);
        EXPECT_NEAR(tvh.value, dc.value, 1e-12);
        EXPECT_LE(max_abs_diff(tvh.grad, dc.grad), 1e-12);

        LossParams d1;
        d1.delta = 1.0;
        EXPECT_NEAR(combined_loss(p, g, d1).value, dice_loss(p, g, d1).value, 1e-12);
        LossParams d0;
        d0.delta = 0.0;
        EXPECT_NEAR(combined_loss(p, g, d0).value, focal_tversky_loss(p, g, d0).value, 1e-12);

        const double D = 1 - dice_loss(p, g, eps0()).value;
        const double J = 1 - jaccard_loss(p, g, eps0()).value;
        EXPECT_NEAR(D, 2 * J / (1 + J), 1e-12);
    }
}

TEST(Ranges, RegionLossesInUnitInterval) {
    std::mt19937_64 rng(8);
    for (int t = 0; t < 50; ++t) {
        const ProbMap p = oracle::random_probs(rng, 5, 5, 0.0, 1.0);
        const Mask g = oracle::random_mask(rng, 5, 5, t % 5 == 0 ? 0.0 : 0.5);
        const LossParams lp;
        for (auto kind : {LossKind::dice, LossKind::jaccard, LossKind::tversky, LossKind::focal_tversky}) {
            const double v = compute_loss(kind, p, g, lp).value;
            EXPECT_GE(v, 0.0);
            EXPECT_LE(v, 1.0);
        }
    }
}

TEST(Gradients, AllLossesMatchFiniteDifferences) {
    for (const auto& r : check_loss_gradients()) {
        EXPECT_TRUE(r.passed()) << r.name << " max rel err " << r.max_rel_error;
        EXPECT_GE(r.cases, 20U);
    }
}

TEST(Gradients, LinearFunctionalOracle) {
    const LossFunction mean = [](const ProbMap& p, const Mask&, const LossParams&) {
        LossResult r;
        for (double v : p.data) {
            r.value += v;
        }
        r.value /= static_cast<double>(p.size());
        return r;
    };
    std::mt19937_64 rng(9);
    const ProbMap p = oracle::random_probs(rng, 4, 5);
    const auto grad = finite_difference_gradient(mean, p, Mask(4, 5), LossParams{}, 1e-4);
    for (double v : grad) {
        EXPECT_NEAR(v, 1.0 / 20.0, 1e-10);
    }
}

TEST(Gradients, CombinedOnRandomEightByEight) {
    std::mt19937_64 rng(10);
    const ProbMap p = oracle::random_probs(rng, 8, 8);
    const Mask g = oracle::random_mask(rng, 8, 8);
    const LossParams lp;
    const auto numeric = finite_difference_gradient(combined_loss, p, g, lp, 1e-4);
    const auto analytic = combined_loss(p, g, lp).grad;
    for (std::size_t i = 0; i < numeric.size(); ++i) {
        EXPECT_LT(relative_error(analytic[i], numeric[i]), 1e-4);
    }
}

TEST(BatchLoss, MeanOfPerImage) {
    std::mt19937_64 rng(11);
    std::vector<ProbMap> ps{oracle::random_probs(rng, 4, 4), oracle::random_probs(rng, 4, 4)};
    std::vector<Mask> gs{oracle::random_mask(rng, 4, 4), oracle::random_mask(rng, 4, 4)};
    const LossParams lp;
    const BatchLoss b = batch_loss(LossKind::combined, ps, gs, lp);
    const LossResult a0 = combined_loss(ps[0], gs[0], lp);
    const LossResult a1 = combined_loss(ps[1], gs[1], lp);
    EXPECT_NEAR(b.value, 0.5 * (a0.value + a1.value), 1e-15);
    EXPECT_NEAR(b.grads[1][3], 0.5 * a1.grad[3], 1e-15);
    EXPECT_THROW((void)batch_loss(LossKind::dice, ps, std::span<const Mask>(gs).first(1), lp), ShapeError);
}

TEST(Errors, ShapeMismatchAndParams) {
    EXPECT_THROW((void)dice_loss(ProbMap(2, 2), Mask(2, 3), LossParams{}), ShapeError);
    EXPECT_THROW((void)focal_loss(ProbMap(3, 2), Mask(2, 3), LossParams{}), ShapeError);
    LossParams bad;
    bad.delta = 1.5;
    EXPECT_THROW(bad.validate(), Error);
    bad = LossParams{};
    bad.gamma = 0.0;
    EXPECT_THROW(bad.validate(), Error);
    EXPECT_THROW((void)parse_loss_kind("hinge"), Error);
    EXPECT_EQ(parse_loss_kind(to_string(LossKind::focal_tversky)), LossKind::focal_tversky);
    EXPECT_EQ(parse_dice_variant("verbatim"), DiceVariant::verbatim);
}
