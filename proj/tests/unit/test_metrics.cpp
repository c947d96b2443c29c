#include <gtest/gtest.h>

#include <random>

#include "contrail/error.hpp"
#include "contrail/metrics.hpp"
#include "oracles.hpp"

using namespace contrail;

TEST(Binarize, Basics) {
    EXPECT_EQ(binarize(ProbMap(3, 4, 0.9), 0.5).count(), 12U);
    EXPECT_EQ(binarize(ProbMap(2, 2, 0.5), 0.5).count(), 4U);
    EXPECT_THROW((void)binarize(ProbMap(1, 1), 0.0), Error);
    EXPECT_THROW((void)binarize(ProbMap(1, 1), 1.0), Error);
}

TEST(Binarize, MatchesPerPixelComparison) {
    std::mt19937_64 rng(1);
    const ProbMap p = oracle::random_probs(rng, 9, 11, 0.0, 1.0);
    const Mask m = binarize(p, 0.5);
    for (std::size_t i = 0; i < p.size(); ++i) {
        EXPECT_EQ(m.data[i], p.data[i] >= 0.5 ? 1 : 0);
    }
}

TEST(Binarize, MonotoneInThreshold) {
    std::mt19937_64 rng(2);
    const ProbMap p = oracle::random_probs(rng, 16, 16, 0.0, 1.0);
    std::size_t previous = p.size();
    for (double t = 0.05; t < 1.0; t += 0.05) {
        const std::size_t n = binarize(p, t).count();
        EXPECT_LE(n, previous);
        previous = n;
    }
}

TEST(Iou, HandCounts) {
    Mask a(2, 2);
    Mask b(2, 2);
    a.data = {1, 1, 0, 0};
    b.data = {1, 0, 1, 0};
    EXPECT_DOUBLE_EQ(iou(a, b), 1.0 / 3.0);
    EXPECT_DOUBLE_EQ(iou(a, a), 1.0);
    Mask c(2, 2);
    c.data = {0, 0, 1, 1};
    EXPECT_DOUBLE_EQ(iou(a, c), 0.0);
    EXPECT_DOUBLE_EQ(iou(Mask(3, 3), Mask(3, 3)), 1.0);
    EXPECT_THROW((void)iou(Mask(2, 2), Mask(2, 3)), ShapeError);
}

TEST(Iou, SymmetricAndBounded) {
    std::mt19937_64 rng(3);
    for (int t = 0; t < 50; ++t) {
        const Mask a = oracle::random_mask(rng, 7, 7, 0.3);
        const Mask b = oracle::random_mask(rng, 7, 7, 0.3);
        const double v = iou(a, b);
        EXPECT_EQ(v, iou(b, a));
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 1.0);
        EXPECT_EQ(iou(a, a), 1.0);
    }
}

TEST(Evaluate, PerfectSingle) {
    Mask g(2, 2);
    g.data = {0, 1, 1, 0};
    ProbMap p(2, 2);
    p.data = {0.1, 0.9, 0.7, 0.2};
    const EvalReport r = evaluate_dataset({{"a", p, g}});
    EXPECT_EQ(r.mean_iou, 1.0);
    EXPECT_EQ(r.global_iou, 1.0);
    ASSERT_EQ(r.per_image_iou.size(), 1U);
    EXPECT_EQ(r.per_image_iou[0].first, "a");
}

TEST(Evaluate, EqualUnionsAverage) {
    // Both unions have 2 pixels; the first case overlaps fully, the second not at all.
    Mask g(2, 2);
    g.data = {1, 1, 0, 0};
    ProbMap hit(2, 2);
    hit.data = {1, 1, 0, 0};
    Mask g2(2, 2);
    g2.data = {1, 0, 0, 0};
    ProbMap miss(2, 2);
    miss.data = {0, 0, 1, 0};
    const EvalReport r = evaluate_dataset({{"hit", hit, g}, {"miss", miss, g2}});
    EXPECT_DOUBLE_EQ(r.per_image_iou[0].second, 1.0);
    EXPECT_DOUBLE_EQ(r.per_image_iou[1].second, 0.0);
    EXPECT_DOUBLE_EQ(r.mean_iou, 0.5);
    EXPECT_DOUBLE_EQ(r.global_iou, 2.0 / 4.0);
}

TEST(Evaluate, MicroBelowMacro) {
    // Large image at IoU 0 (union 50), tiny image at IoU 1 (union 1).
    Mask big_truth(10, 10);
    ProbMap big_pred(10, 10, 0.0);
    for (int i = 0; i < 25; ++i) {
        big_truth.data[static_cast<std::size_t>(i)] = 1;
        big_pred.data[static_cast<std::size_t>(50 + i)] = 1.0;
    }
    Mask tiny_truth(2, 2);
    tiny_truth.data = {0, 0, 0, 1};
    ProbMap tiny_pred(2, 2);
    tiny_pred.data = {0, 0, 0, 1};
    const EvalReport r = evaluate_dataset({{"big", big_pred, big_truth}, {"tiny", tiny_pred, tiny_truth}});
    EXPECT_DOUBLE_EQ(r.mean_iou, 0.5);
    EXPECT_DOUBLE_EQ(r.global_iou, 1.0 / 51.0);
    EXPECT_LT(r.global_iou, r.mean_iou);
}

TEST(Evaluate, CsvLayout) {
    Mask g(1, 2);
    g.data = {1, 0};
    ProbMap p(1, 2);
    p.data = {0.8, 0.8};
    const EvalReport r = evaluate_dataset({{"s1", p, g}}, 0.5);
    EXPECT_EQ(r.to_csv(), "scene_id,iou\ns1,0.500000\n__mean__,0.500000\n__global__,0.500000\n");
}

TEST(Evaluate, Errors) {
    EXPECT_THROW((void)evaluate_dataset({}), Error);
    EXPECT_THROW((void)evaluate_dataset({{"x", ProbMap(2, 2), Mask(3, 3)}}), ShapeError);
}
