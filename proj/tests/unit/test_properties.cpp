#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "pelvseg/components.hpp"
#include "pelvseg/distance.hpp"
#include "pelvseg/metrics.hpp"
#include "pelvseg/postproc.hpp"

using namespace pelvseg;

// Randomised checks of the invariants each module promises. Seeds are fixed
// so a failure reproduces.

namespace {

FilterConfig sdf(double t) {
    FilterConfig c;
    c.threshold = t;
    return c;
}

} // namespace

TEST(Property, ConnectivityMonotonicity) {
    std::mt19937_64 rng(1001);
    for (int trial = 0; trial < 40; ++trial) {
        const auto m = oracle::random_mask(rng, {10, 9, 8}, 0.1 + 0.02 * trial);
        const auto c6 = label_components(m, Connectivity::Face6).count();
        const auto c18 = label_components(m, Connectivity::Edge18).count();
        const auto c26 = label_components(m, Connectivity::Vertex26).count();
        EXPECT_LE(c26, c18);
        EXPECT_LE(c18, c6);
    }
}

TEST(Property, PartitionCoversForeground) {
    std::mt19937_64 rng(1002);
    for (int trial = 0; trial < 20; ++trial) {
        const auto m = oracle::random_mask(rng, {8, 8, 8}, 0.4);
        const auto cs = label_components(m, Connectivity::Edge18);
        for (std::size_t n = 0; n < m.dims().voxel_count(); ++n) {
            ASSERT_EQ(cs.ids()[n] != 0, m.test(n));
            if (m.test(n)) {
                ASSERT_LE(cs.ids()[n], cs.count());
            }
        }
    }
}

TEST(Property, FilterSandwichAndThresholdMonotone) {
    std::mt19937_64 rng(1003);
    const double ts[] = {0.0, 1.0, 1.5, 2.0, 3.0, 5.0, 50.0};
    for (int trial = 0; trial < 15; ++trial) {
        const auto v = oracle::random_labels(rng, {12, 10, 8}, 0.12);
        const auto m = mcr_filter(v);
        LabelVolume prev = m;
        for (double t : ts) {
            const auto s = sdf_filter(v, sdf(t));
            for (Label c : kAllClasses) {
                ASSERT_TRUE(is_subset(class_mask(m, c), class_mask(s, c)));
                ASSERT_TRUE(is_subset(class_mask(s, c), class_mask(v, c)));
                ASSERT_TRUE(is_subset(class_mask(prev, c), class_mask(s, c))) << t;
            }
            prev = s;
        }
    }
}

TEST(Property, FiltersIdempotent) {
    std::mt19937_64 rng(1004);
    for (int trial = 0; trial < 10; ++trial) {
        const auto v = oracle::random_labels(rng, {10, 10, 10}, 0.2);
        const auto m = mcr_filter(v);
        EXPECT_EQ(mcr_filter(m), m);
        for (double t : {1.0, 2.5}) {
            const auto s = sdf_filter(v, sdf(t));
            EXPECT_EQ(sdf_filter(s, sdf(t)), s);
        }
    }
}

TEST(Property, FiltersPreserveGeometry) {
    std::mt19937_64 rng(1005);
    const auto v = oracle::random_labels(rng, {7, 5, 3}, 0.5, {0.5F, 0.8F, 3.0F}).with_case_id("g");
    for (const auto& out : {mcr_filter(v), sdf_filter(v, sdf(2))}) {
        EXPECT_EQ(out.dims(), v.dims());
        EXPECT_EQ(out.spacing(), v.spacing());
        EXPECT_EQ(out.case_id(), "g");
    }
}

TEST(Property, MetricSymmetryAndRange) {
    std::mt19937_64 rng(1006);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = oracle::random_mask(rng, {7, 7, 7}, 0.3);
        const auto b = oracle::random_mask(rng, {7, 7, 7}, 0.3);
        const double d = dice(a, b);
        EXPECT_GE(d, 0.0);
        EXPECT_LE(d, 1.0);
        EXPECT_EQ(d, dice(b, a));
        if (!a.none() && !b.none()) {
            EXPECT_EQ(hausdorff(a, b), hausdorff(b, a));
            EXPECT_GE(hausdorff(a, b), 0.0);
        }
    }
}

TEST(Property, EdtZeroExactlyOnMask) {
    std::mt19937_64 rng(1007);
    for (int trial = 0; trial < 10; ++trial) {
        const auto m = oracle::random_mask(rng, {9, 9, 9}, 0.05);
        if (m.none()) {
            continue;
        }
        const auto f = edt(m);
        for (std::size_t n = 0; n < m.dims().voxel_count(); ++n) {
            ASSERT_EQ(f.at(n) == 0.0, m.test(n));
        }
    }
}
