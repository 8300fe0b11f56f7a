#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "chmnat/features.hpp"
#include "oracles.hpp"

using namespace chmnat;

namespace {

RasterGrid grid_of(std::size_t n_rows, std::size_t n_cols, std::vector<std::int32_t> v,
                   double ox = 0, double oy = 0) {
    return RasterGrid::from_values(n_rows, n_cols, ox, oy, 1.0, std::move(v));
}

// Region covering a pixel rectangle, rows [r0, r1] x cols [c0, c1]; area
// defaults to the pixel count (1 m cells).
RegionOfInterest rect_roi(std::size_t r0, std::size_t r1, std::size_t c0, std::size_t c1,
                          double area = -1) {
    RegionOfInterest roi;
    for (std::size_t r = r0; r <= r1; ++r)
        for (std::size_t c = c0; c <= c1; ++c) roi.pixels.push_back({r, c});
    roi.area_m2 = area > 0 ? area : static_cast<double>(roi.pixels.size());
    return roi;
}

RasterGrid random_grid(std::size_t n, Rng& rng, std::int32_t max_h = 150) {
    std::vector<std::int32_t> v(n * n);
    for (auto& x : v) x = static_cast<std::int32_t>(rng.uniform_int(0, max_h));
    return grid_of(n, n, std::move(v));
}

} // namespace

TEST(TreePixels, ThresholdFilter) {
    FeatureConfig cfg;
    RasterGrid all50 = grid_of(3, 3, std::vector<std::int32_t>(9, 50));
    RegionOfInterest roi = rect_roi(0, 2, 0, 2);
    EXPECT_EQ(tree_pixels(roi, all50, cfg).size(), 9u);

    RasterGrid all39 = grid_of(3, 3, std::vector<std::int32_t>(9, 39));
    EXPECT_TRUE(tree_pixels(roi, all39, cfg).empty());

    RasterGrid mixed = grid_of(3, 3, {10, 40, 39, 41, 0, 100, 40, 39, 50});
    EXPECT_EQ(tree_pixels(roi, mixed, cfg).size(), 5u);
}

TEST(TreeDensity, Ratios) {
    FeatureConfig cfg;
    RegionOfInterest roi = rect_roi(0, 2, 0, 2);
    RasterGrid all = grid_of(3, 3, std::vector<std::int32_t>(9, 77));
    EXPECT_DOUBLE_EQ(tree_density(roi, all, cfg), 1.0);
    RasterGrid mixed = grid_of(3, 3, {10, 40, 39, 41, 0, 100, 40, 39, 50});
    EXPECT_DOUBLE_EQ(tree_density(roi, mixed, cfg), 5.0 / 9.0);
    RegionOfInterest empty;
    EXPECT_THROW(tree_density(empty, all, cfg), ContractError);
}

TEST(TreeHeightStats, MeanAndRelativeSpread) {
    FeatureConfig cfg;
    RegionOfInterest roi = rect_roi(0, 0, 0, 1);
    RasterGrid constant = grid_of(1, 2, {80, 80});
    HeightStats s = tree_height_stats(roi, constant, cfg);
    EXPECT_DOUBLE_EQ(s.mean_dm, 80.0);
    EXPECT_DOUBLE_EQ(s.rel_stddev, 0.0);

    RasterGrid two = grid_of(1, 2, {40, 120});
    s = tree_height_stats(roi, two, cfg);
    EXPECT_DOUBLE_EQ(s.mean_dm, 80.0);
    EXPECT_DOUBLE_EQ(s.rel_stddev, 0.5); // population stddev 40 over mean 80

    RasterGrid low = grid_of(1, 2, {10, 20});
    try {
        tree_height_stats(roi, low, cfg);
        FAIL() << "expected no-trees rejection";
    } catch (const RegionRejected& e) {
        EXPECT_EQ(e.reason(), RejectReason::no_trees);
    }
}

TEST(DetectTreetops, SinglePeak) {
    FeatureConfig cfg;
    // 5x5 raster: the default 5-px window centered anywhere still covers
    // the peak, so every 50 is suppressed and only the peak remains.
    std::vector<std::int32_t> v(25, 50);
    v[2 * 5 + 2] = 100;
    RasterGrid g = grid_of(5, 5, std::move(v));
    RegionOfInterest roi = rect_roi(0, 4, 0, 4);
    auto tops = detect_treetops(roi, g, cfg);
    ASSERT_EQ(tops.size(), 1u);
    EXPECT_EQ(tops[0].row, 2u);
    EXPECT_EQ(tops[0].col, 2u);
    EXPECT_EQ(tops[0].height_dm, 100);
    auto [x, y] = g.pixel_center(2, 2);
    EXPECT_DOUBLE_EQ(tops[0].x, x);
    EXPECT_DOUBLE_EQ(tops[0].y, y);
}

TEST(DetectTreetops, FlatFieldBeyondWindowIsItsOwnPlateau) {
    FeatureConfig cfg;
    // On a 9x9 field of 50s with a central 100, pixels farther than the
    // window reach from the peak are their own local maxima; they form one
    // 8-connected ring that collapses to a single extra treetop.
    std::vector<std::int32_t> v(81, 50);
    v[4 * 9 + 4] = 100;
    RasterGrid g = grid_of(9, 9, std::move(v));
    RegionOfInterest roi = rect_roi(0, 8, 0, 8);
    auto tops = detect_treetops(roi, g, cfg);
    ASSERT_EQ(tops.size(), 2u);
    EXPECT_EQ(tops[0].row, 0u);
    EXPECT_EQ(tops[0].col, 0u);
    EXPECT_EQ(tops[0].height_dm, 50);
    EXPECT_EQ(tops[1].row, 4u);
    EXPECT_EQ(tops[1].col, 4u);
    EXPECT_EQ(tops[1].height_dm, 100);
}

TEST(DetectTreetops, PlateauCollapsesToTopLeft) {
    FeatureConfig cfg;
    // 2x3 plateau of 90s; the surrounding field sits below h_min so only
    // the plateau qualifies.
    std::vector<std::int32_t> v(15 * 15, 30);
    for (std::size_t r = 6; r <= 7; ++r)
        for (std::size_t c = 5; c <= 7; ++c) v[r * 15 + c] = 90;
    RasterGrid g = grid_of(15, 15, std::move(v));
    RegionOfInterest roi = rect_roi(0, 14, 0, 14);
    auto tops = detect_treetops(roi, g, cfg);
    ASSERT_EQ(tops.size(), 1u);
    EXPECT_EQ(tops[0].row, 6u);
    EXPECT_EQ(tops[0].col, 5u);
}

TEST(DetectTreetops, BelowThresholdPeaksAreIgnored) {
    FeatureConfig cfg;
    std::vector<std::int32_t> v(81, 10);
    v[4 * 9 + 4] = 39; // a clear peak but below 40 dm
    RasterGrid g = grid_of(9, 9, std::move(v));
    RegionOfInterest roi = rect_roi(0, 8, 0, 8);
    EXPECT_THROW(detect_treetops(roi, g, cfg), RegionRejected);
}

TEST(DetectTreetops, WindowSeesOutsideTheRegion) {
    FeatureConfig cfg;
    // Mask covers only the left 4 columns; a taller tree sits just outside
    // the mask within the window of the in-mask local peak.
    std::vector<std::int32_t> v(81, 41);
    v[4 * 9 + 3] = 80;  // in mask
    v[4 * 9 + 5] = 120; // outside mask, 2 px away (window 5 reaches it)
    RasterGrid g = grid_of(9, 9, std::move(v));
    RegionOfInterest roi = rect_roi(0, 8, 0, 3);
    auto tops = detect_treetops(roi, g, cfg);
    // The 80 is suppressed by the 120 next door; the remaining tops are
    // 41-valued plateau representatives, never the 80.
    for (const Treetop& t : tops) EXPECT_NE(t.height_dm, 80);
}

TEST(DetectTreetops, RasterEdgeActsAsMinusInfinity) {
    FeatureConfig cfg;
    // Peak at the raster corner still detected: outside pixels never win.
    std::vector<std::int32_t> v(25, 50);
    v[0] = 90;
    RasterGrid g = grid_of(5, 5, std::move(v));
    RegionOfInterest roi = rect_roi(0, 4, 0, 4);
    auto tops = detect_treetops(roi, g, cfg);
    bool corner = false;
    for (const Treetop& t : tops) corner |= (t.row == 0 && t.col == 0);
    EXPECT_TRUE(corner);
}

TEST(DetectTreetops, MatchesNaiveOracleOnRandomRasters) {
    FeatureConfig cfg;
    Rng rng(99);
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t n = 16 + rng.uniform_index(17); // 16..32
        // Low-entropy values on some trials force many plateaus.
        std::int32_t max_h = trial % 3 == 0 ? 4 : 150;
        std::vector<std::int32_t> v(n * n);
        for (auto& x : v)
            x = static_cast<std::int32_t>(rng.uniform_int(0, max_h)) *
                (trial % 3 == 0 ? 25 : 1);
        RasterGrid g = grid_of(n, n, std::move(v));
        // Random sub-rectangle mask.
        std::size_t r0 = rng.uniform_index(n / 2), c0 = rng.uniform_index(n / 2);
        std::size_t r1 = r0 + 1 + rng.uniform_index(n - r0 - 1);
        std::size_t c1 = c0 + 1 + rng.uniform_index(n - c0 - 1);
        RegionOfInterest roi = rect_roi(r0, r1, c0, c1);
        std::vector<Treetop> fast, naive;
        try {
            fast = detect_treetops(roi, g, cfg);
        } catch (const RegionRejected&) {
            EXPECT_TRUE(oracles::naive_treetops(roi, g, cfg).empty()) << "trial " << trial;
            continue;
        }
        naive = oracles::naive_treetops(roi, g, cfg);
        ASSERT_EQ(fast.size(), naive.size()) << "trial " << trial;
        for (std::size_t i = 0; i < fast.size(); ++i) {
            EXPECT_EQ(fast[i].row, naive[i].row) << "trial " << trial;
            EXPECT_EQ(fast[i].col, naive[i].col) << "trial " << trial;
            EXPECT_EQ(fast[i].height_dm, naive[i].height_dm) << "trial " << trial;
        }
    }
}

TEST(DetectTreetops, InvariantsHold) {
    FeatureConfig cfg;
    Rng rng(7);
    RasterGrid g = random_grid(40, rng);
    RegionOfInterest roi = rect_roi(5, 34, 5, 34);
    auto tops = detect_treetops(roi, g, cfg);
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const Treetop& t : tops) {
        EXPECT_GE(t.height_dm, cfg.h_min_dm);
        EXPECT_TRUE(seen.insert({t.row, t.col}).second) << "duplicate treetop";
        EXPECT_GE(t.row, 5u);
        EXPECT_LE(t.row, 34u);
        EXPECT_GE(t.col, 5u);
        EXPECT_LE(t.col, 34u);
    }
}

TEST(TreetopStats, DensityAndHeights) {
    RegionOfInterest roi;
    roi.area_m2 = 10000.0; // one hectare
    std::vector<Treetop> tops(100);
    for (std::size_t i = 0; i < 100; ++i) tops[i] = {i, i, 150, 0, 0};
    TreetopStats s = treetop_stats(tops, roi);
    EXPECT_DOUBLE_EQ(s.density_per_ha, 100.0);
    EXPECT_DOUBLE_EQ(s.mean_dm, 150.0);
    EXPECT_DOUBLE_EQ(s.rel_stddev, 0.0);
    EXPECT_THROW(treetop_stats({}, roi), ContractError);
}

TEST(EdgeLikePixels, ConstantRasterHasNoEdges) {
    FeatureConfig cfg;
    RasterGrid g = grid_of(12, 12, std::vector<std::int32_t>(144, 70));
    RegionOfInterest roi = rect_roi(0, 11, 0, 11);
    EXPECT_DOUBLE_EQ(edge_like_pixels(roi, g, cfg), 0.0);
}

TEST(EdgeLikePixels, StepEdgeMatchesOracle) {
    FeatureConfig cfg;
    std::vector<std::int32_t> v(32 * 32);
    for (std::size_t r = 0; r < 32; ++r)
        for (std::size_t c = 0; c < 32; ++c) v[r * 32 + c] = c < 16 ? 0 : 200;
    RasterGrid g = grid_of(32, 32, std::move(v));
    RegionOfInterest roi = rect_roi(0, 31, 0, 31);
    double elp = edge_like_pixels(roi, g, cfg);
    EXPECT_GT(elp, 0.0);
    EXPECT_DOUBLE_EQ(elp, oracles::brute_elp(roi, g, cfg));
}

TEST(EdgeLikePixels, MatchesOracleOnRandomRasters) {
    FeatureConfig cfg;
    Rng rng(13);
    for (int trial = 0; trial < 10; ++trial) {
        RasterGrid g = random_grid(24, rng, trial % 2 ? 150 : 3);
        RegionOfInterest roi = rect_roi(0, 23, 0, 23);
        EXPECT_DOUBLE_EQ(edge_like_pixels(roi, g, cfg), oracles::brute_elp(roi, g, cfg))
            << "trial " << trial;
    }
}

TEST(EdgeLikePixels, OnlyFullNeighborhoodsCount) {
    FeatureConfig cfg;
    Rng rng(3);
    RasterGrid g = random_grid(20, rng);
    // A region hugging the border: rows 0..4. Rows 0..2 are not evaluable
    // (radius 3), so the denominator is the 2x20... rows 3..4 minus side
    // columns: cols 3..16, rows 3..4 -> 28 pixels.
    RegionOfInterest roi = rect_roi(0, 4, 0, 19);
    double elp = edge_like_pixels(roi, g, cfg);
    EXPECT_GE(elp, 0.0);
    EXPECT_LE(elp, 1.0);
    EXPECT_DOUBLE_EQ(elp, oracles::brute_elp(roi, g, cfg));
    // A region with no evaluable pixel at all.
    RegionOfInterest border = rect_roi(0, 1, 0, 19);
    try {
        edge_like_pixels(border, g, cfg);
        FAIL() << "expected degenerate-region rejection";
    } catch (const RegionRejected& e) {
        EXPECT_EQ(e.reason(), RejectReason::degenerate_region);
    }
}

TEST(TreetopSpatialDistribution, SingleTreetopIsOne) {
    FeatureConfig cfg;
    std::vector<Treetop> one = {{0, 0, 50, 12.5, 99.5}};
    EXPECT_DOUBLE_EQ(treetop_spatial_distribution(one, cfg), 1.0);
    EXPECT_THROW(treetop_spatial_distribution({}, cfg), ContractError);
}

TEST(TreetopSpatialDistribution, AlignedGridCollapses) {
    FeatureConfig cfg;
    std::vector<Treetop> grid;
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j)
            grid.push_back({0, 0, 100, 3.0 * i, 3.0 * j});
    double v = treetop_spatial_distribution(grid, cfg);
    // Along the x axis the 100 points collapse onto 10 projection values
    // spanning 27 m: 10 occupied bins of 28. Other directions can only be
    // equal or lower.
    EXPECT_LE(v, 10.0 / 28.0 + 1e-12);
    EXPECT_DOUBLE_EQ(v, oracles::direct_ttsd(grid, cfg));
    EXPECT_GT(v, 0.0);
}

TEST(TreetopSpatialDistribution, MatchesDirectEvaluation) {
    FeatureConfig cfg;
    Rng rng(55);
    for (int trial = 0; trial < 10; ++trial) {
        std::vector<Treetop> tops;
        std::size_t n = 20 + rng.uniform_index(80);
        for (std::size_t i = 0; i < n; ++i)
            tops.push_back({0, 0, 60, rng.uniform(0.0, 40.0), rng.uniform(0.0, 40.0)});
        EXPECT_DOUBLE_EQ(treetop_spatial_distribution(tops, cfg),
                         oracles::direct_ttsd(tops, cfg))
            << "trial " << trial;
    }
}

TEST(TreetopSpatialDistribution, RandomBeatsAlignedGrid) {
    FeatureConfig cfg;
    std::vector<Treetop> grid;
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) grid.push_back({0, 0, 100, 3.0 * i, 3.0 * j});
    double grid_v = treetop_spatial_distribution(grid, cfg);
    int wins = 0;
    for (int seed = 0; seed < 100; ++seed) {
        Rng rng(1000 + seed);
        std::vector<Treetop> rnd;
        for (int i = 0; i < 100; ++i)
            rnd.push_back({0, 0, 100, rng.uniform(0.0, 30.0), rng.uniform(0.0, 30.0)});
        if (treetop_spatial_distribution(rnd, cfg) > grid_v) ++wins;
    }
    EXPECT_GE(wins, 97);
}

TEST(TreetopSpatialDistribution, InvariantUnderDirectionSetRotation) {
    FeatureConfig cfg;
    Rng rng(17);
    std::vector<Treetop> tops;
    for (int i = 0; i < 60; ++i)
        tops.push_back({0, 0, 80, rng.uniform(0.0, 50.0), rng.uniform(0.0, 50.0)});
    double base = treetop_spatial_distribution(tops, cfg);
    for (int k : {1, 7, 50, 99}) {
        double ang = M_PI * static_cast<double>(k) / cfg.ttsd_directions;
        std::vector<Treetop> rot = tops;
        for (Treetop& t : rot) {
            double x = t.x * std::cos(ang) - t.y * std::sin(ang);
            double y = t.x * std::sin(ang) + t.y * std::cos(ang);
            t.x = x;
            t.y = y;
        }
        // Rotations whose mirrored directions re-phase a bin grid can move
        // the minimum by up to one bin's occupancy; no more.
        double bound = std::max(oracles::ttsd_one_bin_bound(tops, cfg),
                                oracles::ttsd_one_bin_bound(rot, cfg));
        EXPECT_NEAR(treetop_spatial_distribution(rot, cfg), base, bound + 1e-12) << "k=" << k;
    }
}

TEST(Extract, DeterministicAndComplete) {
    FeatureConfig cfg;
    Rng rng(31);
    RasterGrid g = random_grid(30, rng);
    RegionOfInterest roi = rect_roi(3, 26, 3, 26, 576.0);
    FeatureVector a = extract(roi, g, cfg);
    FeatureVector b = extract(roi, g, cfg);
    EXPECT_EQ(a.td, b.td);
    EXPECT_EQ(a.thm, b.thm);
    EXPECT_EQ(a.thv, b.thv);
    EXPECT_EQ(a.ttd, b.ttd);
    EXPECT_EQ(a.tthm, b.tthm);
    EXPECT_EQ(a.tthv, b.tthv);
    EXPECT_EQ(a.elp, b.elp);
    EXPECT_EQ(a.ttsd, b.ttsd);
    // Value ranges.
    EXPECT_GE(a.td, 0.0);
    EXPECT_LE(a.td, 1.0);
    EXPECT_GE(a.elp, 0.0);
    EXPECT_LE(a.elp, 1.0);
    EXPECT_GT(a.ttsd, 0.0);
    EXPECT_LE(a.ttsd, 1.0);
    EXPECT_GE(a.thm, static_cast<double>(cfg.h_min_dm));
    EXPECT_GT(a.ttd, 0.0);
}

TEST(Extract, NoTreesPropagates) {
    FeatureConfig cfg;
    RasterGrid g = grid_of(10, 10, std::vector<std::int32_t>(100, 20));
    RegionOfInterest roi = rect_roi(0, 9, 0, 9);
    EXPECT_THROW(extract(roi, g, cfg), RegionRejected);
}

TEST(FeatureProperties, TranslationLeavesPixelFeaturesIdentical) {
    FeatureConfig cfg;
    Rng rng(41);
    std::vector<std::int32_t> vals(40 * 40);
    for (auto& v : vals) v = static_cast<std::int32_t>(rng.uniform_int(0, 160));
    RasterGrid a = RasterGrid::from_values(40, 40, 0, 0, 1.0, vals);
    RasterGrid b = RasterGrid::from_values(40, 40, 5321.0, -777.5, 1.0, vals);
    RegionOfInterest roi = rect_roi(4, 35, 4, 35, 1024.0);
    FeatureVector fa = extract(roi, a, cfg);
    FeatureVector fb = extract(roi, b, cfg);
    EXPECT_EQ(fa.td, fb.td);
    EXPECT_EQ(fa.thm, fb.thm);
    EXPECT_EQ(fa.thv, fb.thv);
    EXPECT_EQ(fa.ttd, fb.ttd);
    EXPECT_EQ(fa.tthm, fb.tthm);
    EXPECT_EQ(fa.tthv, fb.tthv);
    EXPECT_EQ(fa.elp, fb.elp);
    // Bin boundaries can shift by a fraction of one bin; the spread of the
    // region keeps every direction above ~30 bins, so one bin is < 0.05.
    EXPECT_NEAR(fa.ttsd, fb.ttsd, 0.05);
}

TEST(FeatureProperties, UniformCanopyLiftShiftsMeansOnly) {
    FeatureConfig cfg;
    Rng rng(43);
    std::vector<std::int32_t> vals(36 * 36);
    // Bimodal: ground well below threshold, canopy at/above it, so a +c
    // lift of the canopy crosses nothing.
    for (auto& v : vals)
        v = rng.uniform() < 0.4 ? static_cast<std::int32_t>(rng.uniform_int(0, 20))
                                : static_cast<std::int32_t>(rng.uniform_int(40, 160));
    std::vector<std::int32_t> lifted = vals;
    const std::int32_t c = 30;
    for (auto& v : lifted)
        if (v >= cfg.h_min_dm) v += c;
    RasterGrid a = RasterGrid::from_values(36, 36, 0, 0, 1.0, vals);
    RasterGrid b = RasterGrid::from_values(36, 36, 0, 0, 1.0, lifted);
    RegionOfInterest roi = rect_roi(4, 31, 4, 31, 784.0);
    FeatureVector fa = extract(roi, a, cfg);
    FeatureVector fb = extract(roi, b, cfg);
    EXPECT_EQ(fa.td, fb.td);
    EXPECT_EQ(fa.ttd, fb.ttd);
    EXPECT_EQ(fa.ttsd, fb.ttsd);
    EXPECT_DOUBLE_EQ(fb.thm, fa.thm + c);
    EXPECT_DOUBLE_EQ(fb.tthm, fa.tthm + c);
    EXPECT_LT(fb.thv, fa.thv);
    EXPECT_LT(fb.tthv, fa.tthv);
    // Same treetop pixels exactly.
    auto ta = detect_treetops(roi, a, cfg);
    auto tb = detect_treetops(roi, b, cfg);
    ASSERT_EQ(ta.size(), tb.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
        EXPECT_EQ(ta[i].row, tb[i].row);
        EXPECT_EQ(ta[i].col, tb[i].col);
    }
}

TEST(FeatureProperties, QuarterTurnPreservesValueStatistics) {
    FeatureConfig cfg;
    Rng rng(47);
    std::size_t n = 30;
    std::vector<std::int32_t> vals(n * n);
    for (auto& v : vals) v = static_cast<std::int32_t>(rng.uniform_int(0, 150));
    std::vector<std::int32_t> rot(n * n);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t c = 0; c < n; ++c) rot[(n - 1 - c) * n + r] = vals[r * n + c];
    RasterGrid a = RasterGrid::from_values(n, n, 0, 0, 1.0, vals);
    RasterGrid b = RasterGrid::from_values(n, n, 0, 0, 1.0, rot);
    RegionOfInterest roi = rect_roi(0, n - 1, 0, n - 1, static_cast<double>(n * n));
    FeatureVector fa = extract(roi, a, cfg);
    FeatureVector fb = extract(roi, b, cfg);
    EXPECT_DOUBLE_EQ(fa.td, fb.td);
    EXPECT_DOUBLE_EQ(fa.thm, fb.thm);
    EXPECT_DOUBLE_EQ(fa.thv, fb.thv);
    EXPECT_DOUBLE_EQ(fa.ttd, fb.ttd);
    EXPECT_DOUBLE_EQ(fa.tthm, fb.tthm);
    EXPECT_DOUBLE_EQ(fa.tthv, fb.tthv);
    // Treetop positions may dedup differently, but heights match as a
    // multiset.
    auto ta = detect_treetops(roi, a, cfg);
    auto tb = detect_treetops(roi, b, cfg);
    std::multiset<std::int32_t> ha, hb;
    for (const Treetop& t : ta) ha.insert(t.height_dm);
    for (const Treetop& t : tb) hb.insert(t.height_dm);
    EXPECT_EQ(ha, hb);
}

TEST(FeatureConfigValidation, RejectsBadValues) {
    FeatureConfig cfg;
    cfg.h_min_dm = 0;
    EXPECT_THROW(cfg.check(1.0), ConfigError);
    cfg = FeatureConfig{};
    cfg.d_min_m = 0.2; // window would be 1 px
    EXPECT_THROW(cfg.check(1.0), ConfigError);
    cfg = FeatureConfig{};
    cfg.lbp_points = 2;
    EXPECT_THROW(cfg.check(1.0), ConfigError);
    cfg = FeatureConfig{};
    cfg.ttsd_directions = 0;
    EXPECT_THROW(cfg.check(1.0), ConfigError);
    cfg = FeatureConfig{};
    EXPECT_EQ(cfg.window_px(1.0), 5);
    EXPECT_EQ(cfg.window_px(0.5), 9);
    EXPECT_NO_THROW(cfg.check(1.0));
}
