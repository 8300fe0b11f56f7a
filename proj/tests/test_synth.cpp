#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "chmnat/features.hpp"
#include "chmnat/synth.hpp"

using namespace chmnat;

namespace {

SynthConfig small_config(int slots, double pitch_m, std::uint64_t seed = 42) {
    SynthConfig cfg;
    cfg.seed = seed;
    cfg.stand_slots = slots;
    cfg.extent_m = slots * pitch_m;
    return cfg;
}

// One-sided Mann-Whitney: returns the z statistic for "b tends larger
// than a" under the normal approximation (valid here, n about 30 per side).
double rank_test_z(const std::vector<double>& a, const std::vector<double>& b) {
    double u = 0;
    for (double x : a)
        for (double y : b) {
            if (x < y)
                u += 1;
            else if (x == y)
                u += 0.5;
        }
    double n1 = static_cast<double>(a.size()), n2 = static_cast<double>(b.size());
    double mean = n1 * n2 / 2.0;
    double sd = std::sqrt(n1 * n2 * (n1 + n2 + 1) / 12.0);
    return (u - mean) / sd;
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

} // namespace

TEST(Synth, SameSeedIsBitIdenticalDifferentSeedIsNot) {
    SynthConfig cfg = small_config(4, 100);
    Scene a = generate_scene(cfg);
    Scene b = generate_scene(cfg);
    ASSERT_EQ(a.raster.n_rows(), b.raster.n_rows());
    for (std::size_t r = 0; r < a.raster.n_rows(); ++r)
        for (std::size_t c = 0; c < a.raster.n_cols(); ++c)
            ASSERT_EQ(a.raster.at(r, c), b.raster.at(r, c)) << r << "," << c;
    ASSERT_EQ(a.polygons.size(), b.polygons.size());
    for (std::size_t i = 0; i < a.polygons.size(); ++i) {
        ASSERT_EQ(a.polygons[i].rings[0].size(), b.polygons[i].rings[0].size());
        for (std::size_t k = 0; k < a.polygons[i].rings[0].size(); ++k) {
            EXPECT_EQ(a.polygons[i].rings[0][k].x, b.polygons[i].rings[0][k].x);
            EXPECT_EQ(a.polygons[i].rings[0][k].y, b.polygons[i].rings[0][k].y);
        }
    }

    cfg.seed = 43;
    Scene c = generate_scene(cfg);
    bool differs = false;
    for (std::size_t r = 0; r < a.raster.n_rows() && !differs; ++r)
        for (std::size_t cc = 0; cc < a.raster.n_cols() && !differs; ++cc)
            differs = a.raster.at(r, cc) != c.raster.at(r, cc);
    EXPECT_TRUE(differs);
}

TEST(Synth, ZeroJitterPlantationRecoversPlantedTreeCount) {
    SynthConfig cfg = small_config(1, 120);
    cfg.stand_fill_min = cfg.stand_fill_max = 0.8;
    cfg.plantation.position_jitter_m = 0;
    cfg.plantation.height_jitter_dm = 0;
    Scene scene = generate_scene(cfg);
    ASSERT_EQ(scene.polygons.size(), 1u);
    ASSERT_EQ(scene.truth[0].label, 0); // slot (0,0) is a plantation
    ASSERT_GT(scene.truth[0].trees.size(), 0u);

    RegionOfInterest roi = rasterize(scene.polygons[0], scene.raster);
    std::vector<Treetop> tops = detect_treetops(roi, scene.raster, FeatureConfig{});
    EXPECT_EQ(tops.size(), scene.truth[0].trees.size());
}

TEST(Synth, NaturalTreeCountsFollowThePoissonIntensity) {
    // 2x2 checkerboard: slots (1,0) and (0,1) are natural stands. Stand side
    // is pinned near 100 m so the intensity applies to about one hectare.
    double pitch = 141.42;
    double fill = 100.0 / pitch;
    int inside = 0, total = 0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        SynthConfig cfg = small_config(2, pitch, seed);
        cfg.stand_fill_min = cfg.stand_fill_max = fill;
        cfg.natural.intensity_per_ha = 300;
        Scene scene = generate_scene(cfg);
        for (std::size_t i = 0; i < scene.truth.size(); ++i) {
            if (scene.truth[i].label != 1) continue;
            double lambda = 300.0 * scene.truth[i].area_m2 / 10000.0;
            double half = 2.576 * std::sqrt(lambda);
            double count = static_cast<double>(scene.truth[i].trees.size());
            ++total;
            if (count >= lambda - half && count <= lambda + half) ++inside;
        }
    }
    ASSERT_EQ(total, 200);
    EXPECT_GE(inside, 192); // 99% interval; allow modest sampling slack
}

TEST(Synth, PlantationsScoreLowerTtsdAndElpThanNatural) {
    // Design contract of the generator: regular short smooth canopies vs
    // scattered tall rough ones must part on the texture features.
    SynthConfig cfg = small_config(8, 220);
    Scene scene = generate_scene(cfg);
    std::vector<double> ttsd0, ttsd1, elp0, elp1;
    for (std::size_t i = 0; i < scene.polygons.size(); ++i) {
        RegionOfInterest roi = rasterize(scene.polygons[i], scene.raster);
        FeatureVector fv = extract(roi, scene.raster, FeatureConfig{});
        if (scene.truth[i].label == 0) {
            ttsd0.push_back(fv.ttsd);
            elp0.push_back(fv.elp);
        } else {
            ttsd1.push_back(fv.ttsd);
            elp1.push_back(fv.elp);
        }
    }
    ASSERT_GE(ttsd0.size(), 30u);
    ASSERT_GE(ttsd1.size(), 30u);
    EXPECT_LT(median_of(ttsd0), median_of(ttsd1));
    EXPECT_LT(median_of(elp0), median_of(elp1));
    // One-sided rank test at p < 0.01 (z > 2.326).
    EXPECT_GT(rank_test_z(ttsd0, ttsd1), 2.326);
    EXPECT_GT(rank_test_z(elp0, elp1), 2.326);
}

TEST(Synth, HeightsStayWithinConfiguredCap) {
    SynthConfig cfg = small_config(4, 100);
    cfg.max_height_dm = 260;
    Scene scene = generate_scene(cfg);
    std::int32_t mx = 0;
    for (std::size_t r = 0; r < scene.raster.n_rows(); ++r)
        for (std::size_t c = 0; c < scene.raster.n_cols(); ++c) {
            std::int32_t v = scene.raster.at(r, c);
            ASSERT_GE(v, 0);
            ASSERT_LE(v, 260);
            mx = std::max(mx, v);
        }
    EXPECT_GT(mx, 40); // canopy actually present
}

TEST(Synth, PolygonsAreDisjointBalancedAndInsideTheExtent) {
    SynthConfig cfg = small_config(4, 100);
    Scene scene = generate_scene(cfg);
    ASSERT_EQ(scene.polygons.size(), 16u);
    int low = 0, high = 0;
    std::vector<Extent> boxes;
    for (const LabeledPolygon& p : scene.polygons) {
        (p.label == Label::low ? low : high)++;
        Extent e = polygon_bbox(p);
        EXPECT_GE(e.x_min, 0.0);
        EXPECT_GE(e.y_min, 0.0);
        EXPECT_LE(e.x_max, cfg.extent_m);
        EXPECT_LE(e.y_max, cfg.extent_m);
        boxes.push_back(e);
    }
    EXPECT_EQ(low, 8);
    EXPECT_EQ(high, 8);
    for (std::size_t i = 0; i < boxes.size(); ++i)
        for (std::size_t j = i + 1; j < boxes.size(); ++j)
            EXPECT_FALSE(boxes[i].overlaps(boxes[j])) << i << " vs " << j;
}

TEST(Synth, SizeDependentBlendFlipsMostlySmallStands) {
    SynthConfig cfg = small_config(6, 100);
    Scene clean = generate_scene(cfg);
    for (const StandTruth& t : clean.truth) EXPECT_FALSE(t.flipped_character);

    cfg.size_dependent_blend = 1.0;
    Scene noisy = generate_scene(cfg);
    double flipped_area = 0, kept_area = 0;
    std::size_t flipped = 0;
    for (const StandTruth& t : noisy.truth) {
        if (t.flipped_character) {
            ++flipped;
            flipped_area += t.area_m2;
        } else {
            kept_area += t.area_m2;
        }
    }
    ASSERT_GT(flipped, 0u);
    ASSERT_LT(flipped, noisy.truth.size());
    double mean_flipped = flipped_area / static_cast<double>(flipped);
    double mean_kept = kept_area / static_cast<double>(noisy.truth.size() - flipped);
    EXPECT_LT(mean_flipped, mean_kept);
}

TEST(Synth, RejectsInvalidConfigs) {
    SynthConfig bad = small_config(4, 100);
    bad.plantation.row_spacing_m = 0;
    EXPECT_THROW(generate_scene(bad), ConfigError);

    bad = small_config(0, 100);
    EXPECT_THROW(generate_scene(bad), ConfigError);

    bad = small_config(4, 100);
    bad.natural.intensity_per_ha = -1;
    EXPECT_THROW(generate_scene(bad), ConfigError);

    bad = small_config(4, 100);
    bad.plantation.height_mean_dm = 30; // below the 4 m treetop floor
    EXPECT_THROW(generate_scene(bad), ConfigError);

    bad = small_config(4, 5); // 5 m pitch cannot hold a stand polygon
    EXPECT_THROW(generate_scene(bad), ConfigError);

    bad = small_config(4, 100);
    bad.size_dependent_blend = 1.5;
    EXPECT_THROW(generate_scene(bad), ConfigError);
}
