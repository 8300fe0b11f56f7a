#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "chmnat/common.hpp"
#include "chmnat/geometry.hpp"
#include "chmnat/raster.hpp"

namespace chmnat {

// Scene generator: a square scene is divided into a grid of stand slots,
// assigned to the two classes in a checkerboard. Plantation stands (label 0,
// low naturalness) carry grid-planted uniform crowns; natural stands
// (label 1) carry Poisson-scattered crowns with broad height spread and
// surface roughness. The two textures differ in exactly the directions the
// features measure: plantations are denser, shorter, smoother, and aligned.

struct PlantationParams {
    double row_spacing_m = 3.0;
    double col_spacing_m = 3.0;
    double position_jitter_m = 0.15; // uniform jitter of each planting spot
    double height_mean_dm = 150;
    double height_jitter_dm = 25; // normal spread of peak heights
    double crown_radius_m = 2.5;
};

struct NaturalParams {
    double intensity_per_ha = 150; // Poisson treetop intensity
    double height_mean_dm = 252;
    double height_spread_dm = 42; // matched to plantation relative spread
    double crown_radius_min_m = 2.1;
    double crown_radius_max_m = 3.5;
    double roughness_amp_dm = 8;    // value-noise amplitude on the canopy
    double roughness_scale_m = 4.0; // value-noise lattice spacing
};

struct SynthConfig {
    std::uint64_t seed = 42;
    double extent_m = 5120;  // square scene side; 4x4 cells of the 1.28 km split
    double cell_size_m = 1.0;
    int stand_slots = 23;    // slots per axis; 23^2 = 529 stands, ~265 per class
    double stand_fill_min = 0.55; // stand side as a fraction of the slot pitch
    double stand_fill_max = 0.9;
    double max_height_dm = 400;
    // Per-stand nuisance draws shared by both classes. The crown profile
    // exponent bends every crown of a stand between plate-like (<1) and
    // cone-like (>1), moving the within-stand height spread; the spread scale
    // multiplies the stand's peak-height jitter. Both overlap the classes on
    // value-variation features while leaving density and mean height apart.
    double profile_exp_min = 0.15;
    double profile_exp_max = 6.0;
    double spread_scale_min = 0.6;
    double spread_scale_max = 1.5;
    // Probability that the smallest stands are generated with the opposite
    // class character while keeping their label; scales linearly to zero for
    // the largest stands. Models size-dependent label noise.
    double size_dependent_blend = 0.0;
    PlantationParams plantation;
    NaturalParams natural;

    void check() const {
        if (extent_m <= 0 || cell_size_m <= 0) throw ConfigError("synth: extent and cell must be positive");
        if (stand_slots < 1) throw ConfigError("synth: need at least one stand slot");
        if (!(stand_fill_min > 0) || stand_fill_min > stand_fill_max || stand_fill_max > 0.95)
            throw ConfigError("synth: stand fill fractions must satisfy 0 < min <= max <= 0.95");
        if (plantation.row_spacing_m <= 0 || plantation.col_spacing_m <= 0)
            throw ConfigError("synth: plantation spacing must be positive");
        if (natural.intensity_per_ha <= 0)
            throw ConfigError("synth: natural intensity must be positive");
        if (plantation.height_mean_dm < 40 || natural.height_mean_dm < 40)
            throw ConfigError("synth: mean heights must reach the 4 m treetop floor");
        if (max_height_dm < plantation.height_mean_dm || max_height_dm < natural.height_mean_dm)
            throw ConfigError("synth: height cap below a class mean");
        if (natural.crown_radius_min_m <= 0 ||
            natural.crown_radius_min_m > natural.crown_radius_max_m ||
            plantation.crown_radius_m <= 0)
            throw ConfigError("synth: crown radii must be positive and ordered");
        if (!(profile_exp_min > 0) || profile_exp_min > profile_exp_max || profile_exp_max > 8)
            throw ConfigError("synth: profile exponents must satisfy 0 < min <= max <= 8");
        if (!(spread_scale_min >= 0) || spread_scale_min > spread_scale_max)
            throw ConfigError("synth: spread scales must satisfy 0 <= min <= max");
        if (size_dependent_blend < 0 || size_dependent_blend > 1)
            throw ConfigError("synth: size_dependent_blend outside [0, 1]");
        double pitch = extent_m / stand_slots;
        if (stand_fill_min * pitch < 4 * cell_size_m + 4)
            throw ConfigError("synth: stands too small to hold a polygon");
    }
};

// Planted ground truth for one stand, index-aligned with Scene::polygons.
struct StandTruth {
    int label = 0;
    bool flipped_character = false; // generated with the other class texture
    double area_m2 = 0;
    std::vector<Point> trees; // planted positions (not detector output)
};

struct Scene {
    RasterGrid raster;
    std::vector<LabeledPolygon> polygons;
    std::vector<StandTruth> truth;
};

namespace detail {

// Stream derivation: decouples per-stand generators from the scene seed so
// stand order and draw counts never interact.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed ^ splitmix64(stream * 0x9E3779B97F4A7C15ull + 0x2545F4914F6CDD1Dull));
}

// Deterministic value noise in [-1, 1] on an integer lattice.
inline double lattice_noise(std::uint64_t seed, long long ix, long long iy) {
    std::uint64_t h = splitmix64(
        seed ^ splitmix64(static_cast<std::uint64_t>(ix) * 0x9E3779B97F4A7C15ull +
                          static_cast<std::uint64_t>(iy) * 0xD1B54A32D192ED03ull));
    return static_cast<double>(h >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

inline double value_noise(std::uint64_t seed, double x, double y, double scale) {
    double gx = x / scale, gy = y / scale;
    long long ix = static_cast<long long>(std::floor(gx));
    long long iy = static_cast<long long>(std::floor(gy));
    double fx = gx - static_cast<double>(ix);
    double fy = gy - static_cast<double>(iy);
    double a = lattice_noise(seed, ix, iy);
    double b = lattice_noise(seed, ix + 1, iy);
    double c = lattice_noise(seed, ix, iy + 1);
    double d = lattice_noise(seed, ix + 1, iy + 1);
    double top = a + fx * (b - a);
    double bot = c + fx * (d - c);
    return top + fy * (bot - top);
}

struct CrownTree {
    double x = 0;
    double y = 0;
    double peak_dm = 0;
    double radius_m = 0;
};

// Working patch of doubles over a cell-aligned box; merged into the scene
// raster after quantization.
struct Patch {
    long long c0 = 0, c1 = 0, r0 = 0, r1 = 0; // half-open global cell range
    std::vector<double> h;

    double& at(long long r, long long c) {
        return h[static_cast<std::size_t>((r - r0) * (c1 - c0) + (c - c0))];
    }
};

inline void splat_crown(Patch& p, const CrownTree& t, double profile_exp, double cell,
                        double raster_top_y) {
    long long cc0 = std::max(p.c0, static_cast<long long>(std::floor((t.x - t.radius_m) / cell)));
    long long cc1 = std::min(p.c1, static_cast<long long>(std::ceil((t.x + t.radius_m) / cell)) + 1);
    long long rr0 = std::max(
        p.r0, static_cast<long long>(std::floor((raster_top_y - (t.y + t.radius_m)) / cell)));
    long long rr1 = std::min(
        p.r1, static_cast<long long>(std::ceil((raster_top_y - (t.y - t.radius_m)) / cell)) + 1);
    double inv_r2 = 1.0 / (t.radius_m * t.radius_m);
    for (long long r = rr0; r < rr1; ++r) {
        double py = raster_top_y - (static_cast<double>(r) + 0.5) * cell;
        for (long long c = cc0; c < cc1; ++c) {
            double px = (static_cast<double>(c) + 0.5) * cell;
            double d2 = (px - t.x) * (px - t.x) + (py - t.y) * (py - t.y);
            double base = 1.0 - d2 * inv_r2;
            if (base <= 0) continue;
            // Radially monotone for any exponent, so each crown keeps a
            // single apex and the treetop census is exponent-independent.
            double v = t.peak_dm * std::pow(base, profile_exp);
            if (v > p.at(r, c)) p.at(r, c) = v;
        }
    }
}

} // namespace detail

inline Scene generate_scene(const SynthConfig& cfg) {
    cfg.check();
    double cell = cfg.cell_size_m;
    std::size_t n = static_cast<std::size_t>(std::llround(cfg.extent_m / cell));
    if (n < 4) throw ConfigError("synth: raster too small");
    double top_y = static_cast<double>(n) * cell; // y of the raster's top edge
    std::vector<std::int32_t> values(n * n, 0);

    Scene scene;
    scene.polygons.reserve(static_cast<std::size_t>(cfg.stand_slots) *
                           static_cast<std::size_t>(cfg.stand_slots));
    double pitch = cfg.extent_m / cfg.stand_slots;

    for (int sy = 0; sy < cfg.stand_slots; ++sy)
        for (int sx = 0; sx < cfg.stand_slots; ++sx) {
            std::uint64_t idx =
                static_cast<std::uint64_t>(sy) * static_cast<std::uint64_t>(cfg.stand_slots) +
                static_cast<std::uint64_t>(sx);
            Rng rng(detail::derive_seed(cfg.seed, idx));
            int label = (sx + sy) % 2 == 0 ? 0 : 1; // plantation : natural

            // Stand rectangle; draws happen in fixed order so the flip below
            // cannot shift the stream.
            double fill = rng.uniform(cfg.stand_fill_min, cfg.stand_fill_max);
            double side = fill * pitch;
            double cx = (sx + 0.5) * pitch + rng.uniform(-0.02, 0.02) * pitch;
            double cy = (sy + 0.5) * pitch + rng.uniform(-0.02, 0.02) * pitch;
            double flip_draw = rng.uniform();
            double mean_scale = rng.uniform(0.9, 1.1); // within-class height variety
            double profile_exp = rng.uniform(cfg.profile_exp_min, cfg.profile_exp_max);
            double spread_scale = rng.uniform(cfg.spread_scale_min, cfg.spread_scale_max);
            double x0 = cx - side / 2, x1 = cx + side / 2;
            double y0 = cy - side / 2, y1 = cy + side / 2;

            double smallness = cfg.stand_fill_max > cfg.stand_fill_min
                                   ? 1.0 - (fill - cfg.stand_fill_min) /
                                               (cfg.stand_fill_max - cfg.stand_fill_min)
                                   : 1.0;
            bool flipped = flip_draw < cfg.size_dependent_blend * smallness;
            bool as_plantation = (label == 0) != flipped;

            StandTruth truth;
            truth.label = label;
            truth.flipped_character = flipped;
            truth.area_m2 = side * side;

            std::vector<detail::CrownTree> trees;
            double inset = 1.5;
            double margin = std::max(cfg.plantation.crown_radius_m,
                                     cfg.natural.crown_radius_max_m) + 1.0;
            if (as_plantation) {
                const PlantationParams& p = cfg.plantation;
                double mean = p.height_mean_dm * mean_scale;
                for (double ty = y0 + inset; ty <= y1 - inset; ty += p.row_spacing_m)
                    for (double tx = x0 + inset; tx <= x1 - inset; tx += p.col_spacing_m) {
                        detail::CrownTree t;
                        t.x = tx + (p.position_jitter_m > 0
                                        ? rng.uniform(-p.position_jitter_m, p.position_jitter_m)
                                        : 0.0);
                        t.y = ty + (p.position_jitter_m > 0
                                        ? rng.uniform(-p.position_jitter_m, p.position_jitter_m)
                                        : 0.0);
                        t.peak_dm = std::clamp(mean + p.height_jitter_dm * spread_scale *
                                                          rng.normal(),
                                               40.0, cfg.max_height_dm);
                        t.radius_m = p.crown_radius_m;
                        trees.push_back(t);
                    }
            } else {
                const NaturalParams& q = cfg.natural;
                double mean = q.height_mean_dm * mean_scale;
                double area_ha = side * side / 10000.0;
                std::uint64_t count = rng.poisson(q.intensity_per_ha * area_ha);
                for (std::uint64_t k = 0; k < count; ++k) {
                    detail::CrownTree t;
                    t.x = rng.uniform(x0 + inset, x1 - inset);
                    t.y = rng.uniform(y0 + inset, y1 - inset);
                    t.peak_dm = std::clamp(mean + q.height_spread_dm * spread_scale * rng.normal(),
                                           40.0, cfg.max_height_dm);
                    t.radius_m = rng.uniform(q.crown_radius_min_m, q.crown_radius_max_m);
                    trees.push_back(t);
                }
            }
            for (const detail::CrownTree& t : trees) truth.trees.push_back({t.x, t.y});

            detail::Patch patch;
            patch.c0 = std::max(0ll, static_cast<long long>(std::floor((x0 - margin) / cell)));
            patch.c1 = std::min(static_cast<long long>(n),
                                static_cast<long long>(std::ceil((x1 + margin) / cell)) + 1);
            patch.r0 = std::max(0ll, static_cast<long long>(std::floor((top_y - (y1 + margin)) / cell)));
            patch.r1 = std::min(static_cast<long long>(n),
                                static_cast<long long>(std::ceil((top_y - (y0 - margin)) / cell)) + 1);
            patch.h.assign(static_cast<std::size_t>((patch.r1 - patch.r0) * (patch.c1 - patch.c0)),
                           0.0);
            for (const detail::CrownTree& t : trees)
                detail::splat_crown(patch, t, profile_exp, cell, top_y);

            std::uint64_t noise_seed = detail::derive_seed(cfg.seed, idx ^ 0xA5A5A5A5A5A5A5A5ull);
            bool rough = !as_plantation && cfg.natural.roughness_amp_dm > 0;
            for (long long r = patch.r0; r < patch.r1; ++r)
                for (long long c = patch.c0; c < patch.c1; ++c) {
                    double h = patch.at(r, c);
                    if (h <= 0) continue;
                    if (rough) {
                        double px = (static_cast<double>(c) + 0.5) * cell;
                        double py = top_y - (static_cast<double>(r) + 0.5) * cell;
                        h += cfg.natural.roughness_amp_dm *
                             detail::value_noise(noise_seed, px, py, cfg.natural.roughness_scale_m);
                    }
                    h = std::clamp(h, 0.0, cfg.max_height_dm);
                    std::int32_t q = static_cast<std::int32_t>(std::llround(h));
                    std::int32_t& cellv = values[static_cast<std::size_t>(r) * n +
                                                 static_cast<std::size_t>(c)];
                    if (q > cellv) cellv = q;
                }

            Ring rect{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
            LabeledPolygon poly = make_polygon({rect});
            poly.label = label == 1 ? Label::high : Label::low;
            poly.source_id = "stand_" + std::to_string(sx) + "_" + std::to_string(sy);
            scene.polygons.push_back(std::move(poly));
            scene.truth.push_back(std::move(truth));
        }

    scene.raster = RasterGrid::from_values(n, n, 0.0, 0.0, cell, std::move(values));
    return scene;
}

} // namespace chmnat
