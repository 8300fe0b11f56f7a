#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <string>
#include <vector>

#include "chmnat/common.hpp"
#include "chmnat/geometry.hpp"
#include "chmnat/raster.hpp"

namespace chmnat {

// Knobs for the eight per-region features. Heights are in decimeters to
// match the raster values; distances in meters.
struct FeatureConfig {
    int h_min_dm = 40;          // minimum canopy height that counts as a tree
    double d_min_m = 2.0;       // minimum treetop separation; sets the filter window
    int lbp_points = 24;        // sampling points on the circle
    int lbp_radius_px = 3;      // circle radius in pixels
    double ttsd_bin_width_m = 1.0;
    int ttsd_directions = 100;

    // Max-filter window in pixels: 2*d_min+1 at 1 m cells, always odd.
    int window_px(double cell_size) const {
        return 2 * static_cast<int>(std::llround(d_min_m / cell_size)) + 1;
    }

    void check(double cell_size) const {
        if (h_min_dm <= 0) throw ConfigError("features: h_min must be positive");
        if (window_px(cell_size) < 3)
            throw ConfigError("features: max-filter window must be at least 3 pixels");
        if (lbp_points < 4) throw ConfigError("features: lbp_points must be at least 4");
        if (lbp_radius_px < 1) throw ConfigError("features: lbp_radius must be at least 1");
        if (!(ttsd_bin_width_m > 0)) throw ConfigError("features: ttsd bin width must be positive");
        if (ttsd_directions < 1) throw ConfigError("features: ttsd_directions must be at least 1");
    }
};

struct Treetop {
    std::size_t row = 0;
    std::size_t col = 0;
    std::int32_t height_dm = 0;
    double x = 0; // pixel-center ground coordinates
    double y = 0;
};

struct FeatureVector {
    double td = 0;   // fraction of region pixels that are trees
    double thm = 0;  // mean tree height, dm
    double thv = 0;  // tree height stddev / mean
    double ttd = 0;  // treetops per hectare
    double tthm = 0; // mean treetop height, dm
    double tthv = 0; // treetop height stddev / mean
    double elp = 0;  // fraction of edge-like pixels
    double ttsd = 0; // minimum directional bin occupancy of treetop centers
};

inline constexpr const char* kFeatureNames[8] = {"td",   "thm",  "thv", "ttd",
                                                 "tthm", "tthv", "elp", "ttsd"};

// Pixels of the region at or above the tree height threshold (the set the
// height statistics are computed over). May be empty.
inline std::vector<PixelRC> tree_pixels(const RegionOfInterest& roi, const RasterGrid& raster,
                                        const FeatureConfig& cfg) {
    std::vector<PixelRC> out;
    out.reserve(roi.pixels.size());
    for (const PixelRC& px : roi.pixels)
        if (raster.at_unsafe(px.row, px.col) >= cfg.h_min_dm) out.push_back(px);
    return out;
}

inline double tree_density(const RegionOfInterest& roi, const RasterGrid& raster,
                           const FeatureConfig& cfg) {
    if (roi.pixels.empty()) throw ContractError("tree_density: region has no pixels");
    return static_cast<double>(tree_pixels(roi, raster, cfg).size()) /
           static_cast<double>(roi.pixels.size());
}

struct HeightStats {
    double mean_dm = 0;
    double rel_stddev = 0;
};

inline HeightStats tree_height_stats(const RegionOfInterest& roi, const RasterGrid& raster,
                                     const FeatureConfig& cfg) {
    std::vector<PixelRC> trees = tree_pixels(roi, raster, cfg);
    if (trees.empty())
        throw RegionRejected(RejectReason::no_trees,
                             "region '" + roi.polygon.source_id + "' has no tree pixels");
    std::vector<double> h;
    h.reserve(trees.size());
    for (const PixelRC& px : trees)
        h.push_back(static_cast<double>(raster.at_unsafe(px.row, px.col)));
    double m = mean_of(h);
    return {m, pop_stddev(h) / m};
}

namespace detail {

// Max filter over the mask bounding box, w x w window. Values outside the
// raster or equal to nodata act as minus infinity; in-raster pixels outside
// the region do take part. Separable: horizontal pass then vertical.
class MaxFiltered {
public:
    MaxFiltered(const RasterGrid& g, std::size_t r_lo, std::size_t r_hi, std::size_t c_lo,
                std::size_t c_hi, int window) {
        constexpr std::int32_t kNegInf = std::numeric_limits<std::int32_t>::min();
        int half = window / 2;
        r_lo_ = r_lo;
        c_lo_ = c_lo;
        n_cols_ = c_hi - c_lo + 1;
        // Horizontal maxima for every row the vertical pass can touch.
        long long band_lo = static_cast<long long>(r_lo) - half;
        long long band_hi = static_cast<long long>(r_hi) + half;
        band_lo = std::max<long long>(band_lo, 0);
        band_hi = std::min<long long>(band_hi, static_cast<long long>(g.n_rows()) - 1);
        band_lo_ = static_cast<std::size_t>(band_lo);
        std::size_t band_rows = static_cast<std::size_t>(band_hi - band_lo) + 1;
        std::vector<std::int32_t> hmax(band_rows * n_cols_, kNegInf);
        for (std::size_t r = 0; r < band_rows; ++r) {
            std::size_t rr = band_lo_ + r;
            for (std::size_t c = 0; c < n_cols_; ++c) {
                long long cc0 = static_cast<long long>(c_lo + c) - half;
                long long cc1 = static_cast<long long>(c_lo + c) + half;
                cc0 = std::max<long long>(cc0, 0);
                cc1 = std::min<long long>(cc1, static_cast<long long>(g.n_cols()) - 1);
                std::int32_t best = kNegInf;
                for (long long cc = cc0; cc <= cc1; ++cc) {
                    std::int32_t v = g.at_unsafe(rr, static_cast<std::size_t>(cc));
                    if (v != g.nodata_value()) best = std::max(best, v);
                }
                hmax[r * n_cols_ + c] = best;
            }
        }
        // Vertical pass over the requested box only.
        values_.assign((r_hi - r_lo + 1) * n_cols_, kNegInf);
        for (std::size_t r = r_lo; r <= r_hi; ++r) {
            long long rr0 = static_cast<long long>(r) - half;
            long long rr1 = static_cast<long long>(r) + half;
            rr0 = std::max<long long>(rr0, static_cast<long long>(band_lo_));
            rr1 = std::min<long long>(rr1, static_cast<long long>(band_lo_ + band_rows) - 1);
            for (std::size_t c = 0; c < n_cols_; ++c) {
                std::int32_t best = kNegInf;
                for (long long rr = rr0; rr <= rr1; ++rr)
                    best = std::max(best,
                                    hmax[static_cast<std::size_t>(rr - static_cast<long long>(band_lo_)) *
                                             n_cols_ +
                                         c]);
                values_[(r - r_lo) * n_cols_ + c] = best;
            }
        }
    }

    std::int32_t at(std::size_t row, std::size_t col) const {
        return values_[(row - r_lo_) * n_cols_ + (col - c_lo_)];
    }

private:
    std::vector<std::int32_t> values_;
    std::size_t r_lo_ = 0, c_lo_ = 0, band_lo_ = 0, n_cols_ = 0;
};

} // namespace detail

// Local height maxima within the region: pixels whose value matches the
// windowed maximum and clears the tree threshold. Contiguous equal-valued
// maxima (8-connected) collapse to their top-left-most pixel.
inline std::vector<Treetop> detect_treetops(const RegionOfInterest& roi, const RasterGrid& raster,
                                            const FeatureConfig& cfg) {
    cfg.check(raster.cell_size());
    if (roi.pixels.empty()) throw ContractError("detect_treetops: region has no pixels");
    int window = cfg.window_px(raster.cell_size());

    std::size_t r_lo = roi.pixels.front().row, r_hi = roi.pixels.front().row;
    std::size_t c_lo = roi.pixels.front().col, c_hi = roi.pixels.front().col;
    for (const PixelRC& px : roi.pixels) {
        r_lo = std::min(r_lo, px.row);
        r_hi = std::max(r_hi, px.row);
        c_lo = std::min(c_lo, px.col);
        c_hi = std::max(c_hi, px.col);
    }
    detail::MaxFiltered filtered(raster, r_lo, r_hi, c_lo, c_hi, window);

    // Candidate pixels, sorted (row, col) because roi.pixels is.
    std::vector<PixelRC> cand;
    for (const PixelRC& px : roi.pixels) {
        std::int32_t v = raster.at_unsafe(px.row, px.col);
        if (v >= cfg.h_min_dm && v == filtered.at(px.row, px.col)) cand.push_back(px);
    }
    if (cand.empty())
        throw RegionRejected(RejectReason::no_trees,
                             "region '" + roi.polygon.source_id + "' has no treetops");

    // Collapse 8-connected equal-valued candidate plateaus. Scanning in
    // (row, col) order makes the BFS root the top-left-most member.
    auto key = [&](std::size_t r, std::size_t c) {
        return (r - r_lo) * (c_hi - c_lo + 1) + (c - c_lo);
    };
    std::vector<char> is_cand((r_hi - r_lo + 1) * (c_hi - c_lo + 1), 0);
    for (const PixelRC& px : cand) is_cand[key(px.row, px.col)] = 1;
    std::vector<char> visited(is_cand.size(), 0);

    std::vector<Treetop> tops;
    for (const PixelRC& px : cand) {
        if (visited[key(px.row, px.col)]) continue;
        std::int32_t v = raster.at_unsafe(px.row, px.col);
        std::queue<PixelRC> q;
        q.push(px);
        visited[key(px.row, px.col)] = 1;
        while (!q.empty()) {
            PixelRC cur = q.front();
            q.pop();
            for (int dr = -1; dr <= 1; ++dr) {
                for (int dc = -1; dc <= 1; ++dc) {
                    if (dr == 0 && dc == 0) continue;
                    long long nr = static_cast<long long>(cur.row) + dr;
                    long long nc = static_cast<long long>(cur.col) + dc;
                    if (nr < static_cast<long long>(r_lo) || nr > static_cast<long long>(r_hi) ||
                        nc < static_cast<long long>(c_lo) || nc > static_cast<long long>(c_hi))
                        continue;
                    PixelRC nb{static_cast<std::size_t>(nr), static_cast<std::size_t>(nc)};
                    std::size_t k = key(nb.row, nb.col);
                    if (!is_cand[k] || visited[k]) continue;
                    if (raster.at_unsafe(nb.row, nb.col) != v) continue;
                    visited[k] = 1;
                    q.push(nb);
                }
            }
        }
        auto [x, y] = raster.pixel_center(px.row, px.col);
        tops.push_back({px.row, px.col, v, x, y});
    }
    return tops;
}

struct TreetopStats {
    double density_per_ha = 0;
    double mean_dm = 0;
    double rel_stddev = 0;
};

inline TreetopStats treetop_stats(const std::vector<Treetop>& treetops,
                                  const RegionOfInterest& roi) {
    if (treetops.empty()) throw ContractError("treetop_stats: no treetops");
    if (!(roi.area_m2 > 0)) throw ContractError("treetop_stats: region area is not positive");
    std::vector<double> h;
    h.reserve(treetops.size());
    for (const Treetop& t : treetops) h.push_back(static_cast<double>(t.height_dm));
    double mean = mean_of(h);
    return {static_cast<double>(treetops.size()) / (roi.area_m2 / 10000.0), mean,
            pop_stddev(h) / mean};
}

namespace detail {

// Sampling directions for the LBP circle. Cosines and sines that land
// within 1e-9 of a multiple of one half snap to it exactly, so symmetric
// directions (0, 30, 90 degrees, ...) sample at exact pixel or midpoint
// positions instead of an ulp away from them.
inline std::vector<std::pair<double, double>> lbp_offsets(int points, int radius) {
    auto snap = [](double t) {
        double twice = 2.0 * t;
        double r = std::round(twice);
        return std::abs(twice - r) < 1e-9 ? r / 2.0 : t;
    };
    std::vector<std::pair<double, double>> off(static_cast<std::size_t>(points));
    for (int k = 0; k < points; ++k) {
        double ang = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(points);
        double dx = static_cast<double>(radius) * snap(std::cos(ang));
        double dy = -static_cast<double>(radius) * snap(std::sin(ang)); // row axis points down
        off[static_cast<std::size_t>(k)] = {dy, dx};
    }
    return off;
}

// Bilinear sample at fractional (row, col). Nodata reads as ground (0).
// The nested-lerp form returns the exact common value on constant patches
// and reads only the pixels a zero fraction actually needs.
inline double bilinear_sample(const RasterGrid& g, double row, double col) {
    double fr = std::floor(row);
    double fc = std::floor(col);
    auto r0 = static_cast<std::size_t>(fr);
    auto c0 = static_cast<std::size_t>(fc);
    double fy = row - fr;
    double fx = col - fc;
    auto val = [&](std::size_t r, std::size_t c) {
        std::int32_t v = g.at_unsafe(r, c);
        return v == g.nodata_value() ? 0.0 : static_cast<double>(v);
    };
    double top = val(r0, c0);
    if (fx != 0.0) top += fx * (val(r0, c0 + 1) - top);
    if (fy == 0.0) return top;
    double bottom = val(r0 + 1, c0);
    if (fx != 0.0) bottom += fx * (val(r0 + 1, c0 + 1) - bottom);
    return top + fy * (bottom - top);
}

} // namespace detail

// Fraction of evaluable region pixels whose local binary pattern is
// edge-like. A pixel is evaluable when the whole radius-r circle fits in
// the raster. Pattern: p circle samples (bilinear), bit set when sample >=
// center; uniform patterns (<= 2 transitions) score their popcount, others
// p+1; edge-like means a score within r-1 of p/2.
inline double edge_like_pixels(const RegionOfInterest& roi, const RasterGrid& raster,
                               const FeatureConfig& cfg) {
    cfg.check(raster.cell_size());
    int p = cfg.lbp_points;
    int r = cfg.lbp_radius_px;
    auto offsets = detail::lbp_offsets(p, r);
    int lo = p / 2 - (r - 1);
    int hi = p / 2 + (r - 1);

    std::size_t evaluable = 0;
    std::size_t edge_like = 0;
    std::vector<char> bits(static_cast<std::size_t>(p));
    for (const PixelRC& px : roi.pixels) {
        if (px.row < static_cast<std::size_t>(r) || px.col < static_cast<std::size_t>(r) ||
            px.row + static_cast<std::size_t>(r) >= raster.n_rows() ||
            px.col + static_cast<std::size_t>(r) >= raster.n_cols())
            continue;
        ++evaluable;
        double center = static_cast<double>(raster.at_unsafe(px.row, px.col));
        for (int k = 0; k < p; ++k) {
            auto [dy, dx] = offsets[static_cast<std::size_t>(k)];
            double sample = detail::bilinear_sample(raster, static_cast<double>(px.row) + dy,
                                                    static_cast<double>(px.col) + dx);
            bits[static_cast<std::size_t>(k)] = sample >= center ? 1 : 0;
        }
        int transitions = 0;
        int ones = 0;
        for (int k = 0; k < p; ++k) {
            ones += bits[static_cast<std::size_t>(k)];
            if (bits[static_cast<std::size_t>(k)] != bits[static_cast<std::size_t>((k + 1) % p)])
                ++transitions;
        }
        int score = transitions <= 2 ? ones : p + 1;
        if (score >= lo && score <= hi) ++edge_like;
    }
    if (evaluable == 0)
        throw RegionRejected(RejectReason::degenerate_region,
                             "region '" + roi.polygon.source_id +
                                 "' has no pixel with a full texture neighborhood");
    return static_cast<double>(edge_like) / static_cast<double>(evaluable);
}

// Minimum, over n projection directions, of the fraction of occupied
// fixed-width bins when treetop centers are projected onto the direction.
// Regular plantings collapse onto few projection values in the aligned
// direction, so their minimum is small; irregular stands stay spread out.
inline double treetop_spatial_distribution(const std::vector<Treetop>& treetops,
                                           const FeatureConfig& cfg) {
    if (treetops.empty()) throw ContractError("treetop_spatial_distribution: no treetops");
    double w = cfg.ttsd_bin_width_m;
    int n = cfg.ttsd_directions;
    double best = 1.0;
    std::vector<double> s(treetops.size());
    std::vector<char> occupied;
    for (int j = 0; j < n; ++j) {
        double ang = M_PI * static_cast<double>(j) / static_cast<double>(n);
        double ca = std::cos(ang), sa = std::sin(ang);
        for (std::size_t i = 0; i < treetops.size(); ++i)
            s[i] = treetops[i].x * ca + treetops[i].y * sa;
        auto [mn_it, mx_it] = std::minmax_element(s.begin(), s.end());
        double mn = *mn_it, mx = *mx_it;
        // Bins of width w covering [mn, mx]; the top value falls in the
        // last bin.
        auto nb = static_cast<std::size_t>(std::floor((mx - mn) / w)) + 1;
        occupied.assign(nb, 0);
        for (double v : s) {
            auto idx = static_cast<std::size_t>(std::floor((v - mn) / w));
            occupied[std::min(idx, nb - 1)] = 1;
        }
        std::size_t count = 0;
        for (char o : occupied) count += o;
        best = std::min(best, static_cast<double>(count) / static_cast<double>(nb));
    }
    return best;
}

// All eight features for one region. Regions that fail the tree filters
// throw RegionRejected; callers treat that as a data rejection, not a bug.
inline FeatureVector extract(const RegionOfInterest& roi, const RasterGrid& raster,
                             const FeatureConfig& cfg) {
    cfg.check(raster.cell_size());
    FeatureVector f;
    f.td = tree_density(roi, raster, cfg);
    HeightStats hs = tree_height_stats(roi, raster, cfg);
    f.thm = hs.mean_dm;
    f.thv = hs.rel_stddev;
    std::vector<Treetop> tops = detect_treetops(roi, raster, cfg);
    TreetopStats ts = treetop_stats(tops, roi);
    f.ttd = ts.density_per_ha;
    f.tthm = ts.mean_dm;
    f.tthv = ts.rel_stddev;
    f.elp = edge_like_pixels(roi, raster, cfg);
    f.ttsd = treetop_spatial_distribution(tops, cfg);
    return f;
}

} // namespace chmnat
