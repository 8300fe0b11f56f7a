#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "chmnat/common.hpp"
#include "chmnat/raster.hpp"

namespace chmnat {

struct Point {
    double x = 0;
    double y = 0;
};

inline bool operator==(const Point& a, const Point& b) { return a.x == b.x && a.y == b.y; }

using Ring = std::vector<Point>; // closed: first point repeated at the end

enum class Label : int { low = 0, high = 1, unlabeled = 2 };

inline std::string to_string(Label l) {
    switch (l) {
        case Label::low: return "low";
        case Label::high: return "high";
        default: return "unlabeled";
    }
}

// Signed shoelace area of a closed ring; positive when counter-clockwise.
inline double signed_ring_area(const Ring& ring) {
    double sum = 0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i)
        sum += ring[i].x * ring[i + 1].y - ring[i + 1].x * ring[i].y;
    return 0.5 * sum;
}

// A polygonal region with an even-odd interior. Rings are closed and
// oriented: counter-clockwise rings add area, clockwise rings (holes)
// subtract it. Simple polygons store the exterior first and holes after;
// clipped regions may carry several exterior fragments in one ring list.
struct LabeledPolygon {
    std::vector<Ring> rings;
    Label label = Label::unlabeled;
    std::string source_id;
};

inline void validate_rings(const std::vector<Ring>& rings) {
    if (rings.empty()) throw GeometryError("polygon has no rings");
    for (const Ring& r : rings) {
        if (r.size() < 4) throw GeometryError("ring has fewer than 4 points");
        if (!(r.front() == r.back())) throw GeometryError("ring is not closed");
    }
    if (signed_ring_area(rings.front()) == 0.0)
        throw GeometryError("exterior ring has zero area");
}

// Validates and orients a simple polygon: ring 0 becomes counter-clockwise,
// remaining rings (holes) clockwise. Loaders call this so that area and
// point containment work regardless of input winding.
inline LabeledPolygon make_polygon(std::vector<Ring> rings, Label label = Label::unlabeled,
                                   std::string source_id = "") {
    validate_rings(rings);
    for (std::size_t i = 0; i < rings.size(); ++i) {
        double a = signed_ring_area(rings[i]);
        bool want_ccw = (i == 0);
        if ((a > 0) != want_ccw && a != 0) std::reverse(rings[i].begin(), rings[i].end());
    }
    LabeledPolygon p;
    p.rings = std::move(rings);
    p.label = label;
    p.source_id = std::move(source_id);
    return p;
}

// Even-odd area: exterior minus holes for simple polygons, union area for
// disjoint clipped fragments.
inline double polygon_area(const LabeledPolygon& poly) {
    validate_rings(poly.rings);
    double sum = 0;
    for (const Ring& r : poly.rings) sum += signed_ring_area(r);
    return sum;
}

// Even-odd ray cast over every ring. Half-open convention: a point exactly
// on a lower or left edge is inside, on an upper or right edge outside, so
// adjacent polygons sharing an edge never both claim a pixel center.
inline bool point_in_polygon(const LabeledPolygon& poly, double px, double py) {
    bool inside = false;
    for (const Ring& ring : poly.rings) {
        std::size_t n = ring.size() - 1; // last point repeats the first
        for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
            const Point& a = ring[i];
            const Point& b = ring[j];
            if ((a.y > py) != (b.y > py)) {
                double xint = (b.x - a.x) * (py - a.y) / (b.y - a.y) + a.x;
                if (px < xint) inside = !inside;
            }
        }
    }
    return inside;
}

struct Extent {
    double x_min = 0, y_min = 0, x_max = 0, y_max = 0;
    bool valid() const { return x_max > x_min && y_max > y_min; }
    bool overlaps(const Extent& o) const {
        return x_min < o.x_max && o.x_min < x_max && y_min < o.y_max && o.y_min < y_max;
    }
};

inline Extent polygon_bbox(const LabeledPolygon& poly) {
    Extent e{poly.rings[0][0].x, poly.rings[0][0].y, poly.rings[0][0].x, poly.rings[0][0].y};
    for (const Ring& r : poly.rings)
        for (const Point& p : r) {
            e.x_min = std::min(e.x_min, p.x);
            e.y_min = std::min(e.y_min, p.y);
            e.x_max = std::max(e.x_max, p.x);
            e.y_max = std::max(e.y_max, p.y);
        }
    return e;
}

inline Extent polygons_extent(const std::vector<LabeledPolygon>& polys) {
    if (polys.empty()) throw GeometryError("cannot take extent of zero polygons");
    Extent e = polygon_bbox(polys[0]);
    for (const LabeledPolygon& p : polys) {
        Extent b = polygon_bbox(p);
        e.x_min = std::min(e.x_min, b.x_min);
        e.y_min = std::min(e.y_min, b.y_min);
        e.x_max = std::max(e.x_max, b.x_max);
        e.y_max = std::max(e.y_max, b.y_max);
    }
    return e;
}

inline Extent raster_extent(const RasterGrid& g) {
    return {g.x_min(), g.y_min(), g.x_max(), g.y_max()};
}

struct PixelRC {
    std::size_t row = 0;
    std::size_t col = 0;
};

inline bool operator==(const PixelRC& a, const PixelRC& b) {
    return a.row == b.row && a.col == b.col;
}
inline bool operator<(const PixelRC& a, const PixelRC& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
}

// A polygon bound to the raster pixels whose centers it contains. Pixels
// are sorted by (row, col).
struct RegionOfInterest {
    LabeledPolygon polygon;
    std::vector<PixelRC> pixels;
    double area_m2 = 0;
};

inline RegionOfInterest rasterize(const LabeledPolygon& poly, const RasterGrid& raster) {
    double area = polygon_area(poly);
    Extent bbox = polygon_bbox(poly);

    // Candidate pixel block: every pixel whose center could fall in the
    // bounding box, padded one pixel to stay safe at exact boundaries.
    double cell = raster.cell_size();
    auto col_of = [&](double x) { return (x - raster.origin_x()) / cell - 0.5; };
    auto row_of = [&](double y) {
        return static_cast<double>(raster.n_rows()) - 0.5 - (y - raster.origin_y()) / cell;
    };
    long long c_lo = static_cast<long long>(std::floor(col_of(bbox.x_min))) - 1;
    long long c_hi = static_cast<long long>(std::ceil(col_of(bbox.x_max))) + 1;
    long long r_lo = static_cast<long long>(std::floor(row_of(bbox.y_max))) - 1;
    long long r_hi = static_cast<long long>(std::ceil(row_of(bbox.y_min))) + 1;
    c_lo = std::max<long long>(c_lo, 0);
    r_lo = std::max<long long>(r_lo, 0);
    c_hi = std::min<long long>(c_hi, static_cast<long long>(raster.n_cols()) - 1);
    r_hi = std::min<long long>(r_hi, static_cast<long long>(raster.n_rows()) - 1);

    RegionOfInterest roi;
    roi.polygon = poly;
    roi.area_m2 = area;
    bool incomplete = false;
    for (long long r = r_lo; r <= r_hi; ++r) {
        for (long long c = c_lo; c <= c_hi; ++c) {
            auto [px, py] = raster.pixel_center(static_cast<std::size_t>(r),
                                                static_cast<std::size_t>(c));
            if (!point_in_polygon(poly, px, py)) continue;
            if (raster.at_unsafe(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) ==
                raster.nodata_value())
                incomplete = true;
            roi.pixels.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c)});
        }
    }
    if (roi.pixels.empty())
        throw RegionRejected(RejectReason::no_pixels,
                             "polygon '" + poly.source_id + "' contains no pixel centers");
    if (incomplete)
        throw RegionRejected(RejectReason::chm_incomplete,
                             "polygon '" + poly.source_id + "' covers nodata pixels");
    return roi;
}

// ---------------------------------------------------------------------------
// Geographic train/validation/test split.

enum class SplitTag : int { train = 0, validation = 1, test = 2 };

inline std::string to_string(SplitTag t) {
    switch (t) {
        case SplitTag::train: return "train";
        case SplitTag::validation: return "validation";
        default: return "test";
    }
}

struct SplitAssignment {
    double cell_size_m = 1280.0;
    std::uint64_t seed = 0;
    double anchor_x = 0, anchor_y = 0;
    std::size_t nx = 0, ny = 0;
    std::map<std::size_t, SplitTag> mapping; // cell index iy * nx + ix

    Extent cell_rect(std::size_t ix, std::size_t iy) const {
        return {anchor_x + static_cast<double>(ix) * cell_size_m,
                anchor_y + static_cast<double>(iy) * cell_size_m,
                anchor_x + static_cast<double>(ix + 1) * cell_size_m,
                anchor_y + static_cast<double>(iy + 1) * cell_size_m};
    }

    std::optional<SplitTag> tag_at(double x, double y) const {
        double fx = std::floor((x - anchor_x) / cell_size_m);
        double fy = std::floor((y - anchor_y) / cell_size_m);
        if (fx < 0 || fy < 0 || fx >= static_cast<double>(nx) || fy >= static_cast<double>(ny))
            return std::nullopt;
        auto it = mapping.find(static_cast<std::size_t>(fy) * nx + static_cast<std::size_t>(fx));
        if (it == mapping.end()) return std::nullopt;
        return it->second;
    }
};

namespace detail {

// One Sutherland-Hodgman pass against an axis-aligned half plane.
// axis 0 keeps x>=bound (side +1) or x<=bound (side -1); axis 1 the same
// for y. Boundary points count as inside, so fragments in adjacent cells
// reproduce the shared edge exactly.
inline std::vector<Point> clip_half_plane(const std::vector<Point>& in, int axis, double bound,
                                          int side) {
    std::vector<Point> out;
    out.reserve(in.size() + 4);
    auto coord = [&](const Point& p) { return axis == 0 ? p.x : p.y; };
    auto inside = [&](const Point& p) {
        return side > 0 ? coord(p) >= bound : coord(p) <= bound;
    };
    auto intersect = [&](const Point& a, const Point& b) {
        double t = (bound - coord(a)) / (coord(b) - coord(a));
        Point r;
        if (axis == 0) {
            r.x = bound;
            r.y = a.y + t * (b.y - a.y);
        } else {
            r.x = a.x + t * (b.x - a.x);
            r.y = bound;
        }
        return r;
    };
    std::size_t n = in.size();
    for (std::size_t i = 0; i < n; ++i) {
        const Point& cur = in[i];
        const Point& prev = in[(i + n - 1) % n];
        bool cur_in = inside(cur);
        bool prev_in = inside(prev);
        if (cur_in) {
            if (!prev_in) out.push_back(intersect(prev, cur));
            out.push_back(cur);
        } else if (prev_in) {
            out.push_back(intersect(prev, cur));
        }
    }
    return out;
}

} // namespace detail

// Clips one closed ring to an axis-aligned rectangle. Returns a closed ring
// (orientation preserved), or an empty ring when nothing remains.
inline Ring clip_ring_rect(const Ring& ring, const Extent& rect) {
    std::vector<Point> open(ring.begin(), ring.end() - 1);
    open = detail::clip_half_plane(open, 0, rect.x_min, +1);
    if (!open.empty()) open = detail::clip_half_plane(open, 0, rect.x_max, -1);
    if (!open.empty()) open = detail::clip_half_plane(open, 1, rect.y_min, +1);
    if (!open.empty()) open = detail::clip_half_plane(open, 1, rect.y_max, -1);
    if (open.size() < 3) return {};
    open.push_back(open.front());
    return open;
}

inline SplitAssignment build_split(const std::vector<LabeledPolygon>& polygons,
                                   const Extent& extent, double cell_size_m, std::uint64_t seed,
                                   std::array<double, 3> fractions) {
    if (!extent.valid()) throw ConfigError("split: extent is empty");
    if (!(cell_size_m > 0)) throw ConfigError("split: cell size must be positive");
    double frac_sum = fractions[0] + fractions[1] + fractions[2];
    for (double f : fractions)
        if (f < 0) throw ConfigError("split: fractions must be non-negative");
    if (std::abs(frac_sum - 1.0) > 1e-9)
        throw ConfigError("split: fractions must sum to 1");

    SplitAssignment split;
    split.cell_size_m = cell_size_m;
    split.seed = seed;
    split.anchor_x = std::floor(extent.x_min / cell_size_m) * cell_size_m;
    split.anchor_y = std::floor(extent.y_min / cell_size_m) * cell_size_m;
    split.nx = static_cast<std::size_t>(
        std::max(1.0, std::ceil((extent.x_max - split.anchor_x) / cell_size_m)));
    split.ny = static_cast<std::size_t>(
        std::max(1.0, std::ceil((extent.y_max - split.anchor_y) / cell_size_m)));

    // A cell is occupied when some polygon overlaps it with positive area.
    std::vector<std::size_t> occupied;
    std::vector<char> seen(split.nx * split.ny, 0);
    for (const LabeledPolygon& poly : polygons) {
        validate_rings(poly.rings);
        Extent bbox = polygon_bbox(poly);
        auto ix0 = static_cast<long long>(std::floor((bbox.x_min - split.anchor_x) / cell_size_m));
        auto ix1 = static_cast<long long>(std::floor((bbox.x_max - split.anchor_x) / cell_size_m));
        auto iy0 = static_cast<long long>(std::floor((bbox.y_min - split.anchor_y) / cell_size_m));
        auto iy1 = static_cast<long long>(std::floor((bbox.y_max - split.anchor_y) / cell_size_m));
        ix0 = std::max<long long>(ix0, 0);
        iy0 = std::max<long long>(iy0, 0);
        ix1 = std::min<long long>(ix1, static_cast<long long>(split.nx) - 1);
        iy1 = std::min<long long>(iy1, static_cast<long long>(split.ny) - 1);
        for (long long iy = iy0; iy <= iy1; ++iy) {
            for (long long ix = ix0; ix <= ix1; ++ix) {
                std::size_t idx = static_cast<std::size_t>(iy) * split.nx +
                                  static_cast<std::size_t>(ix);
                if (seen[idx]) continue;
                Extent rect = split.cell_rect(static_cast<std::size_t>(ix),
                                              static_cast<std::size_t>(iy));
                double a = 0;
                for (const Ring& ring : poly.rings) {
                    Ring piece = clip_ring_rect(ring, rect);
                    if (!piece.empty()) a += signed_ring_area(piece);
                }
                if (a > 1e-9) {
                    seen[idx] = 1;
                    occupied.push_back(idx);
                }
            }
        }
    }
    if (occupied.empty()) throw Error("split: no grid cells intersect any polygon");
    std::sort(occupied.begin(), occupied.end());

    Rng rng(seed);
    rng.shuffle(occupied);

    auto n = static_cast<double>(occupied.size());
    std::size_t b1 = static_cast<std::size_t>(std::llround(fractions[0] * n));
    std::size_t b2 = static_cast<std::size_t>(std::llround((fractions[0] + fractions[1]) * n));
    b1 = std::min(b1, occupied.size());
    b2 = std::max(b1, std::min(b2, occupied.size()));
    for (std::size_t i = 0; i < occupied.size(); ++i) {
        SplitTag tag = i < b1 ? SplitTag::train : (i < b2 ? SplitTag::validation : SplitTag::test);
        split.mapping[occupied[i]] = tag;
    }
    return split;
}

// Intersects a polygon with each split region. Fragments that land in the
// same tag merge into one piece (their rings concatenated; even-odd
// semantics keep area and containment exact because shared cell borders
// cancel). Pieces under 10,000 square meters are dropped.
inline std::vector<std::pair<LabeledPolygon, SplitTag>> clip_to_split(
    const LabeledPolygon& poly, const SplitAssignment& split,
    double min_piece_area = 10000.0) {
    validate_rings(poly.rings);

    Extent bbox = polygon_bbox(poly);
    auto ix0 = static_cast<long long>(std::floor((bbox.x_min - split.anchor_x) / split.cell_size_m));
    auto ix1 = static_cast<long long>(std::floor((bbox.x_max - split.anchor_x) / split.cell_size_m));
    auto iy0 = static_cast<long long>(std::floor((bbox.y_min - split.anchor_y) / split.cell_size_m));
    auto iy1 = static_cast<long long>(std::floor((bbox.y_max - split.anchor_y) / split.cell_size_m));
    ix0 = std::max<long long>(ix0, 0);
    iy0 = std::max<long long>(iy0, 0);
    ix1 = std::min<long long>(ix1, static_cast<long long>(split.nx) - 1);
    iy1 = std::min<long long>(iy1, static_cast<long long>(split.ny) - 1);

    std::array<std::vector<Ring>, 3> rings_by_tag;
    for (long long iy = iy0; iy <= iy1; ++iy) {
        for (long long ix = ix0; ix <= ix1; ++ix) {
            auto it = split.mapping.find(static_cast<std::size_t>(iy) * split.nx +
                                         static_cast<std::size_t>(ix));
            if (it == split.mapping.end()) continue;
            Extent rect = split.cell_rect(static_cast<std::size_t>(ix),
                                          static_cast<std::size_t>(iy));
            for (const Ring& ring : poly.rings) {
                Ring piece = clip_ring_rect(ring, rect);
                if (piece.empty()) continue;
                if (std::abs(signed_ring_area(piece)) <= 1e-9) continue;
                rings_by_tag[static_cast<std::size_t>(it->second)].push_back(std::move(piece));
            }
        }
    }

    std::vector<std::pair<LabeledPolygon, SplitTag>> out;
    for (int t = 0; t < 3; ++t) {
        if (rings_by_tag[t].empty()) continue;
        LabeledPolygon piece;
        piece.rings = std::move(rings_by_tag[t]);
        piece.label = poly.label;
        piece.source_id = poly.source_id;
        double area = polygon_area(piece);
        if (area < min_piece_area) continue;
        out.emplace_back(std::move(piece), static_cast<SplitTag>(t));
    }
    return out;
}

} // namespace chmnat
