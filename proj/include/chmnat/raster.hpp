#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "chmnat/common.hpp"

namespace chmnat {

constexpr std::int32_t kDefaultNodata = -9999;

// Georeferenced single-band integer raster. Heights are canopy heights in
// decimeters; a sentinel value marks missing data. Row 0 is the top row;
// (origin_x, origin_y) is the lower-left corner of the covered ground area.
//
// Grids are immutable after construction. window() returns a view that
// shares the underlying value buffer, so views are cheap and can be handed
// to parallel workers without copies or locks.
class RasterGrid {
public:
    RasterGrid() = default;

    static RasterGrid from_values(std::size_t n_rows, std::size_t n_cols,
                                  double origin_x, double origin_y, double cell_size,
                                  std::vector<std::int32_t> values,
                                  std::int32_t nodata_value = kDefaultNodata,
                                  std::string crs_tag = "") {
        if (n_rows < 1 || n_cols < 1) throw Error("raster: dimensions must be at least 1x1");
        if (!(cell_size > 0)) throw Error("raster: cell size must be positive");
        if (values.size() != n_rows * n_cols)
            throw Error("raster: value count " + std::to_string(values.size()) +
                        " does not match " + std::to_string(n_rows) + "x" + std::to_string(n_cols));
        for (std::int32_t v : values)
            if (v != nodata_value && v < 0)
                throw Error("raster: negative height " + std::to_string(v));
        RasterGrid g;
        g.data_ = std::make_shared<const std::vector<std::int32_t>>(std::move(values));
        g.n_rows_ = n_rows;
        g.n_cols_ = n_cols;
        g.stride_ = n_cols;
        g.origin_x_ = origin_x;
        g.origin_y_ = origin_y;
        g.cell_size_ = cell_size;
        g.nodata_ = nodata_value;
        g.crs_tag_ = std::move(crs_tag);
        return g;
    }

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return n_cols_; }
    double origin_x() const { return origin_x_; }
    double origin_y() const { return origin_y_; }
    double cell_size() const { return cell_size_; }
    std::int32_t nodata_value() const { return nodata_; }
    const std::string& crs_tag() const { return crs_tag_; }

    std::int32_t at(std::size_t row, std::size_t col) const {
        if (row >= n_rows_ || col >= n_cols_)
            throw BoundsError("raster: pixel (" + std::to_string(row) + "," +
                              std::to_string(col) + ") outside " + std::to_string(n_rows_) +
                              "x" + std::to_string(n_cols_));
        return at_unsafe(row, col);
    }

    std::int32_t at_unsafe(std::size_t row, std::size_t col) const {
        return (*data_)[(row0_ + row) * stride_ + (col0_ + col)];
    }

    bool is_nodata(std::size_t row, std::size_t col) const { return at(row, col) == nodata_; }

    // Ground coordinates of a pixel center.
    std::pair<double, double> pixel_center(std::size_t row, std::size_t col) const {
        return {origin_x_ + (static_cast<double>(col) + 0.5) * cell_size_,
                origin_y_ + (static_cast<double>(n_rows_ - row) - 0.5) * cell_size_};
    }

    double x_min() const { return origin_x_; }
    double y_min() const { return origin_y_; }
    double x_max() const { return origin_x_ + static_cast<double>(n_cols_) * cell_size_; }
    double y_max() const { return origin_y_ + static_cast<double>(n_rows_) * cell_size_; }

    // Read-only view over rows [row_begin, row_end) and cols [col_begin,
    // col_end). Shares the value buffer; the georeference is recomputed for
    // the window origin.
    RasterGrid window(std::size_t row_begin, std::size_t row_end,
                      std::size_t col_begin, std::size_t col_end) const {
        if (row_end > n_rows_ || col_end > n_cols_ || row_begin >= row_end || col_begin >= col_end)
            throw BoundsError("raster: window [" + std::to_string(row_begin) + "," +
                              std::to_string(row_end) + ")x[" + std::to_string(col_begin) + "," +
                              std::to_string(col_end) + ") outside " + std::to_string(n_rows_) +
                              "x" + std::to_string(n_cols_));
        RasterGrid w = *this;
        w.row0_ = row0_ + row_begin;
        w.col0_ = col0_ + col_begin;
        w.n_rows_ = row_end - row_begin;
        w.n_cols_ = col_end - col_begin;
        w.origin_x_ = origin_x_ + static_cast<double>(col_begin) * cell_size_;
        w.origin_y_ = origin_y_ + static_cast<double>(n_rows_ - row_end) * cell_size_;
        return w;
    }

    // True when two grids/views resolve to the same buffer region.
    bool shares_data_with(const RasterGrid& other) const { return data_ == other.data_; }

private:
    std::shared_ptr<const std::vector<std::int32_t>> data_;
    std::size_t row0_ = 0, col0_ = 0, stride_ = 0;
    std::size_t n_rows_ = 0, n_cols_ = 0;
    double origin_x_ = 0, origin_y_ = 0, cell_size_ = 1;
    std::int32_t nodata_ = kDefaultNodata;
    std::string crs_tag_;
};

namespace detail {

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

} // namespace detail

// Canonical text form: the six header lines in fixed order and case, then
// one line per raster row, values space-separated.
inline std::string grid_to_ascii(const RasterGrid& g) {
    std::string out;
    out.reserve(g.n_rows() * g.n_cols() * 4 + 128);
    out += "ncols " + std::to_string(g.n_cols()) + "\n";
    out += "nrows " + std::to_string(g.n_rows()) + "\n";
    out += "xllcorner " + format_double(g.origin_x()) + "\n";
    out += "yllcorner " + format_double(g.origin_y()) + "\n";
    out += "cellsize " + format_double(g.cell_size()) + "\n";
    out += "NODATA_value " + std::to_string(g.nodata_value()) + "\n";
    for (std::size_t r = 0; r < g.n_rows(); ++r) {
        for (std::size_t c = 0; c < g.n_cols(); ++c) {
            if (c) out += ' ';
            out += std::to_string(g.at_unsafe(r, c));
        }
        out += '\n';
    }
    return out;
}

inline RasterGrid parse_ascii_grid(const std::string& text) {
    std::size_t line_no = 0;
    std::size_t pos = 0;

    long long ncols = -1, nrows = -1, nodata = kDefaultNodata;
    double xll = 0, yll = 0, cell = -1;
    bool have[5] = {false, false, false, false, false}; // ncols nrows xll yll cellsize

    auto next_line = [&](std::string& line) {
        if (pos >= text.size()) return false;
        std::size_t end = text.find('\n', pos);
        if (end == std::string::npos) end = text.size();
        line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        return true;
    };

    // Header: key/value lines until the first line starting with a numeric
    // token. Keys are case-insensitive.
    std::vector<std::int32_t> values;
    std::string line;
    bool in_values = false;
    while (next_line(line)) {
        std::istringstream ls(line);
        std::string tok;
        if (!(ls >> tok)) continue; // blank line
        bool numeric = tok.find_first_not_of("+-.0123456789eE") == std::string::npos;
        if (!in_values && !numeric) {
            std::string key = detail::lower(tok);
            std::string val;
            if (!(ls >> val)) throw ParseError("ascii grid: missing value for header key '" + tok + "'", line_no);
            std::string extra;
            if (ls >> extra) throw ParseError("ascii grid: trailing content after header value", line_no);
            auto parse_ll = [&](long long& out) {
                auto res = std::from_chars(val.data(), val.data() + val.size(), out);
                if (res.ec != std::errc() || res.ptr != val.data() + val.size())
                    throw ParseError("ascii grid: '" + val + "' is not an integer", line_no);
            };
            auto parse_d = [&](double& out) {
                auto res = std::from_chars(val.data(), val.data() + val.size(), out);
                if (res.ec != std::errc() || res.ptr != val.data() + val.size())
                    throw ParseError("ascii grid: '" + val + "' is not a number", line_no);
            };
            if (key == "ncols") { parse_ll(ncols); have[0] = true; }
            else if (key == "nrows") { parse_ll(nrows); have[1] = true; }
            else if (key == "xllcorner") { parse_d(xll); have[2] = true; }
            else if (key == "yllcorner") { parse_d(yll); have[3] = true; }
            else if (key == "cellsize") { parse_d(cell); have[4] = true; }
            else if (key == "nodata_value") { parse_ll(nodata); }
            else throw ParseError("ascii grid: unknown header key '" + tok + "'", line_no);
            continue;
        }
        // Value rows.
        if (!in_values) {
            static const char* names[5] = {"ncols", "nrows", "xllcorner", "yllcorner", "cellsize"};
            for (int i = 0; i < 5; ++i)
                if (!have[i]) throw ParseError(std::string("ascii grid: missing header key '") + names[i] + "'", line_no);
            if (ncols < 1 || nrows < 1) throw ParseError("ascii grid: ncols/nrows must be at least 1", line_no);
            if (!(cell > 0)) throw ParseError("ascii grid: cellsize must be positive", line_no);
            in_values = true;
            values.reserve(static_cast<std::size_t>(ncols) * static_cast<std::size_t>(nrows));
        }
        std::string vtok = tok;
        do {
            if (values.size() == static_cast<std::size_t>(ncols * nrows))
                throw ParseError("ascii grid: more values than ncols*nrows", line_no);
            long long v;
            auto res = std::from_chars(vtok.data(), vtok.data() + vtok.size(), v);
            if (res.ec != std::errc() || res.ptr != vtok.data() + vtok.size())
                throw ParseError("ascii grid: '" + vtok + "' is not an integer height", line_no);
            if (v != nodata && v < 0)
                throw ParseError("ascii grid: negative height " + std::to_string(v), line_no);
            values.push_back(static_cast<std::int32_t>(v));
        } while (ls >> vtok);
    }
    if (!in_values)
        throw ParseError("ascii grid: no value rows found", line_no);
    if (values.size() != static_cast<std::size_t>(ncols * nrows))
        throw ParseError("ascii grid: expected " + std::to_string(ncols * nrows) + " values, got " +
                         std::to_string(values.size()), line_no);
    return RasterGrid::from_values(static_cast<std::size_t>(nrows), static_cast<std::size_t>(ncols),
                                   xll, yll, cell, std::move(values),
                                   static_cast<std::int32_t>(nodata));
}

inline RasterGrid load_raster(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open raster file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return parse_ascii_grid(ss.str());
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what(), 0);
    }
}

inline void save_raster(const RasterGrid& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write raster file: " + path);
    out << grid_to_ascii(g);
    if (!out) throw Error("write failed: " + path);
}

} // namespace chmnat
