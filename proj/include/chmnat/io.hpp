#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "chmnat/common.hpp"
#include "chmnat/geometry.hpp"
#include "chmnat/models.hpp"

namespace chmnat {

// ---------------------------------------------------------------------------
// Polygon files: GeoJSON-style FeatureCollection. Coordinates are raster CRS
// meters. Each feature carries `source_id` and, unless it exists purely for
// prediction, `label` in {"high", "low"}. MultiPolygon features are
// decomposed into one LabeledPolygon per part, suffixing "#k" to the id, so
// downstream code only ever sees single polygons (possibly with holes).

namespace detail {

inline Ring ring_from_json(const nlohmann::json& jr) {
    if (!jr.is_array() || jr.size() < 3)
        throw ParseError("polygon ring must be an array of at least 3 positions");
    Ring ring;
    for (const nlohmann::json& pos : jr) {
        if (!pos.is_array() || pos.size() < 2 || !pos[0].is_number() || !pos[1].is_number())
            throw ParseError("polygon position must be [x, y]");
        ring.push_back({pos[0].get<double>(), pos[1].get<double>()});
    }
    if (!(ring.front() == ring.back())) ring.push_back(ring.front()); // tolerate open rings
    return ring;
}

inline std::vector<Ring> rings_from_json(const nlohmann::json& jp) {
    if (!jp.is_array() || jp.empty()) throw ParseError("polygon needs at least one ring");
    std::vector<Ring> rings;
    for (const nlohmann::json& jr : jp) rings.push_back(ring_from_json(jr));
    return rings;
}

inline nlohmann::json ring_to_json(const Ring& ring) {
    nlohmann::json jr = nlohmann::json::array();
    for (const Point& p : ring) jr.push_back({p.x, p.y});
    return jr;
}

} // namespace detail

inline std::vector<LabeledPolygon> polygons_from_geojson(const nlohmann::json& j) {
    if (!j.is_object() || j.value("type", "") != "FeatureCollection" || !j.contains("features"))
        throw ParseError("expected a FeatureCollection");
    std::vector<LabeledPolygon> out;
    for (const nlohmann::json& f : j.at("features")) {
        if (f.value("type", "") != "Feature" || !f.contains("geometry"))
            throw ParseError("expected Feature objects with geometry");
        if (!f.contains("properties") || !f.at("properties").is_object())
            throw ParseError("feature without properties");
        const nlohmann::json& props = f.at("properties");
        if (!props.contains("source_id"))
            throw ParseError("feature without source_id property");
        std::string source_id = props.at("source_id").is_string()
                                    ? props.at("source_id").get<std::string>()
                                    : props.at("source_id").dump();
        Label label = Label::unlabeled;
        if (props.contains("label") && !props.at("label").is_null()) {
            std::string s = props.at("label").get<std::string>();
            if (s == "high")
                label = Label::high;
            else if (s == "low")
                label = Label::low;
            else
                throw ParseError("unknown label '" + s + "' for '" + source_id +
                                 "' (expected high or low)");
        }
        const nlohmann::json& g = f.at("geometry");
        std::string gtype = g.value("type", "");
        std::vector<std::vector<Ring>> parts;
        if (gtype == "Polygon") {
            parts.push_back(detail::rings_from_json(g.at("coordinates")));
        } else if (gtype == "MultiPolygon") {
            for (const nlohmann::json& jp : g.at("coordinates"))
                parts.push_back(detail::rings_from_json(jp));
            if (parts.empty()) throw ParseError("empty MultiPolygon for '" + source_id + "'");
        } else {
            throw ParseError("unsupported geometry type '" + gtype + "' for '" + source_id + "'");
        }
        for (std::size_t k = 0; k < parts.size(); ++k) {
            LabeledPolygon poly = make_polygon(parts[k]);
            poly.label = label;
            poly.source_id = parts.size() == 1 ? source_id
                                               : source_id + "#" + std::to_string(k + 1);
            out.push_back(std::move(poly));
        }
    }
    return out;
}

inline nlohmann::json polygons_to_geojson(const std::vector<LabeledPolygon>& polys) {
    nlohmann::json features = nlohmann::json::array();
    for (const LabeledPolygon& poly : polys) {
        // Group rings into parts: each counter-clockwise ring starts a new
        // exterior, clockwise rings are holes of the preceding exterior.
        std::vector<std::vector<const Ring*>> parts;
        for (const Ring& r : poly.rings) {
            if (signed_ring_area(r) > 0 || parts.empty()) parts.push_back({});
            parts.back().push_back(&r);
        }
        nlohmann::json geometry;
        if (parts.size() == 1) {
            nlohmann::json rings = nlohmann::json::array();
            for (const Ring* r : parts[0]) rings.push_back(detail::ring_to_json(*r));
            geometry = {{"type", "Polygon"}, {"coordinates", std::move(rings)}};
        } else {
            nlohmann::json coords = nlohmann::json::array();
            for (const std::vector<const Ring*>& part : parts) {
                nlohmann::json rings = nlohmann::json::array();
                for (const Ring* r : part) rings.push_back(detail::ring_to_json(*r));
                coords.push_back(std::move(rings));
            }
            geometry = {{"type", "MultiPolygon"}, {"coordinates", std::move(coords)}};
        }
        nlohmann::json props;
        props["source_id"] = poly.source_id;
        if (poly.label != Label::unlabeled)
            props["label"] = poly.label == Label::high ? "high" : "low";
        features.push_back({{"type", "Feature"},
                            {"properties", std::move(props)},
                            {"geometry", std::move(geometry)}});
    }
    return {{"type", "FeatureCollection"}, {"features", std::move(features)}};
}

inline std::vector<LabeledPolygon> load_polygons(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open polygon file: " + path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("polygon file '" + path + "': " + e.what());
    }
    try {
        return polygons_from_geojson(j);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError("polygon file '" + path + "': " + e.what());
    }
}

inline void save_polygons(const std::vector<LabeledPolygon>& polys, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write polygon file: " + path);
    out << polygons_to_geojson(polys).dump(2) << "\n";
    if (!out) throw Error("write failed: " + path);
}

// ---------------------------------------------------------------------------
// Feature table: CSV with a fixed prefix `source_id,label,area_m2` followed
// by one column per feature. Doubles are written in shortest round-trip
// form, so read(write(d)) reproduces the dataset bit for bit. Identifiers
// must stay free of commas, quotes, and newlines; there is no quoting.

namespace detail {

inline double parse_csv_double(const std::string& tok, std::size_t line_no) {
    double v = 0;
    const char* b = tok.data();
    const char* e = b + tok.size();
    auto res = std::from_chars(b, e, v);
    if (res.ec != std::errc() || res.ptr != e)
        throw ParseError("bad numeric value '" + tok + "'", line_no);
    return v;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, comma - start));
        start = comma + 1;
    }
}

inline void check_csv_identifier(const std::string& id) {
    if (id.find_first_of(",\"\n\r") != std::string::npos)
        throw Error("identifier not representable in CSV: '" + id + "'");
}

} // namespace detail

inline std::string feature_csv_header(const std::vector<std::string>& feature_names) {
    std::string h = "source_id,label,area_m2";
    for (const std::string& f : feature_names) {
        detail::check_csv_identifier(f);
        h += "," + f;
    }
    return h;
}

inline std::string dataset_to_csv(const Dataset& d) {
    d.check(false);
    std::string out = feature_csv_header(d.feature_names) + "\n";
    for (const DataRow& r : d.rows) {
        detail::check_csv_identifier(r.source_id);
        out += r.source_id;
        out += ',';
        if (r.label == 1)
            out += "high";
        else if (r.label == 0)
            out += "low";
        out += ',';
        out += format_double(r.area_m2);
        for (double v : r.features) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

inline Dataset dataset_from_csv_text(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::size_t line_no = 0;
    Dataset d;
    bool saw_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> tok = detail::split_csv_line(line);
        if (!saw_header) {
            if (tok.size() < 3 || tok[0] != "source_id" || tok[1] != "label" ||
                tok[2] != "area_m2")
                throw ParseError("feature CSV must start with source_id,label,area_m2", line_no);
            d.feature_names.assign(tok.begin() + 3, tok.end());
            saw_header = true;
            continue;
        }
        if (tok.size() != d.feature_names.size() + 3)
            throw ParseError("expected " + std::to_string(d.feature_names.size() + 3) +
                                 " columns, got " + std::to_string(tok.size()),
                             line_no);
        DataRow r;
        r.source_id = tok[0];
        if (tok[1] == "high")
            r.label = 1;
        else if (tok[1] == "low")
            r.label = 0;
        else if (tok[1].empty())
            r.label = -1;
        else
            throw ParseError("unknown label '" + tok[1] + "'", line_no);
        r.area_m2 = detail::parse_csv_double(tok[2], line_no);
        for (std::size_t i = 3; i < tok.size(); ++i)
            r.features.push_back(detail::parse_csv_double(tok[i], line_no));
        d.rows.push_back(std::move(r));
    }
    if (!saw_header) throw ParseError("feature CSV is empty");
    return d;
}

inline Dataset load_dataset(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open feature CSV: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return dataset_from_csv_text(buf.str());
    } catch (ParseError& e) {
        throw ParseError("feature CSV '" + path + "': " + e.what());
    }
}

inline void save_dataset(const Dataset& d, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write feature CSV: " + path);
    out << dataset_to_csv(d);
    if (!out) throw Error("write failed: " + path);
}

} // namespace chmnat
