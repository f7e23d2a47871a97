#include "towerforge/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "towerforge/errors.hpp"

namespace towerforge::ingest {

using nlohmann::json;

namespace {

std::string value_to_string(const json& v) {
    if (v.is_string()) return v.get<std::string>();
    return v.dump();
}

std::string feature_id(const json& feature, std::size_t index) {
    if (feature.contains("id")) return value_to_string(feature.at("id"));
    const auto props = feature.find("properties");
    if (props != feature.end() && props->is_object() && props->contains("id")) {
        return value_to_string(props->at("id"));
    }
    return fmt::format("f{}", index);
}

bool tags_match(const std::vector<std::pair<std::string, std::string>>& tags,
                const TagPredicate& extra) {
    auto value_of = [&](const std::string& key) -> const std::string* {
        for (const auto& [k, v] : tags) {
            if (k == key) return &v;
        }
        return nullptr;
    };
    const std::string* man_made = value_of("man_made");
    if (!man_made || (*man_made != "tower" && *man_made != "communications_tower")) {
        return false;
    }
    for (const auto& [k, v] : extra) {
        const std::string* got = value_of(k);
        if (!got || *got != v) return false;
    }
    return true;
}

double round7(double v) { return std::round(v * 1e7) / 1e7; }

geo::GeoPoint parse_position(const json& coords) {
    if (!coords.is_array() || coords.size() < 2 ||
        !coords[0].is_number() || !coords[1].is_number()) {
        throw MalformedDocument("position must be a [lon, lat] number array");
    }
    return geo::GeoPoint{coords[0].get<double>(), coords[1].get<double>()};
}

Ring parse_ring(const json& arr) {
    if (!arr.is_array()) throw InvalidPolygon("ring must be an array of positions");
    Ring ring;
    ring.reserve(arr.size());
    for (const auto& pos : arr) ring.push_back(parse_position(pos));
    return ring;
}

int orientation(const geo::GeoPoint& a, const geo::GeoPoint& b,
                const geo::GeoPoint& c) {
    const double v = (b.lon - a.lon) * (c.lat - a.lat) -
                     (b.lat - a.lat) * (c.lon - a.lon);
    if (v > 0) return 1;
    if (v < 0) return -1;
    return 0;
}

bool on_segment_collinear(const geo::GeoPoint& a, const geo::GeoPoint& b,
                          const geo::GeoPoint& p) {
    return p.lon >= std::min(a.lon, b.lon) && p.lon <= std::max(a.lon, b.lon) &&
           p.lat >= std::min(a.lat, b.lat) && p.lat <= std::max(a.lat, b.lat);
}

bool segments_intersect(const geo::GeoPoint& p1, const geo::GeoPoint& p2,
                        const geo::GeoPoint& q1, const geo::GeoPoint& q2) {
    const int o1 = orientation(p1, p2, q1);
    const int o2 = orientation(p1, p2, q2);
    const int o3 = orientation(q1, q2, p1);
    const int o4 = orientation(q1, q2, p2);
    if (o1 != o2 && o3 != o4) return true;
    if (o1 == 0 && on_segment_collinear(p1, p2, q1)) return true;
    if (o2 == 0 && on_segment_collinear(p1, p2, q2)) return true;
    if (o3 == 0 && on_segment_collinear(q1, q2, p1)) return true;
    if (o4 == 0 && on_segment_collinear(q1, q2, p2)) return true;
    return false;
}

// O(n^2) over segment pairs; urban masks are desk-scale.
void validate_ring(const Ring& ring) {
    if (ring.size() < 4) {
        throw InvalidPolygon(
            fmt::format("ring has {} points, need at least 4", ring.size()));
    }
    const auto& first = ring.front();
    const auto& last = ring.back();
    if (first.lon != last.lon || first.lat != last.lat) {
        throw InvalidPolygon("ring is not closed (first point != last point)");
    }
    const std::size_t n = ring.size() - 1;  // segment count
    for (std::size_t i = 0; i < n; ++i) {
        const auto& a1 = ring[i];
        const auto& a2 = ring[i + 1];
        if (a1.lon == a2.lon && a1.lat == a2.lat) {
            throw InvalidPolygon("ring contains a zero-length segment");
        }
        for (std::size_t j = i + 2; j < n; ++j) {
            if (i == 0 && j == n - 1) continue;  // closing segment is adjacent
            if (segments_intersect(a1, a2, ring[j], ring[j + 1])) {
                throw InvalidPolygon(
                    fmt::format("ring self-intersects (segments {} and {})", i, j));
            }
        }
    }
}

bool point_on_ring_edge(const geo::GeoPoint& p, const Ring& ring) {
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const auto& a = ring[i];
        const auto& b = ring[i + 1];
        if (orientation(a, b, p) == 0 && on_segment_collinear(a, b, p)) return true;
    }
    return false;
}

bool even_odd_inside(const geo::GeoPoint& p, const Ring& ring) {
    bool inside = false;
    const std::size_t n = ring.size() - 1;
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const auto& a = ring[i];
        const auto& b = ring[j];
        if ((a.lat > p.lat) != (b.lat > p.lat)) {
            const double x_cross =
                (b.lon - a.lon) * (p.lat - a.lat) / (b.lat - a.lat) + a.lon;
            if (p.lon < x_cross) inside = !inside;
        }
    }
    return inside;
}

json point_feature_json(const TowerFeature& f) {
    json props = json::object();
    for (const auto& [k, v] : f.tags) props[k] = v;
    return json{{"type", "Feature"},
                {"id", f.id},
                {"geometry",
                 {{"type", "Point"},
                  {"coordinates", {round7(f.point.lon), round7(f.point.lat)}}}},
                {"properties", props}};
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure(fmt::format("cannot open {} for reading", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

ParseResult parse_features(const std::string& geojson_bytes,
                           const TagPredicate& extra) {
    json doc;
    try {
        doc = json::parse(geojson_bytes);
    } catch (const json::parse_error& e) {
        throw MalformedDocument(fmt::format("not valid JSON: {}", e.what()));
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection") {
        throw NotAFeatureCollection("top-level object is not a FeatureCollection");
    }
    const auto features = doc.find("features");
    if (features == doc.end() || !features->is_array()) {
        throw NotAFeatureCollection("FeatureCollection has no features array");
    }

    ParseResult result;
    std::size_t index = 0;
    for (const auto& feature : *features) {
        const std::size_t idx = index++;
        if (!feature.is_object()) {
            throw MalformedDocument(fmt::format("feature {} is not an object", idx));
        }
        std::vector<std::pair<std::string, std::string>> tags;
        const auto props = feature.find("properties");
        if (props != feature.end() && props->is_object()) {
            for (const auto& [k, v] : props->items()) {
                tags.emplace_back(k, value_to_string(v));
            }
        }
        if (!tags_match(tags, extra)) {
            ++result.dropped_tag;
            continue;
        }
        const auto geom = feature.find("geometry");
        if (geom == feature.end() || !geom->is_object() ||
            geom->value("type", "") != "Point") {
            ++result.dropped_non_point;
            continue;
        }
        const geo::GeoPoint point = parse_position(geom->at("coordinates"));
        if (!point.valid()) {
            ++result.dropped_invalid;
            continue;
        }
        result.features.push_back(
            TowerFeature{feature_id(feature, idx), point, std::move(tags)});
    }
    return result;
}

std::vector<TowerFeature> filter_study_region(const std::vector<TowerFeature>& fs,
                                              const StudyRegion& region) {
    std::vector<TowerFeature> kept;
    kept.reserve(fs.size());
    for (const auto& f : fs) {
        if (region.box.contains(f.point)) kept.push_back(f);
    }
    return kept;
}

bool point_in_polygon(const geo::GeoPoint& p, const PolygonWithHoles& poly) {
    if (point_on_ring_edge(p, poly.outer)) return true;
    for (const auto& hole : poly.holes) {
        if (point_on_ring_edge(p, hole)) return true;
    }
    if (!even_odd_inside(p, poly.outer)) return false;
    for (const auto& hole : poly.holes) {
        if (even_odd_inside(p, hole)) return false;
    }
    return true;
}

ExcludeResult exclude_urban(const std::vector<TowerFeature>& fs,
                            const UrbanMask& mask) {
    ExcludeResult result;
    result.kept.reserve(fs.size());
    for (const auto& f : fs) {
        const bool urban = std::any_of(
            mask.polygons.begin(), mask.polygons.end(),
            [&](const PolygonWithHoles& poly) { return point_in_polygon(f.point, poly); });
        if (urban) {
            ++result.removed;
        } else {
            result.kept.push_back(f);
        }
    }
    return result;
}

std::vector<TowerFeature> dedupe(const std::vector<TowerFeature>& fs,
                                 double min_sep_m) {
    std::vector<TowerFeature> kept;
    kept.reserve(fs.size());
    for (const auto& f : fs) {
        const bool dup = std::any_of(
            kept.begin(), kept.end(), [&](const TowerFeature& k) {
                return geo::distance_m(k.point, f.point) <= min_sep_m;
            });
        if (!dup) kept.push_back(f);
    }
    return kept;
}

UrbanMask parse_urban_mask(const std::string& geojson_bytes) {
    json doc;
    try {
        doc = json::parse(geojson_bytes);
    } catch (const json::parse_error& e) {
        throw MalformedDocument(fmt::format("not valid JSON: {}", e.what()));
    }
    if (!doc.is_object() || doc.value("type", "") != "FeatureCollection") {
        throw NotAFeatureCollection("urban mask is not a FeatureCollection");
    }

    auto parse_polygon = [](const json& rings) {
        if (!rings.is_array() || rings.empty()) {
            throw InvalidPolygon("Polygon has no rings");
        }
        PolygonWithHoles poly;
        poly.outer = parse_ring(rings[0]);
        validate_ring(poly.outer);
        for (std::size_t i = 1; i < rings.size(); ++i) {
            poly.holes.push_back(parse_ring(rings[i]));
            validate_ring(poly.holes.back());
        }
        return poly;
    };

    UrbanMask mask;
    for (const auto& feature : doc.value("features", json::array())) {
        const auto geom = feature.find("geometry");
        if (geom == feature.end() || !geom->is_object()) continue;
        const std::string type = geom->value("type", "");
        if (type == "Polygon") {
            mask.polygons.push_back(parse_polygon(geom->at("coordinates")));
        } else if (type == "MultiPolygon") {
            for (const auto& rings : geom->at("coordinates")) {
                mask.polygons.push_back(parse_polygon(rings));
            }
        }
        // other geometry types are not urban areas; ignore
    }
    return mask;
}

std::string features_to_geojson(const std::vector<TowerFeature>& fs) {
    json arr = json::array();
    for (const auto& f : fs) arr.push_back(point_feature_json(f));
    const json doc{{"type", "FeatureCollection"}, {"features", arr}};
    return doc.dump(2) + "\n";
}

ParseResult load_features(const std::string& path, const TagPredicate& extra) {
    return parse_features(read_file(path), extra);
}

UrbanMask load_urban_mask(const std::string& path) {
    return parse_urban_mask(read_file(path));
}

void save_features(const std::vector<TowerFeature>& fs, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure(fmt::format("cannot open {} for writing", path));
    out << features_to_geojson(fs);
    if (!out) throw IoFailure(fmt::format("failed writing {}", path));
}

}  // namespace towerforge::ingest
