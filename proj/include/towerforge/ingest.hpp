#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "towerforge/geo.hpp"

namespace towerforge::ingest {

// An OSM point feature that survived (or is about to face) the tag filter.
struct TowerFeature {
    std::string id;
    geo::GeoPoint point;
    std::vector<std::pair<std::string, std::string>> tags;  // key sorted
};

// Geographic crop applied after parsing. Defaults cover eastern, southern,
// and central Africa (12N..27S, 20E..57E).
struct StudyRegion {
    geo::GeoBox box{20.0, -27.0, 57.0, 12.0};
};

// Closed ring, first == last, non-self-intersecting (checked at load).
using Ring = std::vector<geo::GeoPoint>;

struct PolygonWithHoles {
    Ring outer;
    std::vector<Ring> holes;
};

// Urban-centre polygons; features inside any polygon are excluded.
struct UrbanMask {
    std::vector<PolygonWithHoles> polygons;
};

struct ParseResult {
    std::vector<TowerFeature> features;
    std::size_t dropped_non_point = 0;   // matching tags but non-Point geometry
    std::size_t dropped_tag = 0;         // tag predicate not satisfied
    std::size_t dropped_invalid = 0;     // out-of-range coordinates
};

struct ExcludeResult {
    std::vector<TowerFeature> kept;
    std::size_t removed = 0;
};

// Extra key=value pairs a feature must carry in addition to the built-in
// man_made filter; empty means no extra constraint.
using TagPredicate = std::vector<std::pair<std::string, std::string>>;

// Parse a GeoJSON FeatureCollection and keep Point features whose
// "man_made" property is exactly "tower" or "communications_tower"
// (case-sensitive) and which satisfy every extra predicate pair.
// Throws MalformedDocument / NotAFeatureCollection.
ParseResult parse_features(const std::string& geojson_bytes,
                           const TagPredicate& extra = {});

// Keep features inside the region, boundaries inclusive; preserves order.
std::vector<TowerFeature> filter_study_region(const std::vector<TowerFeature>& fs,
                                              const StudyRegion& region);

// Even-odd ray casting; points exactly on an edge count as inside.
bool point_in_polygon(const geo::GeoPoint& p, const PolygonWithHoles& poly);

// Drop every feature whose point falls inside any mask polygon.
ExcludeResult exclude_urban(const std::vector<TowerFeature>& fs,
                            const UrbanMask& mask);

// Greedy scan in input order: a feature is dropped when its equirectangular
// distance to an already-kept feature is <= min_sep_m.
std::vector<TowerFeature> dedupe(const std::vector<TowerFeature>& fs,
                                 double min_sep_m = 10.0);

// Urban mask from a GeoJSON FeatureCollection of Polygon / MultiPolygon
// features. Ring validity (>= 4 points, closed, non-self-intersecting) is
// checked here; throws InvalidPolygon.
UrbanMask parse_urban_mask(const std::string& geojson_bytes);

// Serialize features back to GeoJSON, byte-stable: keys sorted, coordinates
// rounded to 7 decimals.
std::string features_to_geojson(const std::vector<TowerFeature>& fs);

// File helpers (throw IoFailure on unreadable/unwritable paths).
ParseResult load_features(const std::string& path, const TagPredicate& extra = {});
UrbanMask load_urban_mask(const std::string& path);
void save_features(const std::vector<TowerFeature>& fs, const std::string& path);

}  // namespace towerforge::ingest
