#include <algorithm>
#include <cmath>
#include <set>
#include <string>

#include <doctest.h>

#include "towerforge/errors.hpp"
#include "towerforge/ingest.hpp"
#include "towerforge/rng.hpp"

using namespace towerforge;
using namespace towerforge::ingest;

namespace {

const char* kFixture = R"({
  "type": "FeatureCollection",
  "features": [
    {"type": "Feature", "id": "a",
     "geometry": {"type": "Point", "coordinates": [30.0, -5.0]},
     "properties": {"man_made": "tower", "tower:type": "communication"}},
    {"type": "Feature", "id": "b",
     "geometry": {"type": "Point", "coordinates": [31.0, -6.0]},
     "properties": {"man_made": "communications_tower"}},
    {"type": "Feature", "id": "c",
     "geometry": {"type": "Point", "coordinates": [32.0, -7.0]},
     "properties": {"man_made": "water_tower"}},
    {"type": "Feature", "id": "d",
     "geometry": {"type": "LineString",
                  "coordinates": [[33.0, -8.0], [33.1, -8.1]]},
     "properties": {"man_made": "tower"}},
    {"type": "Feature", "id": "e",
     "geometry": {"type": "Point", "coordinates": [34.0, -9.0]},
     "properties": {"name": "untagged"}}
  ]
})";

Ring square(double x0, double y0, double x1, double y1) {
    return Ring{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}, {x0, y0}};
}

TowerFeature feature(const std::string& id, double lon, double lat) {
    return TowerFeature{id, geo::GeoPoint{lon, lat}, {{"man_made", "tower"}}};
}

// independent check used against the ray-casting implementation
bool winding_number_inside(const geo::GeoPoint& p, const Ring& ring) {
    int winding = 0;
    for (std::size_t i = 0; i + 1 < ring.size(); ++i) {
        const auto& a = ring[i];
        const auto& b = ring[i + 1];
        const double cross =
            (b.lon - a.lon) * (p.lat - a.lat) - (p.lon - a.lon) * (b.lat - a.lat);
        if (a.lat <= p.lat) {
            if (b.lat > p.lat && cross > 0) ++winding;
        } else {
            if (b.lat <= p.lat && cross < 0) --winding;
        }
    }
    return winding != 0;
}

}  // namespace

TEST_CASE("parse_features applies the tag and geometry filters") {
    const ParseResult result = parse_features(kFixture);
    REQUIRE(result.features.size() == 2);
    CHECK(result.features[0].id == "a");
    CHECK(result.features[1].id == "b");
    CHECK(result.dropped_tag == 2);        // water_tower + untagged
    CHECK(result.dropped_non_point == 1);  // the LineString
    CHECK(result.features[0].point.lon == doctest::Approx(30.0));
}

TEST_CASE("parse_features never invents ids") {
    const ParseResult result = parse_features(kFixture);
    const std::set<std::string> input_ids{"a", "b", "c", "d", "e"};
    for (const auto& f : result.features) {
        CHECK(input_ids.count(f.id) == 1);
    }
}

TEST_CASE("parse_features with an extra predicate") {
    const ParseResult result =
        parse_features(kFixture, {{"tower:type", "communication"}});
    REQUIRE(result.features.size() == 1);
    CHECK(result.features[0].id == "a");
}

TEST_CASE("parse_features error paths") {
    CHECK_THROWS_AS(parse_features("{not json"), MalformedDocument);
    CHECK_THROWS_AS(parse_features(R"({"type": "Feature"})"), NotAFeatureCollection);
    CHECK_THROWS_AS(parse_features(R"([1, 2, 3])"), NotAFeatureCollection);
}

TEST_CASE("filter_study_region is boundary-inclusive") {
    const StudyRegion region;  // 20..57 E, -27..12 N
    const std::vector<TowerFeature> fs{
        feature("in", 30.0, 0.0),
        feature("north", 30.0, 13.0),
        feature("corner", 57.0, 12.0),
    };
    const auto kept = filter_study_region(fs, region);
    REQUIRE(kept.size() == 2);
    CHECK(kept[0].id == "in");
    CHECK(kept[1].id == "corner");
}

TEST_CASE("point_in_polygon on the unit square") {
    PolygonWithHoles poly;
    poly.outer = square(0, 0, 1, 1);
    CHECK(point_in_polygon({0.5, 0.5}, poly));
    CHECK_FALSE(point_in_polygon({2.0, 2.0}, poly));
    // edge and corner points count as inside
    CHECK(point_in_polygon({0.0, 0.5}, poly));
    CHECK(point_in_polygon({1.0, 1.0}, poly));

    poly.holes.push_back(square(0.25, 0.25, 0.75, 0.75));
    CHECK_FALSE(point_in_polygon({0.5, 0.5}, poly));
    CHECK(point_in_polygon({0.1, 0.1}, poly));
    // a point on the hole boundary is treated as inside the polygon
    CHECK(point_in_polygon({0.25, 0.5}, poly));
}

TEST_CASE("point_in_polygon agrees with a winding-number oracle") {
    SplitMix64 rng(2024);
    for (int trial = 0; trial < 40; ++trial) {
        // random convex polygon: points on an ellipse
        const int n = 3 + int(rng.next_below(8));
        const double cx = rng.next_double() * 10 - 5;
        const double cy = rng.next_double() * 10 - 5;
        const double rx = 0.5 + rng.next_double() * 3;
        const double ry = 0.5 + rng.next_double() * 3;
        Ring ring;
        for (int i = 0; i < n; ++i) {
            const double angle = 2.0 * 3.14159265358979323846 * i / n;
            ring.push_back({cx + rx * std::cos(angle), cy + ry * std::sin(angle)});
        }
        ring.push_back(ring.front());
        const PolygonWithHoles poly{ring, {}};
        for (int i = 0; i < 25; ++i) {
            const geo::GeoPoint p{rng.next_double() * 16 - 8, rng.next_double() * 16 - 8};
            CHECK(point_in_polygon(p, poly) == winding_number_inside(p, ring));
        }
    }
}

TEST_CASE("exclude_urban") {
    UrbanMask mask;
    mask.polygons.push_back({square(0, 0, 10, 10), {}});

    SUBCASE("empty mask keeps everything") {
        const std::vector<TowerFeature> fs{feature("a", 1, 1), feature("b", 2, 2)};
        const auto result = exclude_urban(fs, UrbanMask{});
        CHECK(result.kept.size() == 2);
        CHECK(result.removed == 0);
    }
    SUBCASE("all inside") {
        const std::vector<TowerFeature> fs{feature("a", 1, 1), feature("b", 2, 2)};
        const auto result = exclude_urban(fs, mask);
        CHECK(result.kept.empty());
        CHECK(result.removed == 2);
    }
    SUBCASE("mixed, 3 inside and 2 outside") {
        const std::vector<TowerFeature> fs{
            feature("in1", 1, 1),   feature("out1", 20, 20), feature("in2", 5, 5),
            feature("out2", -3, 4), feature("in3", 9.5, 0.5),
        };
        const auto result = exclude_urban(fs, mask);
        REQUIRE(result.kept.size() == 2);
        CHECK(result.removed == 3);
        CHECK(result.kept[0].id == "out1");
        CHECK(result.kept[1].id == "out2");
        CHECK(result.kept.size() + result.removed == fs.size());
    }
}

TEST_CASE("dedupe greedy rule") {
    SUBCASE("identical points collapse") {
        const std::vector<TowerFeature> fs{feature("a", 30, 0), feature("b", 30, 0)};
        CHECK(dedupe(fs, 10.0).size() == 1);
    }
    SUBCASE("min_sep 0 drops only exact duplicates") {
        const std::vector<TowerFeature> fs{
            feature("a", 30, 0),
            feature("b", 30, 0),
            feature("c", 30.0000001, 0),
        };
        const auto kept = dedupe(fs, 0.0);
        REQUIRE(kept.size() == 2);
        CHECK(kept[0].id == "a");
        CHECK(kept[1].id == "c");
    }
    SUBCASE("three collinear points 8 m apart keep first and third") {
        const double step = 8.0 / 111320.0;
        const std::vector<TowerFeature> fs{
            feature("a", 30, 0), feature("b", 30, step), feature("c", 30, 2 * step)};
        const auto kept = dedupe(fs, 10.0);
        REQUIRE(kept.size() == 2);
        CHECK(kept[0].id == "a");
        CHECK(kept[1].id == "c");
    }
}

TEST_CASE("filters are idempotent") {
    const ParseResult parsed = parse_features(kFixture);
    const StudyRegion region;
    const auto once = filter_study_region(parsed.features, region);
    const auto twice = filter_study_region(once, region);
    CHECK(once.size() == twice.size());

    const auto d1 = dedupe(parsed.features, 10.0);
    const auto d2 = dedupe(d1, 10.0);
    CHECK(d1.size() == d2.size());

    UrbanMask mask;
    mask.polygons.push_back({square(29.5, -5.5, 30.5, -4.5), {}});
    const auto u1 = exclude_urban(parsed.features, mask);
    const auto u2 = exclude_urban(u1.kept, mask);
    CHECK(u1.kept.size() == u2.kept.size());
    CHECK(u2.removed == 0);
}

TEST_CASE("geojson output is byte-stable") {
    const ParseResult parsed = parse_features(kFixture);
    const std::string a = features_to_geojson(parsed.features);
    const std::string b = features_to_geojson(parse_features(kFixture).features);
    CHECK(a == b);
    // and round-trips through the parser
    const ParseResult back = parse_features(a);
    REQUIRE(back.features.size() == parsed.features.size());
    for (std::size_t i = 0; i < back.features.size(); ++i) {
        CHECK(back.features[i].id == parsed.features[i].id);
        CHECK(std::abs(back.features[i].point.lon - parsed.features[i].point.lon) <
              1e-7);
    }
}

TEST_CASE("urban mask ring validation") {
    SUBCASE("valid polygon with hole") {
        const char* doc = R"({
          "type": "FeatureCollection",
          "features": [{"type": "Feature", "geometry": {
            "type": "Polygon",
            "coordinates": [
              [[0,0],[10,0],[10,10],[0,10],[0,0]],
              [[4,4],[6,4],[6,6],[4,6],[4,4]]
            ]}, "properties": {}}]
        })";
        const UrbanMask mask = parse_urban_mask(doc);
        REQUIRE(mask.polygons.size() == 1);
        CHECK(mask.polygons[0].holes.size() == 1);
    }
    SUBCASE("self-intersecting bowtie rejected") {
        const char* doc = R"({
          "type": "FeatureCollection",
          "features": [{"type": "Feature", "geometry": {
            "type": "Polygon",
            "coordinates": [[[0,0],[10,10],[10,0],[0,10],[0,0]]]},
            "properties": {}}]
        })";
        CHECK_THROWS_AS(parse_urban_mask(doc), InvalidPolygon);
    }
    SUBCASE("unclosed ring rejected") {
        const char* doc = R"({
          "type": "FeatureCollection",
          "features": [{"type": "Feature", "geometry": {
            "type": "Polygon",
            "coordinates": [[[0,0],[10,0],[10,10],[0,10]]]},
            "properties": {}}]
        })";
        CHECK_THROWS_AS(parse_urban_mask(doc), InvalidPolygon);
    }
    SUBCASE("triangle ring too short") {
        const char* doc = R"({
          "type": "FeatureCollection",
          "features": [{"type": "Feature", "geometry": {
            "type": "Polygon",
            "coordinates": [[[0,0],[10,0],[0,0]]]},
            "properties": {}}]
        })";
        CHECK_THROWS_AS(parse_urban_mask(doc), InvalidPolygon);
    }
    SUBCASE("MultiPolygon expands") {
        const char* doc = R"({
          "type": "FeatureCollection",
          "features": [{"type": "Feature", "geometry": {
            "type": "MultiPolygon",
            "coordinates": [
              [[[0,0],[1,0],[1,1],[0,1],[0,0]]],
              [[[5,5],[6,5],[6,6],[5,6],[5,5]]]
            ]}, "properties": {}}]
        })";
        CHECK(parse_urban_mask(doc).polygons.size() == 2);
    }
}
