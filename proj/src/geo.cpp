#include "towerforge/geo.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "towerforge/errors.hpp"

namespace towerforge::geo {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;

bool finite(double v) { return std::isfinite(v); }

}  // namespace

bool GeoPoint::valid() const {
    return finite(lon) && finite(lat) &&
           lon >= -180.0 && lon <= 180.0 && lat >= -90.0 && lat <= 90.0;
}

bool GeoTransform::valid() const {
    return finite(origin_x) && finite(origin_y) && finite(px_size_x) &&
           finite(px_size_y) && px_size_x > 0.0 && px_size_y < 0.0;
}

bool GeoBox::valid() const {
    return finite(min_lon) && finite(min_lat) && finite(max_lon) &&
           finite(max_lat) && min_lon < max_lon && min_lat < max_lat;
}

bool PixelBox::valid() const {
    return finite(x) && finite(y) && finite(w) && finite(h) && w > 0.0 && h > 0.0;
}

GeoBox buffer_point(const GeoPoint& p, double radius_m) {
    if (!finite(p.lon) || !finite(p.lat) || !finite(radius_m) || radius_m <= 0.0) {
        throw NonFiniteInput(
            fmt::format("buffer_point: invalid input (lon={}, lat={}, radius_m={})",
                        p.lon, p.lat, radius_m));
    }
    if (std::abs(p.lat) >= 89.0) {
        throw LatitudeOutOfRange(
            fmt::format("buffer_point: |lat| must be < 89, got {}", p.lat));
    }
    const double dlat = radius_m / kMetersPerDegree;
    const double dlon = radius_m / (kMetersPerDegree * std::cos(p.lat * kDegToRad));
    return GeoBox{p.lon - dlon, p.lat - dlat, p.lon + dlon, p.lat + dlat};
}

std::pair<double, double> geo_to_pixel(const GeoTransform& gt, const GeoPoint& p) {
    return {(p.lon - gt.origin_x) / gt.px_size_x,
            (p.lat - gt.origin_y) / gt.px_size_y};
}

GeoPoint pixel_to_geo(const GeoTransform& gt, double col, double row) {
    return GeoPoint{gt.origin_x + col * gt.px_size_x,
                    gt.origin_y + row * gt.px_size_y};
}

PixelBox geobox_to_pixelbox(const GeoTransform& gt, const GeoBox& gb) {
    if (!gb.valid()) {
        throw DegenerateBox(
            fmt::format("geobox_to_pixelbox: degenerate geo box [{}, {}] x [{}, {}]",
                        gb.min_lon, gb.max_lon, gb.min_lat, gb.max_lat));
    }
    // north-up: min_lon -> left, max_lat -> top
    auto [c0, r0] = geo_to_pixel(gt, GeoPoint{gb.min_lon, gb.max_lat});
    auto [c1, r1] = geo_to_pixel(gt, GeoPoint{gb.max_lon, gb.min_lat});
    const double x = std::min(c0, c1);
    const double y = std::min(r0, r1);
    const double w = std::abs(c1 - c0);
    const double h = std::abs(r1 - r0);
    if (w <= 0.0 || h <= 0.0) {
        throw DegenerateBox(
            fmt::format("geobox_to_pixelbox: zero-area pixel box ({} x {})", w, h));
    }
    return PixelBox{x, y, w, h};
}

double iou(const PixelBox& a, const PixelBox& b) {
    const double ix = std::min(a.x + a.w, b.x + b.w) - std::max(a.x, b.x);
    const double iy = std::min(a.y + a.h, b.y + b.h) - std::max(a.y, b.y);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    return inter / (a.area() + b.area() - inter);
}

double distance_m(const GeoPoint& a, const GeoPoint& b) {
    const double mean_lat = 0.5 * (a.lat + b.lat) * kDegToRad;
    const double dx = (b.lon - a.lon) * std::cos(mean_lat);
    const double dy = b.lat - a.lat;
    return kMetersPerDegree * std::hypot(dx, dy);
}

}  // namespace towerforge::geo
