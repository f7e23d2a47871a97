#pragma once

#include <utility>

namespace towerforge::geo {

// Meters per degree of latitude under the local equirectangular
// approximation; longitude scales by cos(lat). At the 25 m buffer radius the
// approximation error is sub-centimeter, well below a 0.5 m GSD pixel.
inline constexpr double kMetersPerDegree = 111320.0;

// WGS84 geodetic point, degrees.
struct GeoPoint {
    double lon = 0.0;  // degrees east, [-180, 180]
    double lat = 0.0;  // degrees north, [-90, 90]

    bool valid() const;
};

// North-up affine georeference: pixel (col,row) centers map to
// (origin_x + col*px_size_x, origin_y + row*px_size_y). Rotation terms are
// fixed at zero; rotated rasters are rejected at load.
struct GeoTransform {
    double origin_x = 0.0;   // lon of the center of the upper-left pixel
    double origin_y = 0.0;   // lat of the center of the upper-left pixel
    double px_size_x = 0.0;  // degrees per pixel, > 0
    double px_size_y = 0.0;  // degrees per pixel, < 0 (north-up)

    bool valid() const;
};

// Axis-aligned geodetic box, degrees.
struct GeoBox {
    double min_lon = 0.0;
    double min_lat = 0.0;
    double max_lon = 0.0;
    double max_lat = 0.0;

    bool valid() const;
    double center_lon() const { return 0.5 * (min_lon + max_lon); }
    double center_lat() const { return 0.5 * (min_lat + max_lat); }
    bool contains(const GeoPoint& p) const {
        return p.lon >= min_lon && p.lon <= max_lon &&
               p.lat >= min_lat && p.lat <= max_lat;
    }
};

// Continuous axis-aligned box in pixel space; x right, y down.
struct PixelBox {
    double x = 0.0;  // left
    double y = 0.0;  // top
    double w = 0.0;  // > 0
    double h = 0.0;  // > 0

    bool valid() const;
    double area() const { return w * h; }
    double cx() const { return x + 0.5 * w; }
    double cy() const { return y + 0.5 * h; }
};

// Axis-aligned box of the local equirectangular disc of radius_m around p.
// Throws NonFiniteInput for non-finite or non-positive inputs,
// LatitudeOutOfRange when |lat| >= 89 (cos(lat) ill-conditioned).
GeoBox buffer_point(const GeoPoint& p, double radius_m);

// Continuous pixel coordinate of a geodetic point. May fall outside the
// raster; callers bound-check.
std::pair<double, double> geo_to_pixel(const GeoTransform& gt, const GeoPoint& p);

// Geodetic location of a continuous pixel coordinate (col, row). Exact
// inverse of geo_to_pixel at pixel centers.
GeoPoint pixel_to_geo(const GeoTransform& gt, double col, double row);

// Axis-aligned pixel-space hull of a geodetic box (continuous, no rounding).
// Throws DegenerateBox when the result has non-positive width or height.
PixelBox geobox_to_pixelbox(const GeoTransform& gt, const GeoBox& gb);

// Intersection over union of two boxes; 0 when disjoint.
double iou(const PixelBox& a, const PixelBox& b);

// Equirectangular ground distance in meters.
double distance_m(const GeoPoint& a, const GeoPoint& b);

}  // namespace towerforge::geo
