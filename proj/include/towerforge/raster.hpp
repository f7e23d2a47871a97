#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "towerforge/geo.hpp"

namespace towerforge::raster {

// 8-bit RGB raster, row-major interleaved, north-up georeference.
struct RasterImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> pixels;  // width * height * 3
    geo::GeoTransform transform;
    std::string scene_id;

    std::uint8_t* px(int x, int y) { return pixels.data() + 3 * (std::size_t(y) * width + x); }
    const std::uint8_t* px(int x, int y) const {
        return pixels.data() + 3 * (std::size_t(y) * width + x);
    }
    // latitude of the raster's continuous center, used for GSD arithmetic
    double center_lat() const {
        return transform.origin_y + 0.5 * (height - 1) * transform.px_size_y;
    }
};

// Ground sample distance in meters, from the x pixel size at the scene
// center latitude.
double gsd_m(const RasterImage& r);

// One full chip-sized window of the source raster.
struct ChipWindow {
    int col = 0;  // grid column index
    int row = 0;  // grid row index
    int offset_x = 0;
    int offset_y = 0;
};

// A cut chip: fixed-size pixel block plus annotations in chip-local
// continuous coordinates, each clipped to [0, size]^2.
struct Chip {
    std::string scene_id;
    int col = 0;
    int row = 0;
    int offset_x = 0;
    int offset_y = 0;
    int size = 512;
    std::vector<std::uint8_t> pixels;  // size * size * 3
    std::vector<geo::PixelBox> annotations;
    geo::GeoTransform transform;

    bool positive() const { return !annotations.empty(); }
    geo::GeoPoint center_geo() const {
        const double c = 0.5 * (size - 1);
        return geo::pixel_to_geo(transform, c, c);
    }
};

// Per-scene sampled chips; positives carry annotations, negatives none.
struct ChipPlan {
    std::vector<Chip> positives;
    std::vector<Chip> negatives;
};

struct AssignResult {
    std::vector<Chip> chips;     // one per window, row-major
    std::size_t dropped = 0;     // boxes whose center fell in no full window
};

// Quarter-chip rule: radius_m / gsd_m must not exceed chip_px / 4.
// Throws BufferTooLarge (carrying both compared quantities) on violation,
// InvalidGsd / NonFiniteInput for non-positive inputs.
void validate_buffer(double radius_m, double gsd_m, int chip_px);

// Bilinear resample to the target ground sample distance; geographic extent
// is preserved. Identity when the source is already at target (within 1e-9
// relative scale). Throws InvalidGsd / EmptyRaster.
RasterImage resample_to_gsd(const RasterImage& r, double target_gsd_m);

// Non-overlapping full windows at offsets (i*chip_px, j*chip_px), row-major;
// trailing partial strips are discarded. Throws RasterTooSmall.
std::vector<ChipWindow> chip_grid(const RasterImage& r, int chip_px = 512);

// Cut every window into a Chip and assign each box to the unique window
// containing its center (boundary ties go to the smaller row, then smaller
// column). Assigned boxes are translated to chip-local coordinates and
// clipped; boxes centered in no full window are counted in `dropped`.
AssignResult assign_annotations(const RasterImage& r,
                                const std::vector<ChipWindow>& windows,
                                const std::vector<geo::PixelBox>& boxes,
                                int chip_px = 512);

// Per scene id, pick one positive and one negative chip uniformly at random
// (seeded; scenes lacking a category contribute only the other). Output is
// sorted by (scene_id, row, col) so it is independent of input order.
ChipPlan select_samples(const std::vector<Chip>& chips, std::uint64_t seed);

// JPEG (quality 95) plus `.jgw` world-file sidecar, named
// `<scene_id>_<col>_<row>.jpg`. Returns the written image path.
std::string write_chip(const Chip& c, const std::string& dir);

// Image + 6-line ESRI world file (+ optional `.meta` sidecar carrying
// `scene_id=...`). Accepts PNG/JPEG/TIFF; rejects missing sidecars and
// rotated transforms.
RasterImage load_raster(const std::string& image_path);

// PNG + world file + meta sidecar; used for synthetic scenes.
void save_raster_png(const RasterImage& r, const std::string& image_path);

// World-file primitives: one value per line, order
// px_size_x, rot, rot, px_size_y, origin_x, origin_y.
std::string format_world_file(const geo::GeoTransform& gt);
geo::GeoTransform parse_world_file(const std::string& text);

}  // namespace towerforge::raster
