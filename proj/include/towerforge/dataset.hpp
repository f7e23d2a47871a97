#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "towerforge/geo.hpp"
#include "towerforge/raster.hpp"

namespace towerforge::dataset {

struct CocoImage {
    int id = 0;
    std::string file_name;
    int width = 0;
    int height = 0;
    std::optional<geo::GeoPoint> geo_center;  // chip center, WGS84
};

struct CocoAnnotation {
    int id = 0;
    int image_id = 0;
    int category_id = 1;
    geo::PixelBox bbox;  // [x, y, w, h], 1-decimal precision
    double area = 0.0;   // bbox.w * bbox.h
    int iscrowd = 0;
};

// Detection-flavor COCO container, single "cell_tower" category.
struct CocoDataset {
    std::vector<CocoImage> images;
    std::vector<CocoAnnotation> annotations;

    static constexpr int kCategoryId = 1;
    static constexpr const char* kCategoryName = "cell_tower";
};

enum class Axis { Latitude, Longitude };

// Geographic band; owns its upper boundary. The lowest band of each axis
// also owns its lower edge (stratify applies the rule).
struct RegionBand {
    std::string name;
    Axis axis = Axis::Latitude;
    double lower = 0.0;
    double upper = 0.0;
};

struct SplitResult {
    CocoDataset train;
    CocoDataset test;
};

struct MatrixCell {
    std::string train_selector;  // band name or "all"
    std::string eval_selector;
};

struct ExperimentMatrix {
    std::vector<MatrixCell> cells;
};

struct StratifyResult {
    // band name -> subset of the input dataset
    std::map<std::string, CocoDataset> by_band;
    // per axis, image ids outside every band of that axis (reported, not dropped)
    std::map<Axis, std::vector<int>> out_of_band;
};

// Chips to COCO. Positive chips become images with annotations (boxes
// rounded to 1 decimal); negatives are included as annotation-less images
// iff include_negatives. Ids run sequentially in (scene_id, row, col) order.
// Throws DuplicateChip on a repeated (scene_id, chip index).
CocoDataset to_coco(const raster::ChipPlan& plan, bool include_negatives);

// Seeded image-level split; train size = floor(n_images * train_fraction).
// Throws EmptyDataset.
SplitResult split_train_test(const CocoDataset& ds, double train_fraction,
                             std::uint64_t seed);

// The six default bands: latitude upper/middle/lower partitioning [-28, 14],
// longitude upper/middle/lower partitioning [18, 58].
std::vector<RegionBand> default_bands();

// Assign every image to the band containing its geo_center, per axis.
// Throws MissingGeoCenter when an image lacks a center.
StratifyResult stratify(const CocoDataset& ds, const std::vector<RegionBand>& bands);

// All (train band, eval band) pairs per axis, preceded (per axis) by
// ("all", eval band) baseline rows when include_baseline.
ExperimentMatrix build_matrix(const std::vector<RegionBand>& bands,
                              bool include_baseline);

// Training configuration text for one of RN50-HPT, RN50-RI, RN50-INT,
// RN101-INT; one `KEY: value` pair per line. Throws UnknownVariant.
std::string emit_training_config(const std::string& variant);

// Band membership under the boundary rules (upper-inclusive; the band with
// axis_min_lower also includes its lower edge).
bool band_contains(const RegionBand& band, double value, double axis_min_lower);

// JSON serialization: sorted keys, 1-decimal bbox values, 7-decimal
// geo_center. Byte-stable for identical inputs.
std::string coco_to_json(const CocoDataset& ds);
CocoDataset coco_from_json(const std::string& json_bytes);
CocoDataset load_coco(const std::string& path);
void save_coco(const CocoDataset& ds, const std::string& path);

const char* axis_name(Axis axis);

}  // namespace towerforge::dataset
