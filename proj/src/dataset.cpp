#include "towerforge/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <json.hpp>

#include "towerforge/errors.hpp"
#include "towerforge/rng.hpp"

namespace towerforge::dataset {

using nlohmann::json;

namespace {

double round1(double v) { return std::round(v * 10.0) / 10.0; }
double round7(double v) { return std::round(v * 1e7) / 1e7; }

CocoDataset subset_by_image_ids(const CocoDataset& ds, const std::set<int>& ids) {
    CocoDataset out;
    for (const auto& img : ds.images) {
        if (ids.count(img.id)) out.images.push_back(img);
    }
    for (const auto& ann : ds.annotations) {
        if (ids.count(ann.image_id)) out.annotations.push_back(ann);
    }
    return out;
}

}  // namespace

const char* axis_name(Axis axis) {
    return axis == Axis::Latitude ? "latitude" : "longitude";
}

CocoDataset to_coco(const raster::ChipPlan& plan, bool include_negatives) {
    std::vector<const raster::Chip*> chips;
    chips.reserve(plan.positives.size() + plan.negatives.size());
    for (const auto& c : plan.positives) chips.push_back(&c);
    if (include_negatives) {
        for (const auto& c : plan.negatives) chips.push_back(&c);
    }
    std::sort(chips.begin(), chips.end(),
              [](const raster::Chip* a, const raster::Chip* b) {
                  return std::tie(a->scene_id, a->row, a->col) <
                         std::tie(b->scene_id, b->row, b->col);
              });

    CocoDataset ds;
    int next_image_id = 1;
    int next_ann_id = 1;
    std::set<std::tuple<std::string, int, int>> seen;
    for (const auto* c : chips) {
        if (!seen.insert({c->scene_id, c->row, c->col}).second) {
            throw DuplicateChip(fmt::format("chip {}_{}_{} appears twice",
                                            c->scene_id, c->col, c->row));
        }
        CocoImage img;
        img.id = next_image_id++;
        img.file_name = fmt::format("{}_{}_{}.jpg", c->scene_id, c->col, c->row);
        img.width = c->size;
        img.height = c->size;
        const geo::GeoPoint center = c->center_geo();
        img.geo_center = geo::GeoPoint{round7(center.lon), round7(center.lat)};
        for (const auto& box : c->annotations) {
            CocoAnnotation ann;
            ann.id = next_ann_id++;
            ann.image_id = img.id;
            ann.bbox = geo::PixelBox{round1(box.x), round1(box.y), round1(box.w),
                                     round1(box.h)};
            ann.area = ann.bbox.w * ann.bbox.h;
            ds.annotations.push_back(ann);
        }
        ds.images.push_back(std::move(img));
    }
    return ds;
}

SplitResult split_train_test(const CocoDataset& ds, double train_fraction,
                             std::uint64_t seed) {
    if (ds.images.empty()) throw EmptyDataset("split_train_test: no images");
    if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
        throw ValidationError(
            fmt::format("train_fraction must be in (0,1), got {}", train_fraction));
    }
    std::vector<int> ids;
    ids.reserve(ds.images.size());
    for (const auto& img : ds.images) ids.push_back(img.id);

    // Fisher-Yates over the splitmix sequence; std::shuffle is
    // implementation-defined and would break cross-platform determinism
    SplitMix64 rng(seed);
    for (std::size_t i = ids.size() - 1; i > 0; --i) {
        const std::size_t j = rng.next_below(i + 1);
        std::swap(ids[i], ids[j]);
    }

    const std::size_t train_n =
        static_cast<std::size_t>(std::floor(double(ids.size()) * train_fraction));
    const std::set<int> train_ids(ids.begin(), ids.begin() + train_n);
    const std::set<int> test_ids(ids.begin() + train_n, ids.end());
    return SplitResult{subset_by_image_ids(ds, train_ids),
                       subset_by_image_ids(ds, test_ids)};
}

std::vector<RegionBand> default_bands() {
    return {
        RegionBand{"lat_upper", Axis::Latitude, -2.0, 14.0},
        RegionBand{"lat_middle", Axis::Latitude, -16.5, -2.0},
        RegionBand{"lat_lower", Axis::Latitude, -28.0, -16.5},
        RegionBand{"lon_upper", Axis::Longitude, 18.0, 31.0},
        RegionBand{"lon_middle", Axis::Longitude, 31.0, 41.0},
        RegionBand{"lon_lower", Axis::Longitude, 41.0, 58.0},
    };
}

bool band_contains(const RegionBand& band, double value, double axis_min_lower) {
    if (value > band.lower && value <= band.upper) return true;
    return band.lower == axis_min_lower && value == band.lower;
}

StratifyResult stratify(const CocoDataset& ds, const std::vector<RegionBand>& bands) {
    std::map<Axis, double> axis_min;
    std::set<Axis> axes;
    for (const auto& b : bands) {
        axes.insert(b.axis);
        auto it = axis_min.find(b.axis);
        if (it == axis_min.end() || b.lower < it->second) axis_min[b.axis] = b.lower;
    }

    StratifyResult result;
    for (const auto& b : bands) result.by_band[b.name];  // keep empty bands present
    std::map<std::string, std::set<int>> band_ids;

    for (const auto& img : ds.images) {
        if (!img.geo_center) {
            throw MissingGeoCenter(
                fmt::format("image {} ({}) has no geo_center", img.id, img.file_name));
        }
        for (const Axis axis : axes) {
            const double v = axis == Axis::Latitude ? img.geo_center->lat
                                                    : img.geo_center->lon;
            const RegionBand* assigned = nullptr;
            for (const auto& b : bands) {
                if (b.axis != axis) continue;
                if (band_contains(b, v, axis_min.at(axis))) {
                    assigned = &b;
                    break;
                }
            }
            if (assigned) {
                band_ids[assigned->name].insert(img.id);
            } else {
                result.out_of_band[axis].push_back(img.id);
            }
        }
    }

    for (auto& [name, subset] : result.by_band) {
        const auto it = band_ids.find(name);
        if (it != band_ids.end()) subset = subset_by_image_ids(ds, it->second);
    }
    return result;
}

ExperimentMatrix build_matrix(const std::vector<RegionBand>& bands,
                              bool include_baseline) {
    if (bands.empty()) throw ValidationError("build_matrix: no bands");
    ExperimentMatrix matrix;
    for (const Axis axis : {Axis::Latitude, Axis::Longitude}) {
        std::vector<const RegionBand*> axis_bands;
        for (const auto& b : bands) {
            if (b.axis == axis) axis_bands.push_back(&b);
        }
        if (axis_bands.empty()) continue;
        if (include_baseline) {
            for (const auto* b : axis_bands) {
                matrix.cells.push_back(MatrixCell{"all", b->name});
            }
        }
        for (const auto* train : axis_bands) {
            for (const auto* eval : axis_bands) {
                matrix.cells.push_back(MatrixCell{train->name, eval->name});
            }
        }
    }
    return matrix;
}

std::string emit_training_config(const std::string& variant) {
    struct Config {
        int depth;
        const char* norm;
        const char* roi_heads;
        int freeze_at;
        const char* base_lr;
        const char* steps;
        int max_iter;
    };
    static const std::map<std::string, Config> kConfigs = {
        {"RN50-HPT", {50, "SyncBN", "Res5ROIHeadsExtraNorm", 0, "0.15", "9500", 12500}},
        {"RN50-RI", {50, "SyncBN", "Res5ROIHeads", 0, "0.02", "(60000, 80000)", 90000}},
        {"RN50-INT", {50, "FrozenBN", "Res5ROIHeads", 2, "0.02", "9500", 12500}},
        {"RN101-INT", {101, "FrozenBN", "Res5ROIHeads", 2, "0.02", "9500", 12500}},
    };
    const auto it = kConfigs.find(variant);
    if (it == kConfigs.end()) {
        throw UnknownVariant(fmt::format(
            "unknown variant '{}' (expected RN50-HPT, RN50-RI, RN50-INT, RN101-INT)",
            variant));
    }
    const Config& c = it->second;
    return fmt::format(
        "MODEL.RESNETS.DEPTH: {}\n"
        "MODEL.RESNETS.NORM: {}\n"
        "MODEL.ROI_HEADS.NAME: {}\n"
        "MODEL.BACKBONE.FREEZE_AT: {}\n"
        "SOLVER.BASE_LR: {}\n"
        "SOLVER.STEPS: {}\n"
        "SOLVER.MAX_ITER: {}\n"
        "SOLVER.IMS_PER_BATCH: 8\n",
        c.depth, c.norm, c.roi_heads, c.freeze_at, c.base_lr, c.steps, c.max_iter);
}

std::string coco_to_json(const CocoDataset& ds) {
    json images = json::array();
    for (const auto& img : ds.images) {
        json j{{"id", img.id},
               {"file_name", img.file_name},
               {"width", img.width},
               {"height", img.height}};
        if (img.geo_center) {
            j["geo_center"] = {img.geo_center->lon, img.geo_center->lat};
        }
        images.push_back(std::move(j));
    }
    json annotations = json::array();
    for (const auto& ann : ds.annotations) {
        annotations.push_back(
            json{{"id", ann.id},
                 {"image_id", ann.image_id},
                 {"category_id", ann.category_id},
                 {"bbox", {ann.bbox.x, ann.bbox.y, ann.bbox.w, ann.bbox.h}},
                 {"area", ann.area},
                 {"iscrowd", ann.iscrowd}});
    }
    const json doc{{"images", images},
                   {"annotations", annotations},
                   {"categories", json::array({json{{"id", CocoDataset::kCategoryId},
                                                    {"name", CocoDataset::kCategoryName}}})}};
    return doc.dump(2) + "\n";
}

CocoDataset coco_from_json(const std::string& json_bytes) {
    json doc;
    try {
        doc = json::parse(json_bytes);
    } catch (const json::parse_error& e) {
        throw MalformedDocument(fmt::format("COCO file is not valid JSON: {}", e.what()));
    }
    if (!doc.is_object() || !doc.contains("images") || !doc.contains("annotations")) {
        throw MalformedDocument("COCO file must have images and annotations arrays");
    }

    CocoDataset ds;
    std::set<int> image_ids;
    for (const auto& j : doc.at("images")) {
        CocoImage img;
        img.id = j.at("id").get<int>();
        img.file_name = j.value("file_name", "");
        img.width = j.value("width", 0);
        img.height = j.value("height", 0);
        if (j.contains("geo_center")) {
            const auto& gc = j.at("geo_center");
            img.geo_center = geo::GeoPoint{gc.at(0).get<double>(), gc.at(1).get<double>()};
        }
        if (!image_ids.insert(img.id).second) {
            throw MalformedDocument(fmt::format("duplicate image id {}", img.id));
        }
        ds.images.push_back(std::move(img));
    }
    std::set<int> ann_ids;
    for (const auto& j : doc.at("annotations")) {
        CocoAnnotation ann;
        ann.id = j.at("id").get<int>();
        ann.image_id = j.at("image_id").get<int>();
        ann.category_id = j.value("category_id", 1);
        const auto& bbox = j.at("bbox");
        ann.bbox = geo::PixelBox{bbox.at(0).get<double>(), bbox.at(1).get<double>(),
                                 bbox.at(2).get<double>(), bbox.at(3).get<double>()};
        ann.area = j.value("area", ann.bbox.w * ann.bbox.h);
        ann.iscrowd = j.value("iscrowd", 0);
        if (!ann_ids.insert(ann.id).second) {
            throw MalformedDocument(fmt::format("duplicate annotation id {}", ann.id));
        }
        if (!image_ids.count(ann.image_id)) {
            throw MalformedDocument(fmt::format(
                "annotation {} references missing image {}", ann.id, ann.image_id));
        }
        if (std::abs(ann.area - ann.bbox.w * ann.bbox.h) > 0.5 + 1e-9) {
            throw MalformedDocument(fmt::format(
                "annotation {}: area {} does not match bbox {}x{}", ann.id, ann.area,
                ann.bbox.w, ann.bbox.h));
        }
        ds.annotations.push_back(ann);
    }
    return ds;
}

CocoDataset load_coco(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure(fmt::format("cannot open {}", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return coco_from_json(ss.str());
}

void save_coco(const CocoDataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure(fmt::format("cannot open {} for writing", path));
    out << coco_to_json(ds);
    if (!out) throw IoFailure(fmt::format("failed writing {}", path));
}

}  // namespace towerforge::dataset
