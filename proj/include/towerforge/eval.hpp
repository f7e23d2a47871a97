#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "towerforge/dataset.hpp"
#include "towerforge/geo.hpp"

namespace towerforge::eval {

// One scored prediction in COCO results convention.
struct Detection {
    int image_id = 0;
    int category_id = 1;
    geo::PixelBox bbox;
    double score = 0.0;  // [0, 1]
};

// Greedy match outcome for one detection, in processing order
// (descending score, ties by ascending detection index).
struct DetMatch {
    std::size_t det_index = 0;
    int gt_index = -1;  // -1: false positive
};

// Precision-recall points in recall-non-decreasing order. `defined` is
// false when there are no ground truths to recall against.
struct PRCurve {
    std::vector<std::pair<double, double>> points;  // (recall, precision)
    std::size_t n_gt = 0;
    bool defined = true;
};

// Metric bundle, values x100 as reported in detection papers. Unrounded
// in memory; serialization rounds to 1 decimal.
struct ApReport {
    double ap = 0.0;    // mean over IoU 0.50:0.05:0.95
    double ap50 = 0.0;  // IoU 0.50
    double ap15 = 0.0;  // IoU 0.15
    std::map<int, double> per_threshold;  // IoU percent -> AP x100
};

// IoU thresholds, integer percent: 15 plus the ten-threshold COCO sweep.
inline const std::vector<int>& iou_thresholds() {
    static const std::vector<int> kThresholds{15, 50, 55, 60, 65, 70, 75, 80,
                                              85, 90, 95};
    return kThresholds;
}

// Greedy per-image matching: detections in descending score (ties by
// ascending index) each claim the unmatched ground truth of highest
// IoU >= iou_thr; equal IoUs go to the lower gt index.
std::vector<DetMatch> match_detections(const std::vector<geo::PixelBox>& gts,
                                       const std::vector<Detection>& dets,
                                       double iou_thr);

// Input to the global PR construction: one record per detection.
struct ScoredDetection {
    double score = 0.0;
    std::size_t input_index = 0;  // global tie-break, ascending
    bool is_tp = false;
};

// Cumulative TP/FP over the global score ordering.
PRCurve pr_curve(std::vector<ScoredDetection> dets, std::size_t n_gt);

// 101-point interpolated AP in [0, 1]:
// AP = mean over r in {0.00, 0.01, ..., 1.00} of max precision at
// recall >= r (0 when no point reaches r). Throws UndefinedAp when the
// curve has no ground truths.
double average_precision(const PRCurve& curve);

// Full evaluation at every threshold in iou_thresholds(). Throws
// UnknownImageId for detections referencing absent images, UndefinedAp
// when the dataset has no annotations.
ApReport evaluate(const dataset::CocoDataset& ds, const std::vector<Detection>& dets);

// COCO results JSON: array of {image_id, category_id, bbox, score}.
std::string detections_to_json(const std::vector<Detection>& dets);
std::vector<Detection> detections_from_json(const std::string& json_bytes);
std::vector<Detection> load_detections(const std::string& path);
void save_detections(const std::vector<Detection>& dets, const std::string& path);

// Reports: values x100 rounded to 1 decimal, per-threshold entries included.
std::string report_to_json(const ApReport& report);
std::string report_to_csv(const ApReport& report);  // columns metric,value

}  // namespace towerforge::eval
