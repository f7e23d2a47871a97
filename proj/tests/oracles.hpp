// Brute-force reference implementations used to check the evaluator and the
// random-instance generator for those checks. Deliberately written with
// naive loops and no code shared with the library's evaluation path.
#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <vector>

#include "towerforge/dataset.hpp"
#include "towerforge/eval.hpp"
#include "towerforge/rng.hpp"

namespace oracle {

struct Box {
    double x, y, w, h;
};

struct Det {
    int image_id;
    Box box;
    double score;
};

struct Instance {
    std::map<int, std::vector<Box>> gts;  // image id -> boxes
    std::vector<Det> dets;                // global input order
};

inline double iou_ref(const Box& a, const Box& b) {
    const double ax1 = a.x + a.w, ay1 = a.y + a.h;
    const double bx1 = b.x + b.w, by1 = b.y + b.h;
    const double ix0 = a.x > b.x ? a.x : b.x;
    const double iy0 = a.y > b.y ? a.y : b.y;
    const double ix1 = ax1 < bx1 ? ax1 : bx1;
    const double iy1 = ay1 < by1 ? ay1 : by1;
    if (ix1 <= ix0 || iy1 <= iy0) return 0.0;
    const double inter = (ix1 - ix0) * (iy1 - iy0);
    return inter / (a.w * a.h + b.w * b.h - inter);
}

// AP in [0, 1] at one IoU threshold: greedy matching per image (descending
// score, ties by ascending global index; best unmatched gt of IoU >= thr,
// equal IoU -> lower gt index), then cumulative precision/recall over the
// global ranking, then the 101-point interpolation evaluated literally.
inline double ap_ref(const Instance& inst, double thr) {
    std::size_t n_gt = 0;
    for (const auto& [id, boxes] : inst.gts) n_gt += boxes.size();

    // global rank order
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < inst.dets.size(); ++i) order.push_back(i);
    for (std::size_t i = 0; i < order.size(); ++i) {
        for (std::size_t j = i + 1; j < order.size(); ++j) {
            const auto& a = inst.dets[order[i]];
            const auto& b = inst.dets[order[j]];
            if (b.score > a.score ||
                (b.score == a.score && order[j] < order[i])) {
                std::swap(order[i], order[j]);
            }
        }
    }

    // per-image greedy matching in that order
    std::map<int, std::vector<bool>> taken;
    for (const auto& [id, boxes] : inst.gts) {
        taken[id] = std::vector<bool>(boxes.size(), false);
    }
    std::vector<bool> is_tp(inst.dets.size(), false);
    for (const std::size_t di : order) {
        const Det& det = inst.dets[di];
        const auto git = inst.gts.find(det.image_id);
        if (git == inst.gts.end()) continue;
        const auto& boxes = git->second;
        auto& used = taken[det.image_id];
        int best = -1;
        double best_iou = 0.0;
        for (std::size_t gi = 0; gi < boxes.size(); ++gi) {
            if (used[gi]) continue;
            const double v = iou_ref(det.box, boxes[gi]);
            if (v >= thr && v > best_iou) {
                best_iou = v;
                best = int(gi);
            }
        }
        if (best >= 0) {
            used[std::size_t(best)] = true;
            is_tp[di] = true;
        }
    }

    // cumulative PR points over the ranking
    std::vector<std::pair<double, double>> points;  // (recall, precision)
    std::size_t tp = 0, fp = 0;
    for (const std::size_t di : order) {
        if (is_tp[di]) ++tp;
        else ++fp;
        points.push_back({double(tp) / double(n_gt), double(tp) / double(tp + fp)});
    }

    double sum = 0.0;
    for (int k = 0; k <= 100; ++k) {
        const double r = double(k) / 100.0;
        double best = 0.0;
        for (const auto& [recall, precision] : points) {
            if (recall >= r && precision > best) best = precision;
        }
        sum += best;
    }
    return sum / 101.0;
}

// Random small instance; guarantees at least one ground truth overall.
// Scores are quantized to one decimal half the time so rank ties occur.
inline Instance random_instance(towerforge::SplitMix64& rng) {
    Instance inst;
    const int n_images = 1 + int(rng.next_below(4));
    std::size_t total_gt = 0;
    for (int img = 1; img <= n_images; ++img) {
        const int n_gt = int(rng.next_below(6));  // 0..5
        for (int g = 0; g < n_gt; ++g) {
            inst.gts[img].push_back(Box{rng.next_double() * 80,
                                        rng.next_double() * 80,
                                        5 + rng.next_double() * 35,
                                        5 + rng.next_double() * 35});
        }
        total_gt += std::size_t(n_gt);
        const int n_det = int(rng.next_below(9));  // 0..8
        for (int d = 0; d < n_det; ++d) {
            Box box;
            if (!inst.gts[img].empty() && rng.next_double() < 0.6) {
                // jittered copy of a gt so that matches happen
                const Box& gt = inst.gts[img][rng.next_below(inst.gts[img].size())];
                box = Box{gt.x + (rng.next_double() - 0.5) * 20,
                          gt.y + (rng.next_double() - 0.5) * 20,
                          gt.w * (0.7 + 0.6 * rng.next_double()),
                          gt.h * (0.7 + 0.6 * rng.next_double())};
            } else {
                box = Box{rng.next_double() * 80, rng.next_double() * 80,
                          5 + rng.next_double() * 35, 5 + rng.next_double() * 35};
            }
            double score = rng.next_double();
            if (rng.next_double() < 0.5) {
                score = double(int(score * 10)) / 10.0;  // force rank ties
            }
            inst.dets.push_back(Det{img, box, score});
        }
    }
    if (total_gt == 0) return random_instance(rng);
    return inst;
}

// Bridge to the library types.
inline towerforge::dataset::CocoDataset to_dataset(const Instance& inst) {
    towerforge::dataset::CocoDataset ds;
    int max_image = 0;
    for (const auto& [id, boxes] : inst.gts) max_image = id > max_image ? id : max_image;
    for (const auto& det : inst.dets) {
        max_image = det.image_id > max_image ? det.image_id : max_image;
    }
    int ann_id = 1;
    for (int id = 1; id <= max_image; ++id) {
        towerforge::dataset::CocoImage img;
        img.id = id;
        img.file_name = "synth_" + std::to_string(id) + ".jpg";
        img.width = img.height = 512;
        img.geo_center = towerforge::geo::GeoPoint{30.0, -10.0};
        ds.images.push_back(img);
        const auto git = inst.gts.find(id);
        if (git == inst.gts.end()) continue;
        for (const auto& box : git->second) {
            towerforge::dataset::CocoAnnotation ann;
            ann.id = ann_id++;
            ann.image_id = id;
            ann.bbox = towerforge::geo::PixelBox{box.x, box.y, box.w, box.h};
            ann.area = box.w * box.h;
            ds.annotations.push_back(ann);
        }
    }
    return ds;
}

inline std::vector<towerforge::eval::Detection> to_detections(const Instance& inst) {
    std::vector<towerforge::eval::Detection> dets;
    for (const auto& d : inst.dets) {
        towerforge::eval::Detection det;
        det.image_id = d.image_id;
        det.bbox = towerforge::geo::PixelBox{d.box.x, d.box.y, d.box.w, d.box.h};
        det.score = d.score;
        dets.push_back(det);
    }
    return dets;
}

}  // namespace oracle
