#include "towerforge/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "towerforge/errors.hpp"

namespace towerforge::eval {

using nlohmann::json;

std::vector<DetMatch> match_detections(const std::vector<geo::PixelBox>& gts,
                                       const std::vector<Detection>& dets,
                                       double iou_thr) {
    std::vector<std::size_t> order(dets.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return dets[a].score > dets[b].score;  // ties keep ascending index
    });

    std::vector<bool> gt_taken(gts.size(), false);
    std::vector<DetMatch> matches;
    matches.reserve(dets.size());
    for (const std::size_t di : order) {
        int best_gt = -1;
        double best_iou = 0.0;
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            if (gt_taken[gi]) continue;
            const double v = geo::iou(dets[di].bbox, gts[gi]);
            if (v >= iou_thr && v > best_iou) {
                best_iou = v;
                best_gt = int(gi);
            }
        }
        if (best_gt >= 0) gt_taken[std::size_t(best_gt)] = true;
        matches.push_back(DetMatch{di, best_gt});
    }
    return matches;
}

PRCurve pr_curve(std::vector<ScoredDetection> dets, std::size_t n_gt) {
    PRCurve curve;
    curve.n_gt = n_gt;
    if (n_gt == 0) {
        curve.defined = false;
        return curve;
    }
    std::sort(dets.begin(), dets.end(),
              [](const ScoredDetection& a, const ScoredDetection& b) {
                  if (a.score != b.score) return a.score > b.score;
                  return a.input_index < b.input_index;
              });
    std::size_t tp = 0;
    std::size_t fp = 0;
    curve.points.reserve(dets.size());
    for (const auto& d : dets) {
        d.is_tp ? ++tp : ++fp;
        curve.points.emplace_back(double(tp) / double(n_gt),
                                  double(tp) / double(tp + fp));
    }
    return curve;
}

double average_precision(const PRCurve& curve) {
    if (curve.n_gt == 0 || !curve.defined) {
        throw UndefinedAp("average precision undefined: no ground truths");
    }
    if (curve.points.empty()) return 0.0;

    // right-to-left precision envelope: env[i] = max precision from point i on
    const std::size_t n = curve.points.size();
    std::vector<double> env(n);
    double running = 0.0;
    for (std::size_t i = n; i-- > 0;) {
        running = std::max(running, curve.points[i].second);
        env[i] = running;
    }

    double sum = 0.0;
    std::size_t lo = 0;  // first point with recall >= r; recalls non-decreasing
    for (int k = 0; k <= 100; ++k) {
        const double r = double(k) / 100.0;
        while (lo < n && curve.points[lo].first < r) ++lo;
        if (lo < n) sum += env[lo];
    }
    return sum / 101.0;
}

ApReport evaluate(const dataset::CocoDataset& ds, const std::vector<Detection>& dets) {
    std::set<int> image_ids;
    for (const auto& img : ds.images) image_ids.insert(img.id);
    for (const auto& d : dets) {
        if (!image_ids.count(d.image_id)) {
            throw UnknownImageId(
                fmt::format("detection references unknown image id {}", d.image_id));
        }
    }
    if (ds.annotations.empty()) {
        throw UndefinedAp("dataset has no annotations; AP undefined");
    }

    std::map<int, std::vector<geo::PixelBox>> gts_by_image;
    for (const auto& ann : ds.annotations) {
        gts_by_image[ann.image_id].push_back(ann.bbox);
    }
    // detections keep their global input index for deterministic tie-breaks
    std::map<int, std::vector<std::pair<std::size_t, Detection>>> dets_by_image;
    for (std::size_t i = 0; i < dets.size(); ++i) {
        dets_by_image[dets[i].image_id].emplace_back(i, dets[i]);
    }
    const std::size_t n_gt = ds.annotations.size();

    ApReport report;
    for (const int thr_pct : iou_thresholds()) {
        const double thr = double(thr_pct) / 100.0;
        std::vector<ScoredDetection> scored;
        scored.reserve(dets.size());
        for (const auto& [image_id, image_dets] : dets_by_image) {
            static const std::vector<geo::PixelBox> kNoGts;
            const auto git = gts_by_image.find(image_id);
            const auto& gts = git == gts_by_image.end() ? kNoGts : git->second;
            std::vector<Detection> plain;
            plain.reserve(image_dets.size());
            for (const auto& [idx, det] : image_dets) plain.push_back(det);
            for (const auto& m : match_detections(gts, plain, thr)) {
                scored.push_back(ScoredDetection{plain[m.det_index].score,
                                                 image_dets[m.det_index].first,
                                                 m.gt_index >= 0});
            }
        }
        const double ap = average_precision(pr_curve(std::move(scored), n_gt));
        report.per_threshold[thr_pct] = 100.0 * ap;
    }

    double sum = 0.0;
    int count = 0;
    for (const auto& [thr, ap] : report.per_threshold) {
        if (thr >= 50) {
            sum += ap;
            ++count;
        }
    }
    report.ap = sum / count;
    report.ap50 = report.per_threshold.at(50);
    report.ap15 = report.per_threshold.at(15);
    return report;
}

std::string detections_to_json(const std::vector<Detection>& dets) {
    json arr = json::array();
    for (const auto& d : dets) {
        arr.push_back(json{{"image_id", d.image_id},
                           {"category_id", d.category_id},
                           {"bbox", {d.bbox.x, d.bbox.y, d.bbox.w, d.bbox.h}},
                           {"score", d.score}});
    }
    return arr.dump(2) + "\n";
}

std::vector<Detection> detections_from_json(const std::string& json_bytes) {
    json doc;
    try {
        doc = json::parse(json_bytes);
    } catch (const json::parse_error& e) {
        throw MalformedDocument(
            fmt::format("predictions file is not valid JSON: {}", e.what()));
    }
    if (!doc.is_array()) {
        throw MalformedDocument("COCO results must be a top-level array");
    }
    std::vector<Detection> dets;
    dets.reserve(doc.size());
    for (const auto& j : doc) {
        Detection d;
        d.image_id = j.at("image_id").get<int>();
        d.category_id = j.value("category_id", 1);
        const auto& bbox = j.at("bbox");
        d.bbox = geo::PixelBox{bbox.at(0).get<double>(), bbox.at(1).get<double>(),
                               bbox.at(2).get<double>(), bbox.at(3).get<double>()};
        d.score = j.at("score").get<double>();
        if (!(d.score >= 0.0 && d.score <= 1.0)) {
            throw MalformedDocument(
                fmt::format("detection score {} outside [0,1]", d.score));
        }
        dets.push_back(d);
    }
    return dets;
}

std::vector<Detection> load_detections(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure(fmt::format("cannot open {}", path));
    std::ostringstream ss;
    ss << in.rdbuf();
    return detections_from_json(ss.str());
}

void save_detections(const std::vector<Detection>& dets, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure(fmt::format("cannot open {} for writing", path));
    out << detections_to_json(dets);
    if (!out) throw IoFailure(fmt::format("failed writing {}", path));
}

namespace {
double round1(double v) { return std::round(v * 10.0) / 10.0; }
}  // namespace

std::string report_to_json(const ApReport& report) {
    json per_threshold = json::object();
    for (const auto& [thr, ap] : report.per_threshold) {
        per_threshold[fmt::format("0.{:02d}", thr)] = round1(ap);
    }
    const json doc{{"ap", round1(report.ap)},
                   {"ap50", round1(report.ap50)},
                   {"ap15", round1(report.ap15)},
                   {"per_threshold", per_threshold}};
    return doc.dump(2) + "\n";
}

std::string report_to_csv(const ApReport& report) {
    std::string out = "metric,value\n";
    out += fmt::format("ap,{:.1f}\n", report.ap);
    out += fmt::format("ap50,{:.1f}\n", report.ap50);
    out += fmt::format("ap15,{:.1f}\n", report.ap15);
    for (const auto& [thr, ap] : report.per_threshold) {
        out += fmt::format("ap@0.{:02d},{:.1f}\n", thr, ap);
    }
    return out;
}

}  // namespace towerforge::eval
