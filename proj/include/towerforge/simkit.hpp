#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "towerforge/dataset.hpp"
#include "towerforge/eval.hpp"
#include "towerforge/ingest.hpp"
#include "towerforge/raster.hpp"

namespace towerforge::simkit {

enum class Background { Flat, Speckle };

// Stand-in for a satellite scene: dimensions, GSD, geodetic placement, and
// how many towers to scatter.
struct SceneSpec {
    int width = 4096;
    int height = 4096;
    double gsd_m = 0.5;
    geo::GeoPoint center{30.0, -10.0};
    int n_towers = 20;
    Background background = Background::Flat;
    std::uint64_t seed = 42;
    std::string scene_id = "scene";
};

// Detector noise process. Score distributions are Kumaraswamy(a, b)
// (inverse-CDF sampled, so fully deterministic); a > b favors high scores.
struct NoiseModel {
    double loc_sigma_px = 0.0;   // Gaussian center jitter per axis
    double size_jitter = 0.0;    // width/height scaled by 1 + U(-j, j)
    double miss_rate = 0.0;      // per-annotation drop probability
    double fp_per_image = 0.0;   // Poisson rate of spurious boxes
    double score_tp_a = 6.0;
    double score_tp_b = 2.0;
    double score_fp_a = 1.5;
    double score_fp_b = 5.0;
    std::uint64_t seed = 42;
};

struct SynthScene {
    raster::RasterImage raster;
    std::vector<ingest::TowerFeature> features;
};

struct MatrixResult {
    std::string train_selector;
    std::string eval_selector;
    eval::ApReport report;
};

// Scatter n_towers points uniformly at random, at least 60 px apart (up to
// 1000 placement retries per tower, then PlacementFailure), render a cross
// glyph per tower, and return the georeferenced features. Pixels are
// square in meters: the x degree size carries the cos(lat) factor.
SynthScene synth_scene(const SceneSpec& spec);

// Perturb ground truth into predictions. Per annotation: miss with
// probability miss_rate, else jitter center by N(0, sigma^2) per axis, scale
// size by 1 + U(-j, j), score ~ score_tp. Per image adds Poisson(fp_per_image)
// uniform boxes scored from score_fp. Every annotation/image draws from its
// own derived substream, so results are independent of evaluation order.
std::vector<eval::Detection> mock_detect(const dataset::CocoDataset& ds,
                                         const NoiseModel& noise);

// Run mock detection + evaluation over every matrix cell. In-sample cells
// (train == eval) and "all" baseline rows use `noise` as-is; out-of-sample
// cells scale loc_sigma_px, size_jitter, and miss_rate by oos_factor. The
// per-cell RNG stream depends only on the eval selector, so an out-of-sample
// cell sees the same draws as its in-sample counterpart with amplified
// noise. Throws UnknownSelector for unresolvable cells.
std::vector<MatrixResult> run_matrix(const dataset::ExperimentMatrix& matrix,
                                     const std::map<std::string, dataset::CocoDataset>& strata,
                                     const NoiseModel& noise, double oos_factor);

// CSV with header train,eval,ap,ap50,ap15 (values x100, 1 decimal).
std::string matrix_to_csv(const std::vector<MatrixResult>& results);

// Key-value config bindings (missing keys keep defaults).
SceneSpec scene_spec_from_kv(const std::map<std::string, std::string>& kv);
NoiseModel noise_model_from_kv(const std::map<std::string, std::string>& kv);

}  // namespace towerforge::simkit
