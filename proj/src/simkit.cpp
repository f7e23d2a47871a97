#include "towerforge/simkit.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "towerforge/errors.hpp"
#include "towerforge/kvconfig.hpp"
#include "towerforge/rng.hpp"

namespace towerforge::simkit {

namespace {

constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
constexpr double kTau = 2.0 * 3.14159265358979323846;

// substream tags
constexpr std::uint64_t kBackgroundTag = 0xB0;
constexpr std::uint64_t kTowerTag = 0x70;
constexpr std::uint64_t kAnnTag = 0xA1;
constexpr std::uint64_t kFpTag = 0xF9;

// Deterministic standard-normal pair (Box-Muller).
std::pair<double, double> normal_pair(SplitMix64& rng) {
    const double u1 = rng.next_double();
    const double u2 = rng.next_double();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));  // log(1-u1), u1 < 1
    return {r * std::cos(kTau * u2), r * std::sin(kTau * u2)};
}

// Kumaraswamy(a,b) via inverse CDF; a > b skews toward 1.
double kumaraswamy(double a, double b, double u) {
    return std::pow(1.0 - std::pow(1.0 - u, 1.0 / b), 1.0 / a);
}

// Knuth's product-of-uniforms sampler; monotone in rate for a fixed stream.
int poisson(double rate, SplitMix64& rng) {
    if (rate <= 0.0) return 0;
    const double limit = std::exp(-rate);
    int k = 0;
    double p = 1.0;
    do {
        ++k;
        p *= rng.next_double();
    } while (p > limit);
    return k - 1;
}

void put_px(raster::RasterImage& r, int x, int y, std::uint8_t v) {
    if (x < 0 || y < 0 || x >= r.width || y >= r.height) return;
    std::uint8_t* p = r.px(x, y);
    p[0] = p[1] = p[2] = v;
}

// Cross with short lattice braces; purely cosmetic, metrics never read pixels.
void draw_tower(raster::RasterImage& r, int cx, int cy) {
    for (int d = -14; d <= 14; ++d) {
        for (int t = -1; t <= 1; ++t) {
            put_px(r, cx + d, cy + t, 235);
            put_px(r, cx + t, cy + d, 235);
        }
    }
    for (int d = 3; d <= 10; ++d) {
        put_px(r, cx + d, cy + d, 180);
        put_px(r, cx - d, cy + d, 180);
        put_px(r, cx + d, cy - d, 180);
        put_px(r, cx - d, cy - d, 180);
    }
    put_px(r, cx, cy, 40);
}

}  // namespace

SynthScene synth_scene(const SceneSpec& spec) {
    if (spec.width < 512 || spec.height < 512) {
        throw ValidationError(fmt::format("scene dimensions must be >= 512, got {}x{}",
                                          spec.width, spec.height));
    }
    if (!(spec.gsd_m > 0.0) || spec.n_towers < 0 || !spec.center.valid() ||
        std::abs(spec.center.lat) >= 89.0) {
        throw ValidationError("invalid scene spec");
    }

    SynthScene scene;
    raster::RasterImage& r = scene.raster;
    r.width = spec.width;
    r.height = spec.height;
    r.scene_id = spec.scene_id;
    // square-meter pixels: x degree size carries the cos(lat) factor
    const double px_y = -spec.gsd_m / geo::kMetersPerDegree;
    const double px_x =
        spec.gsd_m / (geo::kMetersPerDegree * std::cos(spec.center.lat * kDegToRad));
    r.transform.px_size_x = px_x;
    r.transform.px_size_y = px_y;
    r.transform.origin_x = spec.center.lon - 0.5 * (spec.width - 1) * px_x;
    r.transform.origin_y = spec.center.lat - 0.5 * (spec.height - 1) * px_y;

    r.pixels.resize(std::size_t(r.width) * r.height * 3);
    if (spec.background == Background::Flat) {
        for (std::size_t i = 0; i < r.pixels.size(); i += 3) {
            r.pixels[i] = 92;
            r.pixels[i + 1] = 104;
            r.pixels[i + 2] = 88;
        }
    } else {
        SplitMix64 bg(mix_seed(spec.seed, kBackgroundTag));
        for (std::size_t i = 0; i < r.pixels.size(); i += 3) {
            const std::uint64_t bits = bg.next();
            r.pixels[i] = std::uint8_t(80 + (bits & 31));
            r.pixels[i + 1] = std::uint8_t(92 + ((bits >> 8) & 31));
            r.pixels[i + 2] = std::uint8_t(76 + ((bits >> 16) & 31));
        }
    }

    SplitMix64 rng(mix_seed(spec.seed, kTowerTag));
    std::vector<std::pair<int, int>> placed;
    placed.reserve(std::size_t(spec.n_towers));
    for (int k = 0; k < spec.n_towers; ++k) {
        bool ok = false;
        for (int attempt = 0; attempt < 1000 && !ok; ++attempt) {
            const int x = int(rng.next_below(std::uint64_t(spec.width)));
            const int y = int(rng.next_below(std::uint64_t(spec.height)));
            ok = std::all_of(placed.begin(), placed.end(), [&](const auto& p) {
                const double dx = p.first - x;
                const double dy = p.second - y;
                return std::hypot(dx, dy) >= 60.0;
            });
            if (ok) placed.emplace_back(x, y);
        }
        if (!ok) {
            throw PlacementFailure(fmt::format(
                "could not place tower {} of {} after 1000 attempts (scene {}x{})",
                k + 1, spec.n_towers, spec.width, spec.height));
        }
    }

    for (std::size_t k = 0; k < placed.size(); ++k) {
        const auto [x, y] = placed[k];
        draw_tower(r, x, y);
        ingest::TowerFeature f;
        f.id = fmt::format("t{}", k);
        f.point = geo::pixel_to_geo(r.transform, x, y);
        f.tags = {{"man_made", "tower"}};
        scene.features.push_back(std::move(f));
    }
    return scene;
}

std::vector<eval::Detection> mock_detect(const dataset::CocoDataset& ds,
                                         const NoiseModel& noise) {
    std::map<int, std::vector<const dataset::CocoAnnotation*>> anns_by_image;
    for (const auto& ann : ds.annotations) {
        anns_by_image[ann.image_id].push_back(&ann);
    }

    std::vector<eval::Detection> dets;
    for (const auto& img : ds.images) {
        const auto it = anns_by_image.find(img.id);
        if (it != anns_by_image.end()) {
            std::uint64_t ordinal = 0;
            for (const auto* ann : it->second) {
                SplitMix64 rng(mix_seed(
                    mix_seed(mix_seed(noise.seed, kAnnTag), std::uint64_t(img.id)),
                    ordinal++));
                if (rng.next_double() < noise.miss_rate) continue;
                const auto [z1, z2] = normal_pair(rng);
                const double u_size = rng.next_double();
                const double u_score = rng.next_double();

                const double cx = ann->bbox.cx() + noise.loc_sigma_px * z1;
                const double cy = ann->bbox.cy() + noise.loc_sigma_px * z2;
                const double s =
                    std::max(0.05, 1.0 + noise.size_jitter * (2.0 * u_size - 1.0));
                const double w = ann->bbox.w * s;
                const double h = ann->bbox.h * s;
                eval::Detection d;
                d.image_id = img.id;
                d.bbox = geo::PixelBox{cx - 0.5 * w, cy - 0.5 * h, w, h};
                d.score = kumaraswamy(noise.score_tp_a, noise.score_tp_b, u_score);
                dets.push_back(d);
            }
        }

        const std::uint64_t fp_seed =
            mix_seed(mix_seed(noise.seed, kFpTag), std::uint64_t(img.id));
        SplitMix64 count_rng(fp_seed);
        const int n_fp = poisson(noise.fp_per_image, count_rng);
        for (int k = 0; k < n_fp; ++k) {
            // per-index substream: raising the rate appends boxes without
            // changing the ones already drawn
            SplitMix64 rng(mix_seed(fp_seed, std::uint64_t(k) + 1));
            const double w = 10.0 + 50.0 * rng.next_double();
            const double h = 10.0 + 50.0 * rng.next_double();
            const double cx = rng.next_double() * std::max(1, img.width);
            const double cy = rng.next_double() * std::max(1, img.height);
            eval::Detection d;
            d.image_id = img.id;
            d.bbox = geo::PixelBox{cx - 0.5 * w, cy - 0.5 * h, w, h};
            d.score = kumaraswamy(noise.score_fp_a, noise.score_fp_b, rng.next_double());
            dets.push_back(d);
        }
    }
    return dets;
}

std::vector<MatrixResult> run_matrix(
    const dataset::ExperimentMatrix& matrix,
    const std::map<std::string, dataset::CocoDataset>& strata,
    const NoiseModel& noise, double oos_factor) {
    if (!(oos_factor >= 1.0)) {
        throw ValidationError(
            fmt::format("out-of-sample factor must be >= 1, got {}", oos_factor));
    }
    std::vector<MatrixResult> results;
    results.reserve(matrix.cells.size());
    for (const auto& cell : matrix.cells) {
        const auto eval_it = strata.find(cell.eval_selector);
        if (eval_it == strata.end()) {
            throw UnknownSelector(
                fmt::format("eval selector '{}' not in strata", cell.eval_selector));
        }
        if (cell.train_selector != "all" && !strata.count(cell.train_selector)) {
            throw UnknownSelector(
                fmt::format("train selector '{}' not in strata", cell.train_selector));
        }
        const bool in_sample = cell.train_selector == "all" ||
                               cell.train_selector == cell.eval_selector;
        const double f = in_sample ? 1.0 : oos_factor;

        NoiseModel cell_noise = noise;
        cell_noise.loc_sigma_px *= f;
        cell_noise.size_jitter = std::min(1.0, cell_noise.size_jitter * f);
        cell_noise.miss_rate = std::min(1.0, cell_noise.miss_rate * f);
        // stream keyed by the eval stratum only: in- and out-of-sample cells
        // share draws, differing purely in noise magnitude
        cell_noise.seed = mix_seed(noise.seed, hash64(cell.eval_selector));

        const auto dets = mock_detect(eval_it->second, cell_noise);
        results.push_back(MatrixResult{cell.train_selector, cell.eval_selector,
                                       eval::evaluate(eval_it->second, dets)});
    }
    return results;
}

std::string matrix_to_csv(const std::vector<MatrixResult>& results) {
    std::string out = "train,eval,ap,ap50,ap15\n";
    for (const auto& r : results) {
        out += fmt::format("{},{},{:.1f},{:.1f},{:.1f}\n", r.train_selector,
                           r.eval_selector, r.report.ap, r.report.ap50,
                           r.report.ap15);
    }
    return out;
}

SceneSpec scene_spec_from_kv(const std::map<std::string, std::string>& kv) {
    SceneSpec spec;
    spec.width = int(kv_int(kv, "width", spec.width));
    spec.height = int(kv_int(kv, "height", spec.height));
    spec.gsd_m = kv_double(kv, "gsd_m", spec.gsd_m);
    spec.center.lon = kv_double(kv, "center_lon", spec.center.lon);
    spec.center.lat = kv_double(kv, "center_lat", spec.center.lat);
    spec.n_towers = int(kv_int(kv, "n_towers", spec.n_towers));
    const std::string bg = kv_string(kv, "background", "flat");
    if (bg == "flat") {
        spec.background = Background::Flat;
    } else if (bg == "speckle") {
        spec.background = Background::Speckle;
    } else {
        throw ValidationError(fmt::format("background must be flat|speckle, got '{}'", bg));
    }
    spec.seed = std::uint64_t(kv_int(kv, "seed", int64_t(spec.seed)));
    spec.scene_id = kv_string(kv, "scene_id", spec.scene_id);
    return spec;
}

NoiseModel noise_model_from_kv(const std::map<std::string, std::string>& kv) {
    NoiseModel noise;
    noise.loc_sigma_px = kv_double(kv, "loc_sigma_px", noise.loc_sigma_px);
    noise.size_jitter = kv_double(kv, "size_jitter", noise.size_jitter);
    noise.miss_rate = kv_double(kv, "miss_rate", noise.miss_rate);
    noise.fp_per_image = kv_double(kv, "fp_per_image", noise.fp_per_image);
    noise.score_tp_a = kv_double(kv, "score_tp_a", noise.score_tp_a);
    noise.score_tp_b = kv_double(kv, "score_tp_b", noise.score_tp_b);
    noise.score_fp_a = kv_double(kv, "score_fp_a", noise.score_fp_a);
    noise.score_fp_b = kv_double(kv, "score_fp_b", noise.score_fp_b);
    if (noise.miss_rate < 0.0 || noise.miss_rate > 1.0 || noise.loc_sigma_px < 0.0 ||
        noise.size_jitter < 0.0 || noise.fp_per_image < 0.0) {
        throw ValidationError("noise model out of range");
    }
    noise.seed = std::uint64_t(kv_int(kv, "seed", int64_t(noise.seed)));
    return noise;
}

}  // namespace towerforge::simkit
