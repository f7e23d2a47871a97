#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "towerforge/dataset.hpp"
#include "towerforge/errors.hpp"
#include "towerforge/eval.hpp"
#include "towerforge/geo.hpp"
#include "towerforge/ingest.hpp"
#include "towerforge/kvconfig.hpp"
#include "towerforge/log.hpp"
#include "towerforge/raster.hpp"
#include "towerforge/simkit.hpp"

namespace fs = std::filesystem;
using namespace towerforge;

namespace {

// current pipeline stage, reported in error messages ("chip/validate" etc.)
std::string g_stage = "cli";

void set_stage(const std::string& stage) { g_stage = stage; }

geo::GeoBox parse_bbox(const std::string& text) {
    std::vector<double> v;
    std::string token;
    std::istringstream ss(text);
    while (std::getline(ss, token, ',')) v.push_back(std::stod(token));
    if (v.size() != 4) {
        throw ValidationError(
            fmt::format("--bbox expects minlon,minlat,maxlon,maxlat, got '{}'", text));
    }
    const geo::GeoBox box{v[0], v[1], v[2], v[3]};
    if (!box.valid()) {
        throw ValidationError(fmt::format("--bbox is degenerate: '{}'", text));
    }
    return box;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure(fmt::format("cannot open {} for writing", path));
    out << text;
    if (!out) throw IoFailure(fmt::format("failed writing {}", path));
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoFailure(fmt::format("cannot create directory {}: {}", dir, ec.message()));
}

std::vector<dataset::RegionBand> bands_for_axis(const std::string& axis) {
    std::vector<dataset::RegionBand> bands;
    for (const auto& b : dataset::default_bands()) {
        if (axis == "both" ||
            (axis == "lat" && b.axis == dataset::Axis::Latitude) ||
            (axis == "lon" && b.axis == dataset::Axis::Longitude)) {
            bands.push_back(b);
        }
    }
    return bands;
}

// ingest: parse -> region filter -> urban exclusion -> dedupe -> write
struct IngestArgs {
    std::string osm_path;
    std::string urban_mask_path;
    std::string bbox;
    std::string out_path;
    std::vector<std::string> extra_tags;
    double min_sep_m = 10.0;
};

int run_ingest(const IngestArgs& args) {
    set_stage("ingest/parse");
    ingest::TagPredicate extra;
    for (const auto& pair : args.extra_tags) {
        const auto eq = pair.find('=');
        if (eq == std::string::npos) {
            throw ValidationError(
                fmt::format("--extra-tag expects key=value, got '{}'", pair));
        }
        extra.emplace_back(pair.substr(0, eq), pair.substr(eq + 1));
    }
    const ingest::ParseResult parsed = ingest::load_features(args.osm_path, extra);
    fmt::print("parse     kept {}  (tag-filtered {}, non-point {}, invalid {})\n",
               parsed.features.size(), parsed.dropped_tag, parsed.dropped_non_point,
               parsed.dropped_invalid);

    set_stage("ingest/region");
    ingest::StudyRegion region;
    if (!args.bbox.empty()) region.box = parse_bbox(args.bbox);
    const auto in_region = ingest::filter_study_region(parsed.features, region);
    fmt::print("region    kept {}  (outside {})\n", in_region.size(),
               parsed.features.size() - in_region.size());

    set_stage("ingest/urban");
    std::vector<ingest::TowerFeature> rural;
    if (args.urban_mask_path.empty()) {
        rural = in_region;
        fmt::print("urban     skipped (no --urban-mask)\n");
    } else {
        const ingest::UrbanMask mask = ingest::load_urban_mask(args.urban_mask_path);
        auto excluded = ingest::exclude_urban(in_region, mask);
        fmt::print("urban     kept {}  (removed {})\n", excluded.kept.size(),
                   excluded.removed);
        rural = std::move(excluded.kept);
    }

    set_stage("ingest/dedupe");
    const auto deduped = ingest::dedupe(rural, args.min_sep_m);
    fmt::print("dedupe    kept {}  (dropped {})\n", deduped.size(),
               rural.size() - deduped.size());

    set_stage("ingest/write");
    ingest::save_features(deduped, args.out_path);
    fmt::print("wrote {}\n", args.out_path);
    return 0;
}

struct ChipArgs {
    std::vector<std::string> raster_paths;
    std::string features_path;
    std::string out_dir;
    double radius_m = 25.0;
    double gsd_m = 0.5;
    int chip_px = 512;
    std::uint64_t seed = 42;
    bool include_negatives = false;
    bool all_chips = false;
};

int run_chip(const ChipArgs& args) {
    set_stage("chip/validate");
    raster::validate_buffer(args.radius_m, args.gsd_m, args.chip_px);

    set_stage("chip/features");
    const auto parsed = ingest::load_features(args.features_path);
    set_stage("chip/out");
    ensure_dir(args.out_dir);

    raster::ChipPlan plan;
    std::size_t dropped_boxes = 0;
    for (const auto& path : args.raster_paths) {
        set_stage("chip/load");
        raster::RasterImage scene = raster::load_raster(path);
        set_stage("chip/resample");
        scene = raster::resample_to_gsd(scene, args.gsd_m);

        set_stage("chip/buffer");
        std::vector<geo::PixelBox> boxes;
        for (const auto& f : parsed.features) {
            const geo::GeoBox gb = geo::buffer_point(f.point, args.radius_m);
            boxes.push_back(geo::geobox_to_pixelbox(scene.transform, gb));
        }

        set_stage("chip/grid");
        const auto windows = raster::chip_grid(scene, args.chip_px);
        auto assigned =
            raster::assign_annotations(scene, windows, boxes, args.chip_px);
        dropped_boxes += assigned.dropped;
        log::info("scene {}: {} windows, {} boxes dropped", scene.scene_id,
                  windows.size(), assigned.dropped);

        set_stage("chip/select");
        if (args.all_chips) {
            for (auto& c : assigned.chips) {
                (c.positive() ? plan.positives : plan.negatives).push_back(std::move(c));
            }
        } else {
            auto selected = raster::select_samples(assigned.chips, args.seed);
            std::move(selected.positives.begin(), selected.positives.end(),
                      std::back_inserter(plan.positives));
            std::move(selected.negatives.begin(), selected.negatives.end(),
                      std::back_inserter(plan.negatives));
        }
    }

    set_stage("chip/write");
    for (const auto& c : plan.positives) raster::write_chip(c, args.out_dir);
    for (const auto& c : plan.negatives) raster::write_chip(c, args.out_dir);
    const dataset::CocoDataset ds = dataset::to_coco(plan, args.include_negatives);
    const std::string coco_path = (fs::path(args.out_dir) / "coco.json").string();
    dataset::save_coco(ds, coco_path);

    std::size_t n_annotations = 0;
    for (const auto& c : plan.positives) n_annotations += c.annotations.size();
    fmt::print("Samples      Positive  Negative  Total\n");
    fmt::print("Chips        {:>8}  {:>8}  {:>5}\n", plan.positives.size(),
               plan.negatives.size(), plan.positives.size() + plan.negatives.size());
    fmt::print("Annotations  {:>8}  {:>8}  {:>5}\n", n_annotations, 0, n_annotations);
    if (dropped_boxes > 0) {
        fmt::print("boxes outside full windows: {}\n", dropped_boxes);
    }
    fmt::print("wrote {}\n", coco_path);
    return 0;
}

struct SplitArgs {
    std::string coco_path;
    std::string out_dir;
    double train_fraction = 0.8;
    std::uint64_t seed = 42;
};

int run_split(const SplitArgs& args) {
    set_stage("split/read");
    const auto ds = dataset::load_coco(args.coco_path);
    set_stage("split/split");
    const auto result = dataset::split_train_test(ds, args.train_fraction, args.seed);
    set_stage("split/write");
    ensure_dir(args.out_dir);
    const std::string train_path = (fs::path(args.out_dir) / "train.json").string();
    const std::string test_path = (fs::path(args.out_dir) / "test.json").string();
    dataset::save_coco(result.train, train_path);
    dataset::save_coco(result.test, test_path);
    fmt::print("train {} images / {} annotations -> {}\n", result.train.images.size(),
               result.train.annotations.size(), train_path);
    fmt::print("test  {} images / {} annotations -> {}\n", result.test.images.size(),
               result.test.annotations.size(), test_path);
    return 0;
}

struct StratifyArgs {
    std::string coco_path;
    std::string out_dir;
    std::string axis = "both";
};

int run_stratify(const StratifyArgs& args) {
    set_stage("stratify/read");
    const auto ds = dataset::load_coco(args.coco_path);
    set_stage("stratify/assign");
    const auto bands = bands_for_axis(args.axis);
    const auto result = dataset::stratify(ds, bands);

    set_stage("stratify/write");
    ensure_dir(args.out_dir);
    std::map<int, std::string> lat_assignment;
    std::map<int, std::string> lon_assignment;
    for (const auto& [name, subset] : result.by_band) {
        const std::string path = (fs::path(args.out_dir) / (name + ".json")).string();
        dataset::save_coco(subset, path);
        fmt::print("{:<11} {:>6} images {:>6} annotations -> {}\n", name,
                   subset.images.size(), subset.annotations.size(), path);
        const bool is_lat = name.rfind("lat_", 0) == 0;
        for (const auto& img : subset.images) {
            (is_lat ? lat_assignment : lon_assignment)[img.id] = name;
        }
    }
    std::string csv = "image_id,lat_band,lon_band\n";
    for (const auto& img : ds.images) {
        const auto lat_it = lat_assignment.find(img.id);
        const auto lon_it = lon_assignment.find(img.id);
        csv += fmt::format("{},{},{}\n", img.id,
                           lat_it == lat_assignment.end() ? "" : lat_it->second,
                           lon_it == lon_assignment.end() ? "" : lon_it->second);
    }
    const std::string csv_path = (fs::path(args.out_dir) / "assignments.csv").string();
    write_text(csv_path, csv);
    for (const auto& [axis, ids] : result.out_of_band) {
        fmt::print("out-of-band ({}): {} images\n", dataset::axis_name(axis),
                   ids.size());
    }
    fmt::print("wrote {}\n", csv_path);
    return 0;
}

struct SimulateArgs {
    std::string coco_path;
    std::string noise_path;
    std::string out_path;
    std::int64_t seed = -1;  // <0: keep the config file's seed
};

simkit::NoiseModel load_noise(const std::string& path, std::int64_t seed_override) {
    simkit::NoiseModel noise;
    if (!path.empty()) noise = simkit::noise_model_from_kv(load_kv(path));
    if (seed_override >= 0) noise.seed = std::uint64_t(seed_override);
    return noise;
}

int run_simulate(const SimulateArgs& args) {
    set_stage("simulate/read");
    const auto ds = dataset::load_coco(args.coco_path);
    set_stage("simulate/noise");
    const auto noise = load_noise(args.noise_path, args.seed);
    set_stage("simulate/detect");
    const auto dets = simkit::mock_detect(ds, noise);
    set_stage("simulate/write");
    eval::save_detections(dets, args.out_path);
    fmt::print("{} detections over {} images -> {}\n", dets.size(),
               ds.images.size(), args.out_path);
    return 0;
}

struct EvaluateArgs {
    std::string coco_path;
    std::string predictions_path;
    std::string out_path;
    std::string csv_path;
};

int run_evaluate(const EvaluateArgs& args) {
    set_stage("evaluate/read");
    const auto ds = dataset::load_coco(args.coco_path);
    const auto dets = eval::load_detections(args.predictions_path);
    set_stage("evaluate/metrics");
    const auto report = eval::evaluate(ds, dets);
    set_stage("evaluate/write");
    if (!args.out_path.empty()) write_text(args.out_path, eval::report_to_json(report));
    if (!args.csv_path.empty()) write_text(args.csv_path, eval::report_to_csv(report));
    fmt::print("ap {:.1f}  ap50 {:.1f}  ap15 {:.1f}\n", report.ap, report.ap50,
               report.ap15);
    return 0;
}

struct ReportArgs {
    std::string coco_path;
    std::string noise_path;
    std::string out_path;
    std::string axis = "lat";
    double oos_factor = 1.5;
    std::int64_t seed = -1;
    bool no_baseline = false;
};

int run_report(const ReportArgs& args) {
    set_stage("report/read");
    const auto ds = dataset::load_coco(args.coco_path);
    set_stage("report/stratify");
    const auto bands = bands_for_axis(args.axis);
    const auto strata = dataset::stratify(ds, bands);
    for (const auto& [name, subset] : strata.by_band) {
        if (subset.annotations.empty()) {
            throw ValidationError(fmt::format(
                "band {} has no annotations; cannot run the experiment matrix", name));
        }
    }
    set_stage("report/matrix");
    const auto matrix = dataset::build_matrix(bands, !args.no_baseline);
    const auto noise = load_noise(args.noise_path, args.seed);
    const auto results = simkit::run_matrix(matrix, strata.by_band, noise, args.oos_factor);
    set_stage("report/write");
    write_text(args.out_path, simkit::matrix_to_csv(results));
    fmt::print("{} matrix cells -> {}\n", results.size(), args.out_path);
    return 0;
}

struct SynthArgs {
    std::string scene_path;
    std::string out_dir;
    std::int64_t seed = -1;
    std::int64_t n_towers = -1;
    std::string scene_id;
};

int run_synth(const SynthArgs& args) {
    set_stage("synth/spec");
    simkit::SceneSpec spec;
    if (!args.scene_path.empty()) spec = simkit::scene_spec_from_kv(load_kv(args.scene_path));
    if (args.seed >= 0) spec.seed = std::uint64_t(args.seed);
    if (args.n_towers >= 0) spec.n_towers = int(args.n_towers);
    if (!args.scene_id.empty()) spec.scene_id = args.scene_id;
    set_stage("synth/render");
    const auto scene = simkit::synth_scene(spec);
    set_stage("synth/write");
    ensure_dir(args.out_dir);
    const std::string png =
        (fs::path(args.out_dir) / (spec.scene_id + ".png")).string();
    raster::save_raster_png(scene.raster, png);
    const std::string features_path =
        (fs::path(args.out_dir) / (spec.scene_id + "_features.geojson")).string();
    ingest::save_features(scene.features, features_path);
    fmt::print("{}x{} scene with {} towers -> {}, {}\n", spec.width, spec.height,
               scene.features.size(), png, features_path);
    return 0;
}

struct EmitConfigArgs {
    std::string variant;
    std::string out_path;
};

int run_emit_config(const EmitConfigArgs& args) {
    set_stage("emit-config");
    const std::string text = dataset::emit_training_config(args.variant);
    if (args.out_path.empty()) {
        fmt::print("{}", text);
    } else {
        write_text(args.out_path, text);
        fmt::print("wrote {}\n", args.out_path);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"towerforge: cell-tower dataset pipeline and detection evaluator"};
    app.require_subcommand(1);

    IngestArgs ingest_args;
    auto* ingest_cmd = app.add_subcommand(
        "ingest", "Filter OSM tower features (tags, study region, urban mask, dedupe)");
    ingest_cmd->add_option("--osm", ingest_args.osm_path, "GeoJSON FeatureCollection")
        ->required();
    ingest_cmd->add_option("--urban-mask", ingest_args.urban_mask_path,
                           "Urban polygons GeoJSON; omit to skip urban exclusion");
    ingest_cmd->add_option("--bbox", ingest_args.bbox,
                           "Study region minlon,minlat,maxlon,maxlat");
    ingest_cmd->add_option("--extra-tag", ingest_args.extra_tags,
                           "Additional key=value tag each feature must carry");
    ingest_cmd->add_option("--min-sep-m", ingest_args.min_sep_m,
                           "Duplicate separation threshold, meters");
    ingest_cmd->add_option("--out", ingest_args.out_path, "Filtered GeoJSON path")
        ->required();
    ingest_cmd->set_config("--config");

    ChipArgs chip_args;
    auto* chip_cmd = app.add_subcommand(
        "chip", "Cut rasters into 512x512 chips with buffered box annotations");
    chip_cmd->add_option("--raster", chip_args.raster_paths,
                         "Scene image(s) with world-file sidecars")
        ->required();
    chip_cmd->add_option("--features", chip_args.features_path, "Tower GeoJSON")
        ->required();
    chip_cmd->add_option("--radius-m", chip_args.radius_m, "Point buffer radius");
    chip_cmd->add_option("--gsd-m", chip_args.gsd_m, "Target ground sample distance");
    chip_cmd->add_option("--chip-px", chip_args.chip_px, "Chip edge length, pixels");
    chip_cmd->add_option("--seed", chip_args.seed, "Sample-selection seed");
    chip_cmd->add_flag("--include-negatives", chip_args.include_negatives,
                       "Keep negative chips as images in the COCO output");
    chip_cmd->add_flag("--all-chips", chip_args.all_chips,
                       "Keep every chip instead of one positive + one negative per scene");
    chip_cmd->add_option("--out", chip_args.out_dir, "Output directory")->required();
    chip_cmd->set_config("--config");

    SplitArgs split_args;
    auto* split_cmd = app.add_subcommand("split", "Seeded train/test split of a COCO file");
    split_cmd->add_option("--coco", split_args.coco_path, "COCO dataset")->required();
    split_cmd->add_option("--train-fraction", split_args.train_fraction,
                          "Train share in (0,1)");
    split_cmd->add_option("--seed", split_args.seed, "Shuffle seed");
    split_cmd->add_option("--out", split_args.out_dir, "Output directory")->required();
    split_cmd->set_config("--config");

    StratifyArgs stratify_args;
    auto* stratify_cmd =
        app.add_subcommand("stratify", "Assign images to geographic bands");
    stratify_cmd->add_option("--coco", stratify_args.coco_path, "COCO dataset")
        ->required();
    stratify_cmd
        ->add_option("--bands", stratify_args.axis, "Axis to stratify: lat, lon, or both")
        ->check(CLI::IsMember({"lat", "lon", "both"}));
    stratify_cmd->add_option("--out", stratify_args.out_dir, "Output directory")
        ->required();

    SimulateArgs simulate_args;
    auto* simulate_cmd =
        app.add_subcommand("simulate", "Mock-detect over a COCO dataset");
    simulate_cmd->add_option("--coco", simulate_args.coco_path, "COCO dataset")
        ->required();
    simulate_cmd->add_option("--noise", simulate_args.noise_path,
                             "Noise model config (key = value)");
    simulate_cmd->add_option("--seed", simulate_args.seed, "Noise seed override");
    simulate_cmd->add_option("--out", simulate_args.out_path, "Predictions JSON path")
        ->required();

    EvaluateArgs evaluate_args;
    auto* evaluate_cmd =
        app.add_subcommand("evaluate", "AP / AP@50 / AP@15 against ground truth");
    evaluate_cmd->add_option("--coco", evaluate_args.coco_path, "COCO dataset")
        ->required();
    evaluate_cmd
        ->add_option("--predictions", evaluate_args.predictions_path,
                     "COCO results JSON")
        ->required();
    evaluate_cmd->add_option("--out", evaluate_args.out_path, "Report JSON path");
    evaluate_cmd->add_option("--csv", evaluate_args.csv_path, "Report CSV path");

    ReportArgs report_args;
    auto* report_cmd = app.add_subcommand(
        "report", "Train-band x eval-band experiment matrix with mock detection");
    report_cmd->add_option("--coco", report_args.coco_path, "COCO dataset")->required();
    report_cmd->add_option("--bands", report_args.axis, "Axis: lat or lon")
        ->check(CLI::IsMember({"lat", "lon"}));
    report_cmd->add_option("--noise", report_args.noise_path, "Noise model config");
    report_cmd->add_option("--oos-factor", report_args.oos_factor,
                           "Out-of-sample noise degradation factor (>= 1)");
    report_cmd->add_option("--seed", report_args.seed, "Noise seed override");
    report_cmd->add_flag("--no-baseline", report_args.no_baseline,
                         "Skip the train-on-all baseline rows");
    report_cmd->add_option("--out", report_args.out_path, "Matrix CSV path")->required();

    SynthArgs synth_args;
    auto* synth_cmd =
        app.add_subcommand("synth", "Render a synthetic georeferenced scene");
    synth_cmd->add_option("--scene", synth_args.scene_path,
                          "Scene spec config (key = value)");
    synth_cmd->add_option("--seed", synth_args.seed, "Scene seed override");
    synth_cmd->add_option("--n-towers", synth_args.n_towers, "Tower count override");
    synth_cmd->add_option("--scene-id", synth_args.scene_id, "Scene id override");
    synth_cmd->add_option("--out", synth_args.out_dir, "Output directory")->required();

    EmitConfigArgs emit_args;
    auto* emit_cmd = app.add_subcommand("emit-config",
                                        "Print a training configuration variant");
    emit_cmd
        ->add_option("--variant", emit_args.variant,
                     "RN50-HPT, RN50-RI, RN50-INT, or RN101-INT")
        ->required();
    emit_cmd->add_option("--out", emit_args.out_path, "Config file path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (ingest_cmd->parsed()) return run_ingest(ingest_args);
        if (chip_cmd->parsed()) return run_chip(chip_args);
        if (split_cmd->parsed()) return run_split(split_args);
        if (stratify_cmd->parsed()) return run_stratify(stratify_args);
        if (simulate_cmd->parsed()) return run_simulate(simulate_args);
        if (evaluate_cmd->parsed()) return run_evaluate(evaluate_args);
        if (report_cmd->parsed()) return run_report(report_args);
        if (synth_cmd->parsed()) return run_synth(synth_args);
        if (emit_cmd->parsed()) return run_emit_config(emit_args);
    } catch (const ValidationError& e) {
        std::fprintf(stderr, "towerforge: %s: %s\n", g_stage.c_str(), e.what());
        return 2;
    } catch (const IoError& e) {
        std::fprintf(stderr, "towerforge: %s: %s\n", g_stage.c_str(), e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "towerforge: %s: unexpected error: %s\n", g_stage.c_str(),
                     e.what());
        return 1;
    }
    return 0;
}
