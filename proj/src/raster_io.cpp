#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "towerforge/errors.hpp"
#include "towerforge/raster.hpp"

namespace towerforge::raster {

namespace fs = std::filesystem;

namespace {

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double parse_double(const std::string& s, const char* what) {
    const char* begin = s.data();
    const char* end = s.data() + s.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    double v = 0.0;
    const auto res = std::from_chars(begin, end, v);
    if (res.ec != std::errc{}) {
        throw MalformedDocument(fmt::format("world file: bad {} value '{}'", what, s));
    }
    return v;
}

fs::path world_file_path(const fs::path& image_path) {
    std::string ext = image_path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    std::string sidecar;
    if (ext == ".png") sidecar = ".pgw";
    else if (ext == ".jpg" || ext == ".jpeg") sidecar = ".jgw";
    else if (ext == ".tif" || ext == ".tiff") sidecar = ".tfw";
    if (!sidecar.empty()) {
        fs::path p = image_path;
        p.replace_extension(sidecar);
        if (fs::exists(p)) return p;
    }
    fs::path wld = image_path;
    wld.replace_extension(".wld");
    if (fs::exists(wld)) return wld;
    throw IoFailure(fmt::format("no world file next to {}", image_path.string()));
}

std::string read_text(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoFailure(fmt::format("cannot open {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_binary(const fs::path& path, const void* data, std::size_t size) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoFailure(fmt::format("cannot open {} for writing", path.string()));
    out.write(static_cast<const char*>(data), std::streamsize(size));
    if (!out) throw IoFailure(fmt::format("failed writing {}", path.string()));
}

cv::Mat to_bgr_mat(const RasterImage& r) {
    cv::Mat rgb(r.height, r.width, CV_8UC3,
                const_cast<std::uint8_t*>(r.pixels.data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    return bgr;
}

}  // namespace

std::string format_world_file(const geo::GeoTransform& gt) {
    return fmt::format("{}\n0\n0\n{}\n{}\n{}\n",
                       format_double(gt.px_size_x), format_double(gt.px_size_y),
                       format_double(gt.origin_x), format_double(gt.origin_y));
}

geo::GeoTransform parse_world_file(const std::string& text) {
    std::istringstream ss(text);
    std::vector<std::string> lines;
    for (std::string line; std::getline(ss, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) lines.push_back(line);
    }
    if (lines.size() < 6) {
        throw MalformedDocument(
            fmt::format("world file has {} lines, need 6", lines.size()));
    }
    const double px_x = parse_double(lines[0], "px_size_x");
    const double rot1 = parse_double(lines[1], "rotation");
    const double rot2 = parse_double(lines[2], "rotation");
    const double px_y = parse_double(lines[3], "px_size_y");
    const double ox = parse_double(lines[4], "origin_x");
    const double oy = parse_double(lines[5], "origin_y");
    if (rot1 != 0.0 || rot2 != 0.0) {
        throw MalformedDocument("rotated rasters are not supported (north-up only)");
    }
    const geo::GeoTransform gt{ox, oy, px_x, px_y};
    if (!gt.valid()) {
        throw MalformedDocument(
            fmt::format("invalid world file transform: px_size=({}, {})", px_x, px_y));
    }
    return gt;
}

RasterImage load_raster(const std::string& image_path) {
    const fs::path path(image_path);
    cv::Mat bgr = cv::imread(image_path, cv::IMREAD_COLOR);
    if (bgr.empty()) {
        throw IoFailure(fmt::format("cannot decode image {}", image_path));
    }
    RasterImage r;
    r.width = bgr.cols;
    r.height = bgr.rows;
    r.pixels.resize(std::size_t(r.width) * r.height * 3);
    cv::Mat rgb(r.height, r.width, CV_8UC3, r.pixels.data());
    cv::cvtColor(bgr, rgb, cv::COLOR_BGR2RGB);

    r.transform = parse_world_file(read_text(world_file_path(path)));

    r.scene_id = path.stem().string();
    fs::path meta = path;
    meta.replace_extension(".meta");
    if (fs::exists(meta)) {
        std::istringstream ss(read_text(meta));
        for (std::string line; std::getline(ss, line);) {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            if (line.substr(0, eq) == "scene_id") {
                std::string v = line.substr(eq + 1);
                if (!v.empty() && v.back() == '\r') v.pop_back();
                if (!v.empty()) r.scene_id = v;
            }
        }
    }
    return r;
}

void save_raster_png(const RasterImage& r, const std::string& image_path) {
    std::vector<unsigned char> buf;
    if (!cv::imencode(".png", to_bgr_mat(r), buf)) {
        throw IoFailure(fmt::format("PNG encode failed for {}", image_path));
    }
    const fs::path path(image_path);
    write_binary(path, buf.data(), buf.size());

    fs::path wld = path;
    wld.replace_extension(".pgw");
    const std::string world = format_world_file(r.transform);
    write_binary(wld, world.data(), world.size());

    fs::path meta = path;
    meta.replace_extension(".meta");
    const std::string meta_text = fmt::format("scene_id={}\n", r.scene_id);
    write_binary(meta, meta_text.data(), meta_text.size());
}

std::string write_chip(const Chip& c, const std::string& dir) {
    cv::Mat rgb(c.size, c.size, CV_8UC3, const_cast<std::uint8_t*>(c.pixels.data()));
    cv::Mat bgr;
    cv::cvtColor(rgb, bgr, cv::COLOR_RGB2BGR);
    std::vector<unsigned char> buf;
    if (!cv::imencode(".jpg", bgr, buf, {cv::IMWRITE_JPEG_QUALITY, 95})) {
        throw IoFailure(fmt::format("JPEG encode failed for chip {}_{}_{}",
                                    c.scene_id, c.col, c.row));
    }
    const fs::path base =
        fs::path(dir) / fmt::format("{}_{}_{}", c.scene_id, c.col, c.row);
    fs::path jpg = base;
    jpg += ".jpg";
    write_binary(jpg, buf.data(), buf.size());

    fs::path jgw = base;
    jgw += ".jgw";
    const std::string world = format_world_file(c.transform);
    write_binary(jgw, world.data(), world.size());
    return jpg.string();
}

RasterImage resample_to_gsd(const RasterImage& r, double target_gsd_m) {
    if (!std::isfinite(target_gsd_m) || target_gsd_m <= 0.0) {
        throw InvalidGsd(fmt::format("target GSD must be positive, got {}", target_gsd_m));
    }
    if (r.width <= 0 || r.height <= 0 || r.pixels.empty()) {
        throw EmptyRaster("resample_to_gsd: empty raster");
    }
    const double source_gsd = gsd_m(r);
    if (!std::isfinite(source_gsd) || source_gsd <= 0.0) {
        throw InvalidGsd(fmt::format("source GSD not computable ({})", source_gsd));
    }
    const double scale = source_gsd / target_gsd_m;
    if (std::abs(scale - 1.0) < 1e-9) return r;

    const int out_w = std::max(1, int(std::lround(scale * r.width)));
    const int out_h = std::max(1, int(std::lround(scale * r.height)));

    cv::Mat src(r.height, r.width, CV_8UC3,
                const_cast<std::uint8_t*>(r.pixels.data()));
    RasterImage out;
    out.width = out_w;
    out.height = out_h;
    out.pixels.resize(std::size_t(out_w) * out_h * 3);
    out.scene_id = r.scene_id;
    cv::Mat dst(out_h, out_w, CV_8UC3, out.pixels.data());
    cv::resize(src, dst, dst.size(), 0, 0, cv::INTER_LINEAR);

    // preserve the edge-to-edge geographic extent
    const double new_px_x = r.transform.px_size_x * double(r.width) / out_w;
    const double new_px_y = r.transform.px_size_y * double(r.height) / out_h;
    out.transform.px_size_x = new_px_x;
    out.transform.px_size_y = new_px_y;
    out.transform.origin_x =
        r.transform.origin_x - 0.5 * r.transform.px_size_x + 0.5 * new_px_x;
    out.transform.origin_y =
        r.transform.origin_y - 0.5 * r.transform.px_size_y + 0.5 * new_px_y;
    return out;
}

}  // namespace towerforge::raster
