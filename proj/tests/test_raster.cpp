#include <cmath>
#include <cstdio>
#include <filesystem>
#include <set>

#include <doctest.h>

#include "towerforge/errors.hpp"
#include "towerforge/raster.hpp"
#include "towerforge/rng.hpp"

using namespace towerforge;
using namespace towerforge::raster;

namespace fs = std::filesystem;

namespace {

RasterImage make_raster(int w, int h, double px_deg = 1e-5) {
    RasterImage r;
    r.width = w;
    r.height = h;
    r.scene_id = "S";
    r.pixels.assign(std::size_t(w) * h * 3, 128);
    r.transform = geo::GeoTransform{30.0, -10.0, px_deg, -px_deg};
    return r;
}

std::string read_bytes(const fs::path& p) {
    std::string out;
    FILE* f = std::fopen(p.string().c_str(), "rb");
    REQUIRE(f);
    char buf[4096];
    std::size_t n;
    while ((n = std::fread(buf, 1, sizeof(buf), f)) > 0) out.append(buf, n);
    std::fclose(f);
    return out;
}

}  // namespace

TEST_CASE("validate_buffer quarter-chip rule") {
    CHECK_NOTHROW(validate_buffer(25.0, 0.5, 512));
    CHECK_NOTHROW(validate_buffer(64.0, 0.5, 512));  // 128 <= 128, inclusive
    CHECK_THROWS_AS(validate_buffer(65.0, 0.5, 512), BufferTooLarge);
    try {
        validate_buffer(65.0, 0.5, 512);
    } catch (const BufferTooLarge& e) {
        CHECK(e.buffer_px == doctest::Approx(130.0));
        CHECK(e.limit_px == doctest::Approx(128.0));
    }
    CHECK_THROWS_AS(validate_buffer(25.0, 0.0, 512), InvalidGsd);
    CHECK_THROWS_AS(validate_buffer(0.0, 0.5, 512), NonFiniteInput);
}

TEST_CASE("chip_grid") {
    SUBCASE("exact tiling") {
        const auto windows = chip_grid(make_raster(1024, 1024), 512);
        REQUIRE(windows.size() == 4);
        // row-major enumeration
        CHECK(windows[0].offset_x == 0);
        CHECK(windows[0].offset_y == 0);
        CHECK(windows[1].offset_x == 512);
        CHECK(windows[1].offset_y == 0);
        CHECK(windows[2].offset_x == 0);
        CHECK(windows[2].offset_y == 512);
    }
    SUBCASE("remainders dropped") {
        CHECK(chip_grid(make_raster(1100, 600), 512).size() == 2);
    }
    SUBCASE("too small") {
        CHECK_THROWS_AS(chip_grid(make_raster(500, 500), 512), RasterTooSmall);
        CHECK_THROWS_AS(chip_grid(make_raster(4096, 500), 512), RasterTooSmall);
    }
    SUBCASE("windows are disjoint and in bounds") {
        SplitMix64 rng(5);
        for (int t = 0; t < 10; ++t) {
            const int w = 512 + int(rng.next_below(2000));
            const int h = 512 + int(rng.next_below(2000));
            const auto windows = chip_grid(make_raster(w, h), 512);
            std::set<std::pair<int, int>> offsets;
            for (const auto& win : windows) {
                CHECK(win.offset_x + 512 <= w);
                CHECK(win.offset_y + 512 <= h);
                CHECK(offsets.insert({win.offset_x, win.offset_y}).second);
                CHECK(win.offset_x % 512 == 0);
                CHECK(win.offset_y % 512 == 0);
            }
        }
    }
}

TEST_CASE("assign_annotations center rule") {
    const RasterImage r = make_raster(1024, 1024);
    const auto windows = chip_grid(r, 512);

    SUBCASE("box fully inside one window") {
        const auto result =
            assign_annotations(r, windows, {geo::PixelBox{100, 100, 50, 50}}, 512);
        CHECK(result.dropped == 0);
        REQUIRE(result.chips[0].annotations.size() == 1);
        const auto& box = result.chips[0].annotations[0];
        CHECK(box.x == doctest::Approx(100.0));
        CHECK(box.area() == doctest::Approx(2500.0));
        CHECK(result.chips[1].annotations.empty());
    }
    SUBCASE("box clipped at a window edge, absent from the neighbor") {
        // 100x100 box centered 10 px left of window 0's right edge
        const auto result = assign_annotations(
            r, windows, {geo::PixelBox{452, 50, 100, 100}}, 512);
        CHECK(result.dropped == 0);
        REQUIRE(result.chips[0].annotations.size() == 1);
        const auto& box = result.chips[0].annotations[0];
        CHECK(box.x == doctest::Approx(452.0));
        CHECK(box.w == doctest::Approx(60.0));
        CHECK(box.h == doctest::Approx(100.0));
        CHECK(result.chips[1].annotations.empty());
    }
    SUBCASE("corner tie goes to the top-left window") {
        // centered exactly on the shared corner of the four windows
        const auto result = assign_annotations(
            r, windows, {geo::PixelBox{462, 462, 100, 100}}, 512);
        CHECK(result.dropped == 0);
        CHECK(result.chips[0].annotations.size() == 1);
        CHECK(result.chips[1].annotations.empty());
        CHECK(result.chips[2].annotations.empty());
        CHECK(result.chips[3].annotations.empty());
        const auto& box = result.chips[0].annotations[0];
        CHECK(box.x == doctest::Approx(462.0));
        CHECK(box.w == doctest::Approx(50.0));
        CHECK(box.h == doctest::Approx(50.0));
    }
    SUBCASE("center in a discarded strip is dropped") {
        const RasterImage r2 = make_raster(1100, 600);
        const auto w2 = chip_grid(r2, 512);
        const auto result =
            assign_annotations(r2, w2, {geo::PixelBox{1040, 100, 30, 30}}, 512);
        CHECK(result.dropped == 1);
    }
    SUBCASE("conservation and clip bounds on random boxes") {
        SplitMix64 rng(77);
        std::vector<geo::PixelBox> boxes;
        for (int i = 0; i < 300; ++i) {
            boxes.push_back(geo::PixelBox{rng.next_double() * 1200 - 100,
                                          rng.next_double() * 1200 - 100,
                                          5 + rng.next_double() * 120,
                                          5 + rng.next_double() * 120});
        }
        const auto result = assign_annotations(r, windows, boxes, 512);
        std::size_t assigned = 0;
        for (const auto& chip : result.chips) {
            for (const auto& box : chip.annotations) {
                CHECK(box.w > 0.0);
                CHECK(box.h > 0.0);
                CHECK(box.x >= 0.0);
                CHECK(box.y >= 0.0);
                CHECK(box.x + box.w <= 512.0 + 1e-9);
                CHECK(box.y + box.h <= 512.0 + 1e-9);
            }
            assigned += chip.annotations.size();
        }
        CHECK(assigned + result.dropped == boxes.size());
    }
    SUBCASE("chip transform shifts by the window offset") {
        const auto result = assign_annotations(r, windows, {}, 512);
        const auto& chip = result.chips[3];  // col 1, row 1
        CHECK(chip.transform.origin_x ==
              doctest::Approx(r.transform.origin_x + 512 * r.transform.px_size_x));
        CHECK(chip.transform.origin_y ==
              doctest::Approx(r.transform.origin_y + 512 * r.transform.px_size_y));
    }
}

TEST_CASE("select_samples") {
    // one scene: 3 positive, 5 negative chips
    std::vector<Chip> chips;
    for (int i = 0; i < 8; ++i) {
        Chip c;
        c.scene_id = "scene";
        c.col = i % 4;
        c.row = i / 4;
        c.size = 512;
        if (i < 3) c.annotations.push_back(geo::PixelBox{1, 1, 10, 10});
        chips.push_back(c);
    }

    SUBCASE("one of each per scene") {
        const ChipPlan plan = select_samples(chips, 42);
        CHECK(plan.positives.size() == 1);
        CHECK(plan.negatives.size() == 1);
        CHECK(plan.positives[0].positive());
        CHECK_FALSE(plan.negatives[0].positive());
    }
    SUBCASE("scene lacking positives yields only a negative") {
        std::vector<Chip> negatives_only(chips.begin() + 3, chips.end());
        const ChipPlan plan = select_samples(negatives_only, 42);
        CHECK(plan.positives.empty());
        CHECK(plan.negatives.size() == 1);
    }
    SUBCASE("deterministic and input-order independent") {
        const ChipPlan a = select_samples(chips, 7);
        std::vector<Chip> reversed(chips.rbegin(), chips.rend());
        const ChipPlan b = select_samples(reversed, 7);
        REQUIRE(a.positives.size() == b.positives.size());
        CHECK(a.positives[0].col == b.positives[0].col);
        CHECK(a.positives[0].row == b.positives[0].row);
        CHECK(a.negatives[0].col == b.negatives[0].col);
        const ChipPlan c = select_samples(chips, 8);
        const ChipPlan d = select_samples(chips, 7);
        CHECK(d.positives[0].col == a.positives[0].col);  // same seed, same pick
        (void)c;
    }
    SUBCASE("two scenes contribute independently") {
        std::vector<Chip> two = chips;
        for (auto c : chips) {
            c.scene_id = "other";
            two.push_back(c);
        }
        const ChipPlan plan = select_samples(two, 42);
        CHECK(plan.positives.size() == 2);
        CHECK(plan.negatives.size() == 2);
        CHECK(plan.positives[0].scene_id <= plan.positives[1].scene_id);
    }
}

TEST_CASE("resample_to_gsd") {
    // 0.5 m pixels at latitude -10 (square-meter pixels)
    const double rad = -10.0 * 3.14159265358979323846 / 180.0;
    RasterImage r = make_raster(600, 600);
    r.transform.px_size_x = 0.5 / (geo::kMetersPerDegree * std::cos(rad));
    r.transform.px_size_y = -0.5 / geo::kMetersPerDegree;

    SUBCASE("identity at the target GSD") {
        const RasterImage out = resample_to_gsd(r, 0.5);
        CHECK(out.width == r.width);
        CHECK(out.height == r.height);
        CHECK(out.pixels == r.pixels);
    }
    SUBCASE("1.0 m source to 0.5 m doubles the dimensions") {
        RasterImage coarse = r;
        coarse.transform.px_size_x *= 2.0;
        coarse.transform.px_size_y *= 2.0;
        const RasterImage out = resample_to_gsd(coarse, 0.5);
        CHECK(out.width == 2 * coarse.width);
        CHECK(out.height == 2 * coarse.height);
        // geographic extent preserved within one output pixel
        const double in_left = coarse.transform.origin_x - 0.5 * coarse.transform.px_size_x;
        const double out_left = out.transform.origin_x - 0.5 * out.transform.px_size_x;
        CHECK(std::abs(in_left - out_left) < std::abs(out.transform.px_size_x));
        const double in_right = in_left + coarse.width * coarse.transform.px_size_x;
        const double out_right = out_left + out.width * out.transform.px_size_x;
        CHECK(std::abs(in_right - out_right) < std::abs(out.transform.px_size_x));
    }
    SUBCASE("invalid target") {
        CHECK_THROWS_AS(resample_to_gsd(r, 0.0), InvalidGsd);
        CHECK_THROWS_AS(resample_to_gsd(r, -1.0), InvalidGsd);
        RasterImage empty;
        CHECK_THROWS_AS(resample_to_gsd(empty, 0.5), EmptyRaster);
    }
    SUBCASE("down then up preserves extent") {
        const RasterImage down = resample_to_gsd(r, 1.0);
        const RasterImage up = resample_to_gsd(down, 0.5);
        CHECK(std::abs(up.width - r.width) <= 1);
        const double a = r.transform.origin_x - 0.5 * r.transform.px_size_x;
        const double b = up.transform.origin_x - 0.5 * up.transform.px_size_x;
        CHECK(std::abs(a - b) < std::abs(r.transform.px_size_x));
    }
}

TEST_CASE("world file round-trip") {
    const geo::GeoTransform gt{29.99, -9.87, 4.56e-6, -4.49e-6};
    const std::string text = format_world_file(gt);
    const geo::GeoTransform back = parse_world_file(text);
    CHECK(back.origin_x == gt.origin_x);
    CHECK(back.origin_y == gt.origin_y);
    CHECK(back.px_size_x == gt.px_size_x);
    CHECK(back.px_size_y == gt.px_size_y);

    CHECK_THROWS_AS(parse_world_file("1\n0.1\n0\n-1\n10\n5\n"), MalformedDocument);
    CHECK_THROWS_AS(parse_world_file("1\n0\n0\n"), MalformedDocument);
    CHECK_THROWS_AS(parse_world_file("1\n0\n0\n1\n10\n5\n"), MalformedDocument);  // py > 0
}

TEST_CASE("write_chip and raster io") {
    const fs::path dir = fs::temp_directory_path() / "towerforge_chip_test";
    fs::remove_all(dir);
    fs::create_directories(dir);

    Chip c;
    c.scene_id = "S";
    c.col = 2;
    c.row = 3;
    c.size = 512;
    c.pixels.assign(512 * 512 * 3, 0);
    for (std::size_t i = 0; i < c.pixels.size(); i += 3) c.pixels[i] = 200;
    c.transform = geo::GeoTransform{30.0, -10.0, 1e-5, -1e-5};

    SUBCASE("naming contract and re-read") {
        const std::string path = write_chip(c, dir.string());
        CHECK(fs::path(path).filename() == "S_2_3.jpg");
        CHECK(fs::exists(dir / "S_2_3.jgw"));
        const RasterImage back = load_raster(path);
        CHECK(back.width == 512);
        CHECK(back.height == 512);
        CHECK(back.transform.origin_x == c.transform.origin_x);
        CHECK(back.transform.px_size_y == c.transform.px_size_y);
    }
    SUBCASE("rewrite is byte-identical") {
        const std::string path = write_chip(c, dir.string());
        const std::string first = read_bytes(path);
        const std::string first_world = read_bytes(dir / "S_2_3.jgw");
        write_chip(c, dir.string());
        CHECK(read_bytes(path) == first);
        CHECK(read_bytes(dir / "S_2_3.jgw") == first_world);
    }
    SUBCASE("unwritable directory fails") {
        CHECK_THROWS_AS(write_chip(c, (dir / "missing" / "deeper").string()),
                        IoFailure);
    }
    SUBCASE("png save and load with meta sidecar") {
        RasterImage r = make_raster(600, 520);
        r.scene_id = "alpha";
        const std::string png = (dir / "alpha.png").string();
        save_raster_png(r, png);
        const RasterImage back = load_raster(png);
        CHECK(back.scene_id == "alpha");
        CHECK(back.width == 600);
        CHECK(back.pixels == r.pixels);
        CHECK(back.transform.px_size_x == r.transform.px_size_x);
    }
    SUBCASE("missing world file is an error") {
        RasterImage r = make_raster(520, 520);
        const std::string png = (dir / "bare.png").string();
        save_raster_png(r, png);
        fs::remove(dir / "bare.pgw");
        CHECK_THROWS_AS(load_raster(png), IoFailure);
    }

    fs::remove_all(dir);
}
