#include "towerforge/raster.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>

#include <fmt/format.h>

#include "towerforge/errors.hpp"
#include "towerforge/rng.hpp"

namespace towerforge::raster {

namespace {
constexpr double kDegToRad = 3.14159265358979323846 / 180.0;
}

double gsd_m(const RasterImage& r) {
    return r.transform.px_size_x * geo::kMetersPerDegree *
           std::cos(r.center_lat() * kDegToRad);
}

void validate_buffer(double radius_m, double gsd_m, int chip_px) {
    if (!std::isfinite(radius_m) || radius_m <= 0.0 || chip_px <= 0) {
        throw NonFiniteInput(
            fmt::format("validate_buffer: radius_m={} chip_px={}", radius_m, chip_px));
    }
    if (!std::isfinite(gsd_m) || gsd_m <= 0.0) {
        throw InvalidGsd(fmt::format("validate_buffer: gsd_m={}", gsd_m));
    }
    const double buffer_px = radius_m / gsd_m;
    const double limit_px = chip_px / 4.0;
    if (buffer_px > limit_px) {
        throw BufferTooLarge(
            buffer_px, limit_px,
            fmt::format("buffer radius {} px exceeds quarter-chip limit {} px "
                        "(radius_m={}, gsd_m={}, chip_px={})",
                        buffer_px, limit_px, radius_m, gsd_m, chip_px));
    }
}

std::vector<ChipWindow> chip_grid(const RasterImage& r, int chip_px) {
    if (r.width < chip_px || r.height < chip_px) {
        throw RasterTooSmall(fmt::format("raster {}x{} smaller than chip size {}",
                                         r.width, r.height, chip_px));
    }
    const int cols = r.width / chip_px;
    const int rows = r.height / chip_px;
    std::vector<ChipWindow> windows;
    windows.reserve(std::size_t(cols) * rows);
    for (int j = 0; j < rows; ++j) {
        for (int i = 0; i < cols; ++i) {
            windows.push_back(ChipWindow{i, j, i * chip_px, j * chip_px});
        }
    }
    return windows;
}

AssignResult assign_annotations(const RasterImage& r,
                                const std::vector<ChipWindow>& windows,
                                const std::vector<geo::PixelBox>& boxes,
                                int chip_px) {
    int cols = 0;
    int rows = 0;
    for (const auto& w : windows) {
        cols = std::max(cols, w.col + 1);
        rows = std::max(rows, w.row + 1);
    }

    AssignResult result;
    result.chips.reserve(windows.size());
    for (const auto& w : windows) {
        Chip c;
        c.scene_id = r.scene_id;
        c.col = w.col;
        c.row = w.row;
        c.offset_x = w.offset_x;
        c.offset_y = w.offset_y;
        c.size = chip_px;
        c.pixels.resize(std::size_t(chip_px) * chip_px * 3);
        for (int y = 0; y < chip_px; ++y) {
            std::memcpy(c.pixels.data() + std::size_t(y) * chip_px * 3,
                        r.px(w.offset_x, w.offset_y + y),
                        std::size_t(chip_px) * 3);
        }
        c.transform = r.transform;
        c.transform.origin_x += w.offset_x * r.transform.px_size_x;
        c.transform.origin_y += w.offset_y * r.transform.px_size_y;
        result.chips.push_back(std::move(c));
    }

    for (const auto& box : boxes) {
        const double cx = box.cx();
        const double cy = box.cy();
        int i = static_cast<int>(std::floor(cx / chip_px));
        int j = static_cast<int>(std::floor(cy / chip_px));
        // a center exactly on a window boundary belongs to the smaller index
        if (i > 0 && cx == double(i) * chip_px) --i;
        if (j > 0 && cy == double(j) * chip_px) --j;
        if (cx < 0.0 || cy < 0.0 || i >= cols || j >= rows) {
            ++result.dropped;
            continue;
        }
        Chip& chip = result.chips[std::size_t(j) * cols + i];
        const double lx = box.x - chip.offset_x;
        const double ly = box.y - chip.offset_y;
        const double x0 = std::max(0.0, lx);
        const double y0 = std::max(0.0, ly);
        const double x1 = std::min(double(chip_px), lx + box.w);
        const double y1 = std::min(double(chip_px), ly + box.h);
        chip.annotations.push_back(geo::PixelBox{x0, y0, x1 - x0, y1 - y0});
    }
    return result;
}

ChipPlan select_samples(const std::vector<Chip>& chips, std::uint64_t seed) {
    std::map<std::string, std::pair<std::vector<const Chip*>, std::vector<const Chip*>>>
        by_scene;  // scene_id -> (positives, negatives), ordered by scene id
    for (const auto& c : chips) {
        auto& bucket = by_scene[c.scene_id];
        (c.positive() ? bucket.first : bucket.second).push_back(&c);
    }

    auto grid_order = [](const Chip* a, const Chip* b) {
        return std::pair{a->row, a->col} < std::pair{b->row, b->col};
    };

    ChipPlan plan;
    for (auto& [scene_id, bucket] : by_scene) {
        auto& [pos, neg] = bucket;
        // selection must not depend on caller ordering
        std::sort(pos.begin(), pos.end(), grid_order);
        std::sort(neg.begin(), neg.end(), grid_order);
        SplitMix64 rng(mix_seed(seed, hash64(scene_id)));
        if (!pos.empty()) plan.positives.push_back(*pos[rng.next_below(pos.size())]);
        if (!neg.empty()) plan.negatives.push_back(*neg[rng.next_below(neg.size())]);
    }

    auto plan_order = [](const Chip& a, const Chip& b) {
        return std::tie(a.scene_id, a.row, a.col) < std::tie(b.scene_id, b.row, b.col);
    };
    std::sort(plan.positives.begin(), plan.positives.end(), plan_order);
    std::sort(plan.negatives.begin(), plan.negatives.end(), plan_order);
    return plan;
}

}  // namespace towerforge::raster
