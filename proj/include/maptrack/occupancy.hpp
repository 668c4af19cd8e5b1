#pragma once

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include "maptrack/geometry.hpp"

namespace maptrack {

struct MapConfig {
    double thresh1 = 0.05;       // minimum probability sum to count as "in the map"
    double thresh2 = 1.25;       // crowding ratio threshold
    int border_margin_cells = 1; // "verge of leaving" margin, in grid cells
    int warmup_frames = 30;      // probability map answers true until this many frames
};

/// Integer occupancy grid at one-tenth frame resolution. Backs both the
/// long-run probability map and the per-frame prediction map.
class OccupancyGrid {
public:
    static constexpr int kCellSize = 10;  // px per cell

    OccupancyGrid() = default;
    OccupancyGrid(int frame_width, int frame_height)
        : frame_width_(frame_width),
          frame_height_(frame_height),
          rows_((frame_height + kCellSize - 1) / kCellSize),
          cols_((frame_width + kCellSize - 1) / kCellSize),
          cells_(static_cast<std::size_t>(rows_) * cols_, 0) {}

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int frame_width() const { return frame_width_; }
    int frame_height() const { return frame_height_; }
    int frames_accumulated() const { return frames_accumulated_; }

    int at(int row, int col) const { return cells_[static_cast<std::size_t>(row) * cols_ + col]; }

    void add_box(const BoundingBox& box) {
        for_each_covered_cell(box, [this](int r, int c) {
            ++cells_[static_cast<std::size_t>(r) * cols_ + c];
        });
    }

    void bump_frame() { ++frames_accumulated_; }

    void clear() {
        std::fill(cells_.begin(), cells_.end(), 0);
        frames_accumulated_ = 0;
    }

    /// Visits every in-frame cell whose continuous extent the box overlaps
    /// with positive area. Touching edges do not count.
    template <typename Fn>
    void for_each_covered_cell(const BoundingBox& box, Fn&& fn) const {
        int c0 = static_cast<int>(std::floor(box.left / kCellSize));
        int c1 = static_cast<int>(std::ceil(box.right() / kCellSize)) - 1;
        int r0 = static_cast<int>(std::floor(box.top / kCellSize));
        int r1 = static_cast<int>(std::ceil(box.bottom() / kCellSize)) - 1;
        c0 = std::max(c0, 0);
        r0 = std::max(r0, 0);
        c1 = std::min(c1, cols_ - 1);
        r1 = std::min(r1, rows_ - 1);
        for (int r = r0; r <= r1; ++r)
            for (int c = c0; c <= c1; ++c) fn(r, c);
    }

    int covered_cell_count(const BoundingBox& box) const {
        int n = 0;
        for_each_covered_cell(box, [&n](int, int) { ++n; });
        return n;
    }

    std::int64_t covered_sum(const BoundingBox& box) const {
        std::int64_t sum = 0;
        for_each_covered_cell(box, [this, &sum](int r, int c) { sum += at(r, c); });
        return sum;
    }

    std::string to_text() const {
        std::ostringstream os;
        for (int r = 0; r < rows_; ++r) {
            for (int c = 0; c < cols_; ++c) {
                if (c) os << ' ';
                os << at(r, c);
            }
            os << '\n';
        }
        return os.str();
    }

private:
    int frame_width_ = 0;
    int frame_height_ = 0;
    int rows_ = 0;
    int cols_ = 0;
    std::vector<int> cells_;
    int frames_accumulated_ = 0;  // probability map only
};

/// Folds one frame of (stage-1 filtered) detections into the probability map.
/// frames_accumulated advances once per call regardless of detection count.
inline void accumulate_probability(OccupancyGrid& grid, const std::vector<BoundingBox>& detections) {
    for (const auto& box : detections) grid.add_box(box);
    grid.bump_frame();
}

/// Whether a box plausibly still corresponds to a visible object. False when
/// its center is outside the frame or within the border margin; true during
/// warm-up; otherwise true iff the summed per-cell visit frequency under the
/// box reaches thresh1.
inline bool in_probability_map(const OccupancyGrid& grid, const BoundingBox& box,
                               const MapConfig& cfg) {
    const double margin = static_cast<double>(cfg.border_margin_cells) * OccupancyGrid::kCellSize;
    const double cx = box.center_x();
    const double cy = box.center_y();
    if (cx < margin || cx >= grid.frame_width() - margin || cy < margin ||
        cy >= grid.frame_height() - margin) {
        return false;
    }
    if (grid.frames_accumulated() == 0 || grid.frames_accumulated() < cfg.warmup_frames) {
        return true;
    }
    const double sum =
        static_cast<double>(grid.covered_sum(box)) / grid.frames_accumulated();
    return sum >= cfg.thresh1;
}

/// Fresh per-frame grid over the post-predict boxes of normal and predicted tracks.
inline OccupancyGrid build_prediction_map(int frame_width, int frame_height,
                                          const std::vector<BoundingBox>& track_boxes) {
    OccupancyGrid grid(frame_width, frame_height);
    for (const auto& box : track_boxes) grid.add_box(box);
    return grid;
}

/// A track is crowded when the mean prediction-map value over its covered
/// cells exceeds thresh2. A lone track scores exactly 1.
inline bool is_crowded(const OccupancyGrid& prediction_map, const BoundingBox& box,
                       const MapConfig& cfg) {
    const int n = prediction_map.covered_cell_count(box);
    if (n == 0) return false;
    const double ratio = static_cast<double>(prediction_map.covered_sum(box)) / n;
    return ratio > cfg.thresh2;
}

}  // namespace maptrack
