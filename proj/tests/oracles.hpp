// Independent reference implementations used only by tests. Each oracle
// recomputes a quantity by a different route than the library code it checks.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <utility>
#include <vector>

#include "maptrack/geometry.hpp"

namespace oracles {

/// Pixel-counting overlap: walks integer pixel centers and counts membership.
struct RasterOverlap {
    long long inside_a = 0;
    long long inside_b = 0;
    long long inside_both = 0;

    double iou() const {
        const long long uni = inside_a + inside_b - inside_both;
        return uni > 0 ? static_cast<double>(inside_both) / uni : 0.0;
    }
    double ioi_a() const {
        return inside_a > 0 ? static_cast<double>(inside_both) / inside_a : 0.0;
    }
};

inline RasterOverlap rasterize_overlap(const maptrack::BoundingBox& a,
                                       const maptrack::BoundingBox& b) {
    const int x0 = static_cast<int>(std::floor(std::min(a.left, b.left))) - 1;
    const int x1 = static_cast<int>(std::ceil(std::max(a.right(), b.right()))) + 1;
    const int y0 = static_cast<int>(std::floor(std::min(a.top, b.top))) - 1;
    const int y1 = static_cast<int>(std::ceil(std::max(a.bottom(), b.bottom()))) + 1;
    RasterOverlap out;
    for (int y = y0; y < y1; ++y) {
        for (int x = x0; x < x1; ++x) {
            const double px = x + 0.5;
            const double py = y + 0.5;
            const bool in_a = px >= a.left && px < a.right() && py >= a.top && py < a.bottom();
            const bool in_b = px >= b.left && px < b.right() && py >= b.top && py < b.bottom();
            out.inside_a += in_a;
            out.inside_b += in_b;
            out.inside_both += in_a && in_b;
        }
    }
    return out;
}

/// Exhaustive assignment minimum over all row permutations of a square matrix.
inline double brute_force_assignment(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
        double total = 0.0;
        for (int i = 0; i < n; ++i) total += cost[i][perm[i]];
        best = std::min(best, total);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best;
}

/// Grid cells hit by a dense lattice of sample points inside the box.
/// Boxes with coordinates on a half-pixel grid make this exact.
inline std::set<std::pair<int, int>> sampled_covered_cells(const maptrack::BoundingBox& box,
                                                           int rows, int cols,
                                                           double cell_size = 10.0,
                                                           double step = 0.1) {
    std::set<std::pair<int, int>> cells;
    for (double y = box.top + step / 2; y < box.bottom(); y += step) {
        for (double x = box.left + step / 2; x < box.right(); x += step) {
            const int r = static_cast<int>(std::floor(y / cell_size));
            const int c = static_cast<int>(std::floor(x / cell_size));
            if (r >= 0 && r < rows && c >= 0 && c < cols) cells.insert({r, c});
        }
    }
    return cells;
}

/// Table-driven deformation band lookup, written as explicit intervals.
/// Returns 1 for the untouched band, otherwise the selected coefficient.
inline double band_table(double d, double c1, double c2, double c3) {
    struct Band {
        double lo, hi;  // half-open [lo, hi)
        bool lo_closed, hi_closed;
        double value;
    };
    // Boundary points belong to the milder band.
    const Band bands[] = {
        {0.0, 0.6, false, false, c1},  // (0, 0.6)
        {0.6, 0.7, true, false, c2},   // [0.6, 0.7)
        {0.7, 0.8, true, false, c3},   // [0.7, 0.8)
        {0.8, 1.2, true, true, 1.0},   // [0.8, 1.2]
        {1.2, 1.3, false, true, c3},   // (1.2, 1.3]
        {1.3, 1.4, false, true, c2},   // (1.3, 1.4]
    };
    for (const auto& b : bands) {
        const bool above = b.lo_closed ? d >= b.lo : d > b.lo;
        const bool below = b.hi_closed ? d <= b.hi : d < b.hi;
        if (above && below) return b.value;
    }
    return c1;  // (1.4, inf)
}

}  // namespace oracles
