#pragma once

// Built-in sanity battery behind `maptrack selfcheck`. Quick independent
// spot-checks of the core numerics; the full test suite lives under tests/.

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <random>
#include <vector>

#include "maptrack/association.hpp"
#include "maptrack/geometry.hpp"
#include "maptrack/kalman.hpp"
#include "maptrack/metrics.hpp"

namespace maptrack::tools {

namespace selfcheck_detail {

inline bool report(const char* name, bool ok) {
    std::printf("selfcheck: %-24s %s\n", name, ok ? "ok" : "FAILED");
    return ok;
}

inline bool check_geometry(std::mt19937& rng) {
    std::uniform_int_distribution<int> pos(0, 150);
    std::uniform_int_distribution<int> size(20, 80);
    for (int k = 0; k < 200; ++k) {
        const BoundingBox a{double(pos(rng)), double(pos(rng)), double(size(rng)),
                            double(size(rng))};
        const BoundingBox b{double(pos(rng)), double(pos(rng)), double(size(rng)),
                            double(size(rng))};
        long long in_a = 0, in_b = 0, in_both = 0;
        for (int y = -1; y < 240; ++y) {
            for (int x = -1; x < 240; ++x) {
                const double px = x + 0.5, py = y + 0.5;
                const bool pa = px >= a.left && px < a.right() && py >= a.top && py < a.bottom();
                const bool pb = px >= b.left && px < b.right() && py >= b.top && py < b.bottom();
                in_a += pa;
                in_b += pb;
                in_both += pa && pb;
            }
        }
        const double raster_iou =
            in_both > 0 ? double(in_both) / double(in_a + in_b - in_both) : 0.0;
        if (std::abs(iou(a, b) - raster_iou) > 0.02 * std::max(raster_iou, 1e-9) + 1e-9)
            return false;
    }
    return true;
}

inline bool check_assignment(std::mt19937& rng) {
    std::uniform_int_distribution<int> dim(1, 6);
    std::uniform_int_distribution<int> value(0, 50);
    for (int iter = 0; iter < 100; ++iter) {
        const int n = dim(rng);
        Eigen::MatrixXd cost(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) cost(i, j) = value(rng);
        const auto res = solve_assignment(
            cost, Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>::Constant(n, n, false));
        double total = 0;
        for (const auto& [i, j] : res.matches) total += cost(i, j);

        std::vector<int> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        double best = 1e18;
        do {
            double t = 0;
            for (int i = 0; i < n; ++i) t += cost(i, perm[i]);
            best = std::min(best, t);
        } while (std::next_permutation(perm.begin(), perm.end()));
        if (total != best) return false;
    }
    return true;
}

inline bool check_deformation_bands() {
    const NoiseConfig noise;
    const struct {
        double d;
        double normal;
        double predicted;
    } table[] = {
        {0.5, 15, 9}, {0.6, 9, 6},  {0.65, 9, 6},  {0.7, 6, 3},  {0.75, 6, 3},
        {0.8, 1, 1},  {1.0, 1, 1},  {1.2, 1, 1},   {1.25, 6, 3}, {1.3, 6, 3},
        {1.35, 9, 6}, {1.4, 9, 6},  {1.5, 15, 9},
    };
    for (const auto& row : table) {
        if (covariance_multiplier(row.d, TrackClass::kNormalOrTentative, noise) != row.normal)
            return false;
        if (covariance_multiplier(row.d, TrackClass::kPredicted, noise) != row.predicted)
            return false;
    }
    return true;
}

inline bool check_momentum_convergence() {
    const NoiseConfig noise;  // beta = 0.9
    Eigen::Vector2d v(0, 0);
    Eigen::Vector2d center(0, 0);
    const Eigen::Vector2d displacement(2.0, 0.0);
    for (int k = 1; k <= 50; ++k) {
        const Eigen::Vector2d next = center + displacement;
        v = smooth_velocity(v, center, next, noise);
        center = next;
    }
    return std::abs(v(0) - 2.0) / 2.0 < 0.01;
}

inline bool check_metrics() {
    std::vector<MotRow> gt;
    for (int f = 1; f <= 10; ++f) {
        MotRow row;
        row.frame = f;
        row.id = 1;
        row.box = BoundingBox{10.0 * f, 20, 30, 60};
        gt.push_back(row);
    }
    const auto perfect = evaluate_rows(gt, gt, 0.5);
    if (perfect.mota != 1.0 || perfect.idf1 != 1.0 || perfect.idsw != 0) return false;

    const auto all_miss = evaluate_rows(gt, {}, 0.5);
    if (all_miss.mota != 0.0 || all_miss.fn != 10) return false;

    std::vector<MotRow> switched = gt;
    for (auto& row : switched)
        if (row.frame >= 6) row.id = 2;
    const auto sw = evaluate_rows(gt, switched, 0.5);
    return sw.idsw == 1 && sw.idf1 == 0.5;
}

}  // namespace selfcheck_detail

inline bool run_selfcheck() {
    using namespace selfcheck_detail;
    std::mt19937 rng(12345);
    bool ok = true;
    ok &= report("geometry raster oracle", check_geometry(rng));
    ok &= report("assignment optimality", check_assignment(rng));
    ok &= report("deformation bands", check_deformation_bands());
    ok &= report("momentum convergence", check_momentum_convergence());
    ok &= report("metrics oracle", check_metrics());
    std::printf("selfcheck %s\n", ok ? "passed" : "FAILED");
    return ok;
}

}  // namespace maptrack::tools
