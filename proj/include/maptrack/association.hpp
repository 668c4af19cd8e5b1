#pragma once

#include <Eigen/Dense>
#include <deque>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

#include "maptrack/geometry.hpp"

namespace maptrack {

using Descriptor = Eigen::VectorXf;  // empty vector = no appearance available

/// Distance reported against an empty gallery; above every usable gate.
inline constexpr double kEmptyGalleryDistance = 2.0;

/// Bounded FIFO of unit-norm appearance descriptors for one track.
class AppearanceGallery {
public:
    explicit AppearanceGallery(std::size_t capacity = 100) : capacity_(capacity) {}

    /// Normalizes on ingest and evicts the oldest descriptor beyond capacity.
    /// Rejects vectors with (near-)zero norm.
    void push(const Descriptor& descriptor) {
        const double norm = descriptor.norm();
        if (!(norm > 1e-12)) {
            throw std::invalid_argument("appearance descriptor has zero norm");
        }
        descriptors_.push_back(descriptor / static_cast<float>(norm));
        while (descriptors_.size() > capacity_) descriptors_.pop_front();
    }

    /// Minimum cosine distance between `descriptor` and the stored gallery.
    /// Empty gallery yields kEmptyGalleryDistance (match impossible).
    double distance(const Descriptor& descriptor) const {
        if (descriptors_.empty()) return kEmptyGalleryDistance;
        double best = std::numeric_limits<double>::infinity();
        for (const auto& stored : descriptors_) {
            best = std::min(best, 1.0 - static_cast<double>(stored.dot(descriptor)));
        }
        return best;
    }

    std::size_t size() const { return descriptors_.size(); }
    bool empty() const { return descriptors_.empty(); }
    std::size_t capacity() const { return capacity_; }
    const Descriptor& at(std::size_t i) const { return descriptors_.at(i); }

private:
    std::size_t capacity_;
    std::deque<Descriptor> descriptors_;
};

inline void gallery_push(AppearanceGallery& gallery, const Descriptor& descriptor) {
    gallery.push(descriptor);
}

inline double appearance_distance(const AppearanceGallery& gallery, const Descriptor& descriptor) {
    return gallery.distance(descriptor);
}

struct AssociationConfig {
    double iou_gate = 0.3;        // minimum IoU for a plain IoU match
    double reid_gate = 0.25;      // maximum appearance distance for a ReID match
    double dual_iou_gate = 0.45;  // stricter IoU for dual verification
    double dual_reid_gate = 0.2;  // stricter appearance distance for dual verification
    std::size_t gallery_capacity = 100;
};

struct CostMatrix {
    Eigen::MatrixXd cost;                              // rows = tracks, cols = detections
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> infeasible;

    int rows() const { return static_cast<int>(cost.rows()); }
    int cols() const { return static_cast<int>(cost.cols()); }
};

struct AssignmentResult {
    std::vector<std::pair<int, int>> matches;  // (row, col)
    std::vector<int> unmatched_rows;
    std::vector<int> unmatched_cols;
};

/// Entry (i,j) = 1 - IoU(track_i, det_j); entries below `gate` IoU are infeasible.
inline CostMatrix iou_cost_matrix(const std::vector<BoundingBox>& track_boxes,
                                  const std::vector<BoundingBox>& det_boxes,
                                  double gate) {
    const int r = static_cast<int>(track_boxes.size());
    const int c = static_cast<int>(det_boxes.size());
    CostMatrix m;
    m.cost.resize(r, c);
    m.infeasible.resize(r, c);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) {
            const double overlap = iou(track_boxes[i], det_boxes[j]);
            m.cost(i, j) = 1.0 - overlap;
            m.infeasible(i, j) = overlap < gate;
        }
    }
    return m;
}

/// Entry (i,j) = appearance distance between gallery i and descriptor j;
/// entries above `gate` (and empty descriptors/galleries) are infeasible.
inline CostMatrix appearance_cost_matrix(const std::vector<const AppearanceGallery*>& galleries,
                                         const std::vector<Descriptor>& descriptors,
                                         double gate) {
    const int r = static_cast<int>(galleries.size());
    const int c = static_cast<int>(descriptors.size());
    CostMatrix m;
    m.cost.resize(r, c);
    m.infeasible.resize(r, c);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) {
            if (descriptors[j].size() == 0 || galleries[i] == nullptr || galleries[i]->empty()) {
                m.cost(i, j) = kEmptyGalleryDistance;
                m.infeasible(i, j) = true;
                continue;
            }
            const double d = galleries[i]->distance(descriptors[j]);
            m.cost(i, j) = d;
            m.infeasible(i, j) = d > gate;
        }
    }
    return m;
}

namespace detail {

/// Jonker-Volgenant style shortest augmenting path solver for a dense square
/// matrix, 1-based internals. Returns row -> column assignment.
inline std::vector<int> solve_square_lap(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, std::numeric_limits<double>::infinity());
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            int j1 = 0;
            double delta = std::numeric_limits<double>::infinity();
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }

    std::vector<int> row_to_col(n, -1);
    for (int j = 1; j <= n; ++j) {
        if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
    }
    return row_to_col;
}

}  // namespace detail

/// Minimum-total-cost one-to-one assignment. Rectangular matrices are padded
/// internally; infeasible entries are priced high enough that the solver only
/// uses them when forced, and any such match is reported unmatched instead.
inline AssignmentResult solve_assignment(
    const Eigen::MatrixXd& cost,
    const Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>& infeasible) {
    const int r = static_cast<int>(cost.rows());
    const int c = static_cast<int>(cost.cols());
    AssignmentResult result;
    if (r == 0 || c == 0) {
        for (int i = 0; i < r; ++i) result.unmatched_rows.push_back(i);
        for (int j = 0; j < c; ++j) result.unmatched_cols.push_back(j);
        return result;
    }

    double max_abs = 0.0;
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            if (!infeasible(i, j)) max_abs = std::max(max_abs, std::abs(cost(i, j)));
    const int n = std::max(r, c);
    const double big = (max_abs + 1.0) * (n + 1) * 2.0;

    std::vector<std::vector<double>> padded(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < r; ++i)
        for (int j = 0; j < c; ++j)
            padded[i][j] = infeasible(i, j) ? big : cost(i, j);

    const std::vector<int> row_to_col = detail::solve_square_lap(padded);

    std::vector<char> col_matched(c, 0);
    for (int i = 0; i < r; ++i) {
        const int j = row_to_col[i];
        if (j >= 0 && j < c && !infeasible(i, j)) {
            result.matches.emplace_back(i, j);
            col_matched[j] = 1;
        } else {
            result.unmatched_rows.push_back(i);
        }
    }
    for (int j = 0; j < c; ++j)
        if (!col_matched[j]) result.unmatched_cols.push_back(j);
    return result;
}

inline AssignmentResult solve_assignment(const CostMatrix& m) {
    return solve_assignment(m.cost, m.infeasible);
}

/// IoU-gated global assignment (tentative tracks, uncrowded normals, predicted tracks).
inline AssignmentResult iou_association(const std::vector<BoundingBox>& track_boxes,
                                        const std::vector<BoundingBox>& det_boxes,
                                        double gate) {
    return solve_assignment(iou_cost_matrix(track_boxes, det_boxes, gate));
}

/// Appearance-gated global assignment (crowded normals, predicted, disappeared tracks).
inline AssignmentResult reid_association(const std::vector<const AppearanceGallery*>& galleries,
                                         const std::vector<Descriptor>& descriptors,
                                         double gate) {
    return solve_assignment(appearance_cost_matrix(galleries, descriptors, gate));
}

/// Association for normal tracks: every kept match must pass both the IoU and
/// the appearance gate. Assignment cost is the mean of the two metrics.
/// Without descriptors this degrades to IoU-only gating at the dual IoU gate.
inline AssignmentResult dual_gate_associate(const std::vector<BoundingBox>& track_boxes,
                                            const std::vector<const AppearanceGallery*>& galleries,
                                            const std::vector<BoundingBox>& det_boxes,
                                            const std::vector<Descriptor>& descriptors,
                                            const AssociationConfig& cfg) {
    bool any_descriptor = false;
    for (const auto& d : descriptors)
        if (d.size() != 0) { any_descriptor = true; break; }

    if (!any_descriptor) {
        return iou_association(track_boxes, det_boxes, cfg.dual_iou_gate);
    }

    const int r = static_cast<int>(track_boxes.size());
    const int c = static_cast<int>(det_boxes.size());
    CostMatrix m;
    m.cost.resize(r, c);
    m.infeasible.resize(r, c);
    for (int i = 0; i < r; ++i) {
        for (int j = 0; j < c; ++j) {
            const double overlap = iou(track_boxes[i], det_boxes[j]);
            double reid = kEmptyGalleryDistance;
            if (descriptors[j].size() != 0 && galleries[i] != nullptr && !galleries[i]->empty()) {
                reid = galleries[i]->distance(descriptors[j]);
            }
            m.cost(i, j) = 0.5 * (1.0 - overlap) + 0.5 * reid;
            m.infeasible(i, j) = overlap < cfg.dual_iou_gate || reid > cfg.dual_reid_gate;
        }
    }
    return solve_assignment(m);
}

}  // namespace maptrack
