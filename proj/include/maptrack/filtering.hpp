#pragma once

#include <algorithm>
#include <utility>
#include <vector>

#include "maptrack/association.hpp"
#include "maptrack/detection.hpp"
#include "maptrack/geometry.hpp"
#include "maptrack/occupancy.hpp"

namespace maptrack {

struct FilterConfig {
    double det_ioi_gate = 0.7;        // detection-vs-detection containment gate
    double ambiguous_ioi_gate = 0.5;  // "high IoI" gate for multiplicity rules
    double reid_closeness_eps = 0.05; // appearance distances closer than this are ambiguous
    double thresh3 = 3.0;             // center distance / detection width gate
    int far_ioi_zero_frames = 5;      // isolation frames before a predicted track is dropped
};

/// Stage 1 of detection filtering: drop detections largely contained in
/// another detection. When two boxes mutually exceed the gate, the one with
/// lower confidence goes (ties: smaller area, then later file order).
inline std::vector<Detection> filter_detections_stage1(const std::vector<Detection>& detections,
                                                       const FilterConfig& cfg) {
    const int n = static_cast<int>(detections.size());
    std::vector<char> removed(n, 0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double ioi_ij = ioi(detections[i].box, detections[j].box);
            const double ioi_ji = ioi(detections[j].box, detections[i].box);
            const bool i_in_j = ioi_ij > cfg.det_ioi_gate;
            const bool j_in_i = ioi_ji > cfg.det_ioi_gate;
            if (i_in_j && j_in_i) {
                int loser;
                if (detections[i].confidence != detections[j].confidence) {
                    loser = detections[i].confidence < detections[j].confidence ? i : j;
                } else if (detections[i].box.area() != detections[j].box.area()) {
                    loser = detections[i].box.area() < detections[j].box.area() ? i : j;
                } else {
                    loser = j;
                }
                removed[loser] = 1;
            } else if (i_in_j) {
                removed[i] = 1;
            } else if (j_in_i) {
                removed[j] = 1;
            }
        }
    }
    std::vector<Detection> surviving;
    surviving.reserve(n);
    for (int i = 0; i < n; ++i)
        if (!removed[i]) surviving.push_back(detections[i]);
    return surviving;
}

/// Stage 1 of tentative filtering: a tentative track overlapping two or more
/// normal/predicted tracks above the gate is removed. Returns surviving rows.
inline std::vector<int> filter_tentative_stage1(const std::vector<BoundingBox>& tentative_boxes,
                                                const std::vector<BoundingBox>& normal_boxes,
                                                const std::vector<BoundingBox>& predicted_boxes,
                                                const FilterConfig& cfg) {
    std::vector<int> surviving;
    surviving.reserve(tentative_boxes.size());
    for (int t = 0; t < static_cast<int>(tentative_boxes.size()); ++t) {
        int overlaps = 0;
        for (const auto& box : normal_boxes)
            if (ioi(tentative_boxes[t], box) > cfg.ambiguous_ioi_gate) ++overlaps;
        for (const auto& box : predicted_boxes)
            if (ioi(tentative_boxes[t], box) > cfg.ambiguous_ioi_gate) ++overlaps;
        if (overlaps < 2) surviving.push_back(t);
    }
    return surviving;
}

struct TentativeStage2Result {
    std::vector<std::pair<int, int>> kept_tentative_matches;
    std::vector<int> removed_tentative_rows;  // tracks to delete outright
};

/// Stage 2 of tentative filtering: a detection claimed by both a normal and a
/// tentative track keeps the normal match; the tentative track is deleted.
/// Both match sets index the same detection pool.
inline TentativeStage2Result filter_tentative_stage2(
    const std::vector<std::pair<int, int>>& matches_normal,
    const std::vector<std::pair<int, int>>& matches_tentative) {
    TentativeStage2Result result;
    for (const auto& [t_row, det] : matches_tentative) {
        const bool contested = std::any_of(
            matches_normal.begin(), matches_normal.end(),
            [det = det](const std::pair<int, int>& m) { return m.second == det; });
        if (contested) {
            result.removed_tentative_rows.push_back(t_row);
        } else {
            result.kept_tentative_matches.emplace_back(t_row, det);
        }
    }
    return result;
}

struct DetectionStage2Result {
    std::vector<std::pair<int, int>> kept;
    std::vector<std::pair<int, int>> removed;  // match dropped AND detection discarded
};

/// Stage 2 of detection filtering, applied to ReID matches of crowded normal
/// tracks: when the matched appearance distance is nearly tied with another
/// track overlapping the detection, the match is too ambiguous to trust and
/// the detection is discarded for this frame.
inline DetectionStage2Result filter_detections_stage2(
    const std::vector<std::pair<int, int>>& matches,  // (row into matched_*, det index)
    const std::vector<BoundingBox>& det_boxes,
    const std::vector<Descriptor>& det_descriptors,
    const std::vector<const AppearanceGallery*>& matched_galleries,
    const std::vector<int>& matched_ids,
    const std::vector<BoundingBox>& nearby_boxes,  // normal + predicted tracks
    const std::vector<const AppearanceGallery*>& nearby_galleries,
    const std::vector<int>& nearby_ids,
    const FilterConfig& cfg) {
    DetectionStage2Result result;
    for (const auto& match : matches) {
        const auto [t_row, det] = match;
        const Descriptor& descriptor = det_descriptors[det];
        if (descriptor.size() == 0 || matched_galleries[t_row] == nullptr ||
            matched_galleries[t_row]->empty()) {
            result.kept.push_back(match);
            continue;
        }
        std::vector<double> distances;
        distances.push_back(matched_galleries[t_row]->distance(descriptor));
        for (int k = 0; k < static_cast<int>(nearby_boxes.size()); ++k) {
            if (nearby_ids[k] == matched_ids[t_row]) continue;
            if (nearby_galleries[k] == nullptr || nearby_galleries[k]->empty()) continue;
            if (ioi(det_boxes[det], nearby_boxes[k]) <= 0.0) continue;
            distances.push_back(nearby_galleries[k]->distance(descriptor));
        }
        if (distances.size() < 2) {
            result.kept.push_back(match);
            continue;
        }
        std::sort(distances.begin(), distances.end());
        if (distances[1] - distances[0] < cfg.reid_closeness_eps) {
            result.removed.push_back(match);
        } else {
            result.kept.push_back(match);
        }
    }
    return result;
}

/// Stage 3 of detection filtering: an unmatched detection with high IoI
/// against two or more remaining unmatched normal/predicted tracks has more
/// than one potential match and is dropped. Returns surviving det indices.
inline std::vector<int> filter_detections_stage3(const std::vector<int>& det_indices,
                                                 const std::vector<BoundingBox>& det_boxes,
                                                 const std::vector<BoundingBox>& track_boxes,
                                                 const FilterConfig& cfg) {
    std::vector<int> surviving;
    surviving.reserve(det_indices.size());
    for (int det : det_indices) {
        int overlaps = 0;
        for (const auto& track_box : track_boxes) {
            if (ioi(det_boxes[det], track_box) > cfg.ambiguous_ioi_gate) ++overlaps;
        }
        if (overlaps < 2) surviving.push_back(det);
    }
    return surviving;
}

struct PredictedFilterResult {
    std::vector<std::pair<int, int>> accepted;  // (predicted row, det index)
    std::vector<int> to_disappear;
    std::vector<int> to_delete;
    std::vector<int> remaining;          // rows staying predicted
    std::vector<int> updated_isolation;  // row-indexed consecutive zero-IoI frame counts
};

/// Predicted-track filtering. Matches from either metric are dropped when the
/// track-to-detection center distance exceeds thresh3 detection widths; on a
/// conflict over one detection the appearance match wins. Unmatched predicted
/// tracks leave the probability map as disappeared, are deleted once isolated
/// from every normal track long enough, and otherwise stay predicted.
inline PredictedFilterResult filter_predicted(
    const std::vector<std::pair<int, int>>& matches_reid,
    const std::vector<std::pair<int, int>>& matches_iou,
    const std::vector<BoundingBox>& predicted_boxes,
    const std::vector<BoundingBox>& det_boxes,
    const std::vector<BoundingBox>& normal_boxes,
    const std::vector<int>& isolation_before,  // row-indexed, up to previous frame
    const OccupancyGrid& probability_map,
    const OccupancyGrid& prediction_map,
    const MapConfig& map_cfg,
    const FilterConfig& cfg) {
    const int rows = static_cast<int>(predicted_boxes.size());
    PredictedFilterResult result;
    result.updated_isolation.assign(rows, 0);

    const auto passes_distance_gate = [&](const std::pair<int, int>& m) {
        const auto& track_box = predicted_boxes[m.first];
        const auto& det_box = det_boxes[m.second];
        return center_distance(track_box, det_box) / det_box.width <= cfg.thresh3;
    };

    std::vector<char> row_taken(rows, 0);
    std::vector<char> det_taken;
    const auto claim = [&](const std::pair<int, int>& m) {
        if (static_cast<int>(det_taken.size()) <= m.second) det_taken.resize(m.second + 1, 0);
        if (row_taken[m.first] || det_taken[m.second]) return false;
        row_taken[m.first] = 1;
        det_taken[m.second] = 1;
        result.accepted.push_back(m);
        return true;
    };
    // Appearance matches take precedence over IoU matches on any conflict.
    for (const auto& m : matches_reid)
        if (passes_distance_gate(m)) claim(m);
    for (const auto& m : matches_iou)
        if (passes_distance_gate(m)) claim(m);

    for (int row = 0; row < rows; ++row) {
        if (row_taken[row]) continue;
        const BoundingBox& box = predicted_boxes[row];
        bool isolated_now = true;
        for (const auto& normal_box : normal_boxes) {
            if (intersection_area(box, normal_box) > 0.0) {
                isolated_now = false;
                break;
            }
        }
        const int isolation = isolated_now ? isolation_before[row] + 1 : 0;
        result.updated_isolation[row] = isolation;

        if (!in_probability_map(probability_map, box, map_cfg)) {
            result.to_disappear.push_back(row);
        } else if (!is_crowded(prediction_map, box, map_cfg) &&
                   isolation >= cfg.far_ioi_zero_frames) {
            result.to_delete.push_back(row);
        } else {
            result.remaining.push_back(row);
        }
    }
    return result;
}

}  // namespace maptrack
