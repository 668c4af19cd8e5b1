#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "maptrack/association.hpp"
#include "maptrack/geometry.hpp"
#include "maptrack/io.hpp"

namespace maptrack {

struct EvalReport {
    double mota = 0.0;
    double idf1 = 0.0;
    int idsw = 0;
    int frag = 0;
    int fp = 0;
    int fn = 0;
    int gt_count = 0;
    int hyp_count = 0;
    int idtp = 0;
};

namespace metrics_detail {

struct FrameEntry {
    int id;
    BoundingBox box;
};

inline std::map<int, std::vector<FrameEntry>> group(const std::vector<MotRow>& rows) {
    std::map<int, std::vector<FrameEntry>> out;
    for (const auto& row : rows) out[row.frame].push_back(FrameEntry{row.id, row.box});
    for (auto& [frame, entries] : out) {
        std::stable_sort(entries.begin(), entries.end(),
                         [](const FrameEntry& a, const FrameEntry& b) { return a.id < b.id; });
    }
    return out;
}

}  // namespace metrics_detail

/// CLEAR-MOT + identity metrics over parsed rows. Per-frame matching is
/// Hungarian on IoU with the standard persistence bias: a pairing from the
/// previous frame is carried over while its IoU stays above the threshold.
inline EvalReport evaluate_rows(const std::vector<MotRow>& gt_rows,
                                const std::vector<MotRow>& hyp_rows, double iou_threshold = 0.5) {
    const auto gt_frames = metrics_detail::group(gt_rows);
    const auto hyp_frames = metrics_detail::group(hyp_rows);

    std::set<int> frames;
    for (const auto& [f, _] : gt_frames) frames.insert(f);
    for (const auto& [f, _] : hyp_frames) frames.insert(f);

    EvalReport report;
    std::map<int, int> carry;             // previous-frame pairing gt_id -> hyp_id
    std::map<int, int> last_matched_hyp;  // most recent matched hyp id per gt id
    std::map<int, bool> was_matched;      // state at the gt id's previous present frame

    // Frame-count overlap per (gt id, hyp id) pair for the global ID matching.
    std::map<std::pair<int, int>, int> overlap;
    std::set<int> gt_ids, hyp_ids;

    static const std::vector<metrics_detail::FrameEntry> kEmpty;
    for (int frame : frames) {
        const auto git = gt_frames.find(frame);
        const auto hit = hyp_frames.find(frame);
        const auto& gts = git == gt_frames.end() ? kEmpty : git->second;
        const auto& hyps = hit == hyp_frames.end() ? kEmpty : hit->second;

        for (const auto& g : gts) gt_ids.insert(g.id);
        for (const auto& h : hyps) hyp_ids.insert(h.id);
        for (const auto& g : gts) {
            for (const auto& h : hyps) {
                if (iou(g.box, h.box) >= iou_threshold) ++overlap[{g.id, h.id}];
            }
        }

        std::vector<char> g_used(gts.size(), 0), h_used(hyps.size(), 0);
        std::vector<std::pair<int, int>> pairs;  // indices into gts/hyps

        // Persistence bias first.
        for (std::size_t gi = 0; gi < gts.size(); ++gi) {
            const auto it = carry.find(gts[gi].id);
            if (it == carry.end()) continue;
            for (std::size_t hi = 0; hi < hyps.size(); ++hi) {
                if (h_used[hi] || hyps[hi].id != it->second) continue;
                if (iou(gts[gi].box, hyps[hi].box) >= iou_threshold) {
                    pairs.emplace_back(static_cast<int>(gi), static_cast<int>(hi));
                    g_used[gi] = 1;
                    h_used[hi] = 1;
                }
                break;
            }
        }

        // Optimal assignment over the rest.
        std::vector<int> free_g, free_h;
        for (std::size_t gi = 0; gi < gts.size(); ++gi)
            if (!g_used[gi]) free_g.push_back(static_cast<int>(gi));
        for (std::size_t hi = 0; hi < hyps.size(); ++hi)
            if (!h_used[hi]) free_h.push_back(static_cast<int>(hi));
        if (!free_g.empty() && !free_h.empty()) {
            Eigen::MatrixXd cost(free_g.size(), free_h.size());
            Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> infeasible(free_g.size(),
                                                                          free_h.size());
            for (std::size_t r = 0; r < free_g.size(); ++r) {
                for (std::size_t c = 0; c < free_h.size(); ++c) {
                    const double overlap_rc = iou(gts[free_g[r]].box, hyps[free_h[c]].box);
                    cost(r, c) = 1.0 - overlap_rc;
                    infeasible(r, c) = overlap_rc < iou_threshold;
                }
            }
            const AssignmentResult res = solve_assignment(cost, infeasible);
            for (const auto& [r, c] : res.matches) pairs.emplace_back(free_g[r], free_h[c]);
        }

        report.gt_count += static_cast<int>(gts.size());
        report.hyp_count += static_cast<int>(hyps.size());
        report.fp += static_cast<int>(hyps.size()) - static_cast<int>(pairs.size());
        report.fn += static_cast<int>(gts.size()) - static_cast<int>(pairs.size());

        std::map<int, int> now;
        std::set<int> matched_gt;
        for (const auto& [gi, hi] : pairs) {
            const int g_id = gts[gi].id;
            const int h_id = hyps[hi].id;
            const auto last = last_matched_hyp.find(g_id);
            if (last != last_matched_hyp.end() && last->second != h_id) ++report.idsw;
            last_matched_hyp[g_id] = h_id;
            now[g_id] = h_id;
            matched_gt.insert(g_id);
        }
        for (const auto& g : gts) {
            const bool matched_now = matched_gt.count(g.id) > 0;
            const auto prev = was_matched.find(g.id);
            if (prev != was_matched.end() && prev->second && !matched_now) ++report.frag;
            was_matched[g.id] = matched_now;
        }
        carry = std::move(now);
    }

    // Global trajectory-level identity matching (maximize matched frames).
    if (!gt_ids.empty() && !hyp_ids.empty()) {
        const std::vector<int> g_list(gt_ids.begin(), gt_ids.end());
        const std::vector<int> h_list(hyp_ids.begin(), hyp_ids.end());
        Eigen::MatrixXd cost(g_list.size(), h_list.size());
        Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> infeasible(g_list.size(),
                                                                      h_list.size());
        for (std::size_t r = 0; r < g_list.size(); ++r) {
            for (std::size_t c = 0; c < h_list.size(); ++c) {
                const auto it = overlap.find({g_list[r], h_list[c]});
                const int frames_together = it == overlap.end() ? 0 : it->second;
                cost(r, c) = -static_cast<double>(frames_together);
                infeasible(r, c) = frames_together == 0;
            }
        }
        const AssignmentResult res = solve_assignment(cost, infeasible);
        for (const auto& [r, c] : res.matches) {
            report.idtp += overlap.at({g_list[r], h_list[c]});
        }
    }
    const int idfp = report.hyp_count - report.idtp;
    const int idfn = report.gt_count - report.idtp;
    const double denom = 2.0 * report.idtp + idfp + idfn;
    report.idf1 = denom > 0 ? 2.0 * report.idtp / denom
                            : (report.gt_count == 0 && report.hyp_count == 0 ? 1.0 : 0.0);
    report.mota = report.gt_count > 0
                      ? 1.0 - static_cast<double>(report.fp + report.fn + report.idsw) /
                                  report.gt_count
                      : (report.fp + report.idsw == 0 ? 1.0 : 0.0);
    return report;
}

/// Rows considered by the evaluator on the ground-truth side: the MOT
/// convention keeps entries whose consider flag is nonzero and whose class is
/// pedestrian (or unlabelled).
inline std::vector<MotRow> filter_gt_rows(std::vector<MotRow> rows) {
    std::erase_if(rows, [](const MotRow& row) {
        if (row.fields >= 8 && row.conf == 0.0) return true;  // consider flag off
        if (row.fields >= 8 && row.f8 != 1.0 && row.f8 != -1.0) return true;
        return false;
    });
    return rows;
}

inline EvalReport evaluate(const std::string& gt_path, const std::string& result_path,
                           double iou_threshold = 0.5) {
    const auto gt = filter_gt_rows(read_mot_rows(gt_path));
    const auto hyp = read_mot_rows(result_path);
    return evaluate_rows(gt, hyp, iou_threshold);
}

}  // namespace maptrack
