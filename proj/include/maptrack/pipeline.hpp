#pragma once

#include <algorithm>
#include <chrono>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "maptrack/association.hpp"
#include "maptrack/config.hpp"
#include "maptrack/detection.hpp"
#include "maptrack/filtering.hpp"
#include "maptrack/io.hpp"
#include "maptrack/kalman.hpp"
#include "maptrack/occupancy.hpp"
#include "maptrack/track.hpp"

namespace maptrack {

struct TrackOutput {
    int id = 0;
    BoundingBox box;
};

/// Online MapTrack pipeline for one sequence. Frame k outputs depend only on
/// frames <= k. One instance per sequence; per-frame processing is
/// single-threaded and strictly ordered.
class MapTrackPipeline {
public:
    MapTrackPipeline(int frame_width, int frame_height, PipelineConfig cfg)
        : frame_width_(frame_width),
          frame_height_(frame_height),
          cfg_(std::move(cfg)),
          probability_map_(frame_width, frame_height),
          prediction_map_(frame_width, frame_height),
          repository_(cfg_.repository_capacity, cfg_.repository_max_age) {}

    const OccupancyGrid& probability_map() const { return probability_map_; }
    const OccupancyGrid& prediction_map() const { return prediction_map_; }
    const std::vector<Track>& tracks() const { return tracks_; }
    const FeatureRepository& repository() const { return repository_; }

    /// Runs one frame through the full association/filtering cascade and
    /// returns the emitted (id, box) pairs, id-ascending.
    std::vector<TrackOutput> step(int frame_index, const std::vector<Detection>& raw_detections) {
        if (frame_index <= last_frame_) {
            throw std::runtime_error("out-of-order frame " + std::to_string(frame_index) +
                                     " after " + std::to_string(last_frame_));
        }
        last_frame_ = frame_index;

        int with_descriptor = 0;
        for (const auto& d : raw_detections)
            if (d.has_descriptor()) ++with_descriptor;
        if (with_descriptor != 0 && with_descriptor != static_cast<int>(raw_detections.size())) {
            throw std::runtime_error("frame " + std::to_string(frame_index) +
                                     ": descriptor/detection count mismatch");
        }

        // Detection filtering stage 1, then fold this frame into the
        // probability map before anything reads it.
        const std::vector<Detection> dets = cfg_.enable_filters
                                                ? filter_detections_stage1(raw_detections, cfg_.filter)
                                                : raw_detections;
        const bool embeddings = !dets.empty() && dets.front().has_descriptor();

        std::vector<BoundingBox> det_boxes(dets.size());
        std::vector<Descriptor> det_descriptors(dets.size());
        for (std::size_t j = 0; j < dets.size(); ++j) {
            det_boxes[j] = dets[j].box;
            det_descriptors[j] = dets[j].descriptor;
        }
        accumulate_probability(probability_map_, det_boxes);

        // Kalman prediction stage for every live track.
        for (auto& t : tracks_) {
            t.kalman = predict(t.kalman, cfg_.noise);
            t.age += 1;
            t.frames_since_update += 1;
        }

        std::vector<int> tentative_rows, normal_rows, predicted_rows;
        for (int i = 0; i < static_cast<int>(tracks_.size()); ++i) {
            switch (tracks_[i].status) {
                case TrackStatus::kTentative: tentative_rows.push_back(i); break;
                case TrackStatus::kNormal: normal_rows.push_back(i); break;
                case TrackStatus::kPredicted: predicted_rows.push_back(i); break;
                default: break;
            }
        }
        const auto boxes_of = [this](const std::vector<int>& rows) {
            std::vector<BoundingBox> out;
            out.reserve(rows.size());
            for (int i : rows) out.push_back(tracks_[i].box());
            return out;
        };
        const auto galleries_of = [this](const std::vector<int>& rows) {
            std::vector<const AppearanceGallery*> out;
            out.reserve(rows.size());
            for (int i : rows) out.push_back(&tracks_[i].gallery);
            return out;
        };

        const std::vector<BoundingBox> normal_boxes = boxes_of(normal_rows);
        const std::vector<BoundingBox> predicted_boxes = boxes_of(predicted_rows);

        // Per-frame prediction map over normal and predicted tracks.
        {
            std::vector<BoundingBox> np_boxes = normal_boxes;
            np_boxes.insert(np_boxes.end(), predicted_boxes.begin(), predicted_boxes.end());
            prediction_map_ = build_prediction_map(frame_width_, frame_height_, np_boxes);
        }

        // Tentative track filtering stage 1.
        if (cfg_.enable_filters && !tentative_rows.empty()) {
            const auto surviving = filter_tentative_stage1(boxes_of(tentative_rows), normal_boxes,
                                                           predicted_boxes, cfg_.filter);
            std::vector<int> kept;
            kept.reserve(surviving.size());
            std::set<int> kept_set(surviving.begin(), surviving.end());
            for (int r = 0; r < static_cast<int>(tentative_rows.size()); ++r) {
                if (kept_set.count(r)) {
                    kept.push_back(tentative_rows[r]);
                } else {
                    tracks_[tentative_rows[r]].set_status(TrackStatus::kDeleted);
                }
            }
            tentative_rows = std::move(kept);
        }

        // IoU association of tentative tracks against the full detection set.
        const AssignmentResult res_tentative =
            iou_association(boxes_of(tentative_rows), det_boxes, cfg_.association.iou_gate);
        // Unmatched tentative tracks are deleted outright.
        for (int r : res_tentative.unmatched_rows) {
            tracks_[tentative_rows[r]].set_status(TrackStatus::kDeleted);
        }

        // Dual-gate association of normal tracks against the same detection set.
        const AssignmentResult res_normal = dual_gate_associate(
            normal_boxes, galleries_of(normal_rows), det_boxes, det_descriptors, cfg_.association);

        // Tentative track filtering stage 2: normal claims win contested detections.
        const TentativeStage2Result tent2 =
            filter_tentative_stage2(res_normal.matches, res_tentative.matches);
        for (int r : tent2.removed_tentative_rows) {
            tracks_[tentative_rows[r]].set_status(TrackStatus::kDeleted);
        }

        // Global match list (track index, det index) and the unmatched pool UD.
        std::vector<std::pair<int, int>> matched;
        std::vector<char> det_claimed(dets.size(), 0);
        const auto claim = [&](int track_index, int det_index) {
            matched.emplace_back(track_index, det_index);
            det_claimed[det_index] = 1;
        };
        for (const auto& [r, j] : res_normal.matches) claim(normal_rows[r], j);
        for (const auto& [r, j] : tent2.kept_tentative_matches) claim(tentative_rows[r], j);

        std::vector<int> pool;  // UD as indices into dets
        for (int j = 0; j < static_cast<int>(dets.size()); ++j)
            if (!det_claimed[j]) pool.push_back(j);

        // Split unmatched normals into crowded and uncrowded via the prediction map.
        std::vector<int> crowded_rows, uncrowded_rows;
        for (int r : res_normal.unmatched_rows) {
            const int track_index = normal_rows[r];
            if (embeddings && is_crowded(prediction_map_, tracks_[track_index].box(), cfg_.map)) {
                crowded_rows.push_back(track_index);
            } else {
                uncrowded_rows.push_back(track_index);
            }
        }

        const auto pool_boxes = [&]() {
            std::vector<BoundingBox> out;
            out.reserve(pool.size());
            for (int j : pool) out.push_back(dets[j].box);
            return out;
        };
        const auto pool_descriptors = [&]() {
            std::vector<Descriptor> out;
            out.reserve(pool.size());
            for (int j : pool) out.push_back(det_descriptors[j]);
            return out;
        };
        const auto remove_from_pool = [&](const std::vector<int>& det_indices) {
            std::erase_if(pool, [&](int j) {
                return std::find(det_indices.begin(), det_indices.end(), j) != det_indices.end();
            });
        };

        std::vector<int> unmatched_normal_rows;

        // IoU association for uncrowded unmatched normals over the pool.
        {
            const AssignmentResult res =
                iou_association(boxes_of(uncrowded_rows), pool_boxes(), cfg_.association.iou_gate);
            std::vector<int> consumed;
            for (const auto& [r, c] : res.matches) {
                claim(uncrowded_rows[r], pool[c]);
                consumed.push_back(pool[c]);
            }
            for (int r : res.unmatched_rows) unmatched_normal_rows.push_back(uncrowded_rows[r]);
            remove_from_pool(consumed);
        }

        // ReID association for crowded unmatched normals, then detection
        // filtering stage 2 over those appearance matches.
        if (!crowded_rows.empty()) {
            const AssignmentResult res = reid_association(galleries_of(crowded_rows),
                                                          pool_descriptors(), cfg_.association.reid_gate);
            std::vector<std::pair<int, int>> reid_matches;  // (row into crowded_rows, det index)
            for (const auto& [r, c] : res.matches) reid_matches.emplace_back(r, pool[c]);

            std::vector<char> row_matched(crowded_rows.size(), 0);
            std::vector<int> consumed;
            if (cfg_.enable_filters && !reid_matches.empty()) {
                std::vector<int> matched_ids, nearby_ids;
                std::vector<BoundingBox> nearby_boxes;
                std::vector<const AppearanceGallery*> nearby_galleries;
                for (int i : crowded_rows) matched_ids.push_back(tracks_[i].id);
                for (int i : normal_rows) {
                    nearby_ids.push_back(tracks_[i].id);
                    nearby_boxes.push_back(tracks_[i].box());
                    nearby_galleries.push_back(&tracks_[i].gallery);
                }
                for (int i : predicted_rows) {
                    nearby_ids.push_back(tracks_[i].id);
                    nearby_boxes.push_back(tracks_[i].box());
                    nearby_galleries.push_back(&tracks_[i].gallery);
                }
                const DetectionStage2Result stage2 = filter_detections_stage2(
                    reid_matches, det_boxes, det_descriptors, galleries_of(crowded_rows),
                    matched_ids, nearby_boxes, nearby_galleries, nearby_ids, cfg_.filter);
                for (const auto& [r, j] : stage2.kept) {
                    claim(crowded_rows[r], j);
                    row_matched[r] = 1;
                    consumed.push_back(j);
                }
                // Ambiguous appearance matches discard the detection entirely.
                for (const auto& [r, j] : stage2.removed) consumed.push_back(j);
            } else {
                for (const auto& [r, j] : reid_matches) {
                    claim(crowded_rows[r], j);
                    row_matched[r] = 1;
                    consumed.push_back(j);
                }
            }
            for (int r = 0; r < static_cast<int>(crowded_rows.size()); ++r)
                if (!row_matched[r]) unmatched_normal_rows.push_back(crowded_rows[r]);
            remove_from_pool(consumed);
        }
        std::sort(unmatched_normal_rows.begin(), unmatched_normal_rows.end());

        // Detection filtering stage 3 against remaining unmatched normal and
        // predicted tracks.
        if (cfg_.enable_filters && !pool.empty()) {
            std::vector<BoundingBox> candidate_boxes = boxes_of(unmatched_normal_rows);
            candidate_boxes.insert(candidate_boxes.end(), predicted_boxes.begin(),
                                   predicted_boxes.end());
            pool = filter_detections_stage3(pool, det_boxes, candidate_boxes, cfg_.filter);
        }

        // IoU and ReID association of predicted tracks over the same pool,
        // reconciled by the predicted-track filter.
        {
            const AssignmentResult res_iou =
                iou_association(predicted_boxes, pool_boxes(), cfg_.association.iou_gate);
            AssignmentResult res_reid;
            if (embeddings) {
                res_reid = reid_association(galleries_of(predicted_rows), pool_descriptors(),
                                            cfg_.association.reid_gate);
            }
            std::vector<std::pair<int, int>> matches_iou, matches_reid;
            for (const auto& [r, c] : res_iou.matches) matches_iou.emplace_back(r, pool[c]);
            for (const auto& [r, c] : res_reid.matches) matches_reid.emplace_back(r, pool[c]);

            std::vector<int> isolation_before;
            for (int i : predicted_rows) isolation_before.push_back(tracks_[i].frames_isolated);

            const PredictedFilterResult pf = filter_predicted(
                matches_reid, matches_iou, predicted_boxes, det_boxes, normal_boxes,
                isolation_before, probability_map_, prediction_map_, cfg_.map, cfg_.filter);

            std::vector<int> consumed;
            for (const auto& [r, j] : pf.accepted) {
                claim(predicted_rows[r], j);
                consumed.push_back(j);
            }
            remove_from_pool(consumed);
            for (int r : pf.to_disappear) predicted_to_disappear_.push_back(predicted_rows[r]);
            for (int r : pf.to_delete) predicted_to_delete_.push_back(predicted_rows[r]);
            for (int r = 0; r < static_cast<int>(predicted_rows.size()); ++r)
                tracks_[predicted_rows[r]].frames_isolated = pf.updated_isolation[r];
        }

        // ReID association of disappeared tracks from the feature repository.
        std::vector<std::pair<std::size_t, int>> repo_matches;  // (repo index, det index)
        if (embeddings && repository_.size() > 0 && !pool.empty()) {
            std::vector<const AppearanceGallery*> repo_galleries;
            for (const auto& e : repository_.entries()) repo_galleries.push_back(&e.gallery);
            const AssignmentResult res =
                reid_association(repo_galleries, pool_descriptors(), cfg_.association.reid_gate);
            std::vector<int> consumed;
            for (const auto& [r, c] : res.matches) {
                repo_matches.emplace_back(static_cast<std::size_t>(r), pool[c]);
                consumed.push_back(pool[c]);
            }
            remove_from_pool(consumed);
        }

        post_process(frame_index, dets, matched, repo_matches, unmatched_normal_rows, pool);
        return emit();
    }

    /// Iterates step() over a frame-ordered detection stream.
    std::vector<ResultRow> run(const std::vector<FrameDetections>& stream, int frame_count) {
        std::map<int, const FrameDetections*> by_frame;
        int prev = 0;
        for (const auto& f : stream) {
            if (f.frame <= prev) {
                throw std::runtime_error("detection stream not strictly frame-ordered at frame " +
                                         std::to_string(f.frame));
            }
            prev = f.frame;
            by_frame[f.frame] = &f;
        }
        const int last = frame_count > 0 ? frame_count : prev;
        std::vector<ResultRow> rows;
        static const std::vector<Detection> kNoDetections;
        for (int frame = 1; frame <= last; ++frame) {
            const auto it = by_frame.find(frame);
            const auto outputs = step(frame, it == by_frame.end() ? kNoDetections : it->second->entries);
            for (const auto& o : outputs) rows.push_back(ResultRow{frame, o.id, o.box});
        }
        return rows;
    }

private:
    void post_process(int frame_index, const std::vector<Detection>& dets,
                      std::vector<std::pair<int, int>>& matched,
                      const std::vector<std::pair<std::size_t, int>>& repo_matches,
                      const std::vector<int>& unmatched_normal_rows,
                      const std::vector<int>& unmatched_dets) {
        // Update matched tracks with the covariance-adaptive Kalman filter.
        std::sort(matched.begin(), matched.end());
        for (const auto& [track_index, det_index] : matched) {
            Track& t = tracks_[track_index];
            const Detection& det = dets[det_index];
            const double d = deformation_ratio(t.box(), det.box);
            const TrackClass cls = t.status == TrackStatus::kPredicted
                                       ? TrackClass::kPredicted
                                       : TrackClass::kNormalOrTentative;
            const double multiplier = covariance_multiplier(d, cls, cfg_.noise);
            t.kalman = update(t.kalman, det.box, multiplier, cfg_.noise);
            if (det.has_descriptor()) t.gallery.push(det.descriptor);
            t.hits += 1;
            t.frames_since_update = 0;
            t.frames_isolated = 0;
            if (t.status == TrackStatus::kTentative) {
                if (t.hits >= cfg_.n_init) t.set_status(TrackStatus::kNormal);
            } else if (t.status == TrackStatus::kPredicted) {
                t.set_status(TrackStatus::kNormal);
            }
        }

        // Re-identified disappeared tracks re-enter as normal with a fresh
        // motion state centred on the detection (their old state is stale).
        {
            std::vector<std::size_t> indices;
            std::map<std::size_t, int> det_of;
            for (const auto& [repo_index, det_index] : repo_matches) {
                indices.push_back(repo_index);
                det_of[repo_index] = det_index;
            }
            std::sort(indices.rbegin(), indices.rend());
            for (std::size_t repo_index : indices) {
                RepositoryEntry entry = repository_.take(repo_index);
                const Detection& det = dets[det_of[repo_index]];
                Track t;
                t.id = entry.id;
                t.status = TrackStatus::kNormal;
                t.kalman = init_state(det.box, cfg_.noise);
                t.gallery = std::move(entry.gallery);
                if (det.has_descriptor()) t.gallery.push(det.descriptor);
                t.hits = 1;
                tracks_.push_back(std::move(t));
            }
        }

        // Unmatched normal tracks coast as predicted while the probability map
        // supports them, otherwise they disappear into the repository.
        for (int track_index : unmatched_normal_rows) {
            Track& t = tracks_[track_index];
            if (!cfg_.baseline_deletion &&
                in_probability_map(probability_map_, t.box(), cfg_.map)) {
                t.set_status(TrackStatus::kPredicted);
            } else {
                t.set_status(TrackStatus::kDisappeared);
                if (!cfg_.baseline_deletion) {
                    repository_.insert(RepositoryEntry{t.id, t.gallery, frame_index, t.box()});
                }
            }
        }

        for (int track_index : predicted_to_disappear_) {
            Track& t = tracks_[track_index];
            t.set_status(TrackStatus::kDisappeared);
            repository_.insert(RepositoryEntry{t.id, t.gallery, frame_index, t.box()});
        }
        predicted_to_disappear_.clear();
        for (int track_index : predicted_to_delete_) {
            tracks_[track_index].set_status(TrackStatus::kDeleted);
        }
        predicted_to_delete_.clear();

        // Age cap: a track cannot coast forever on predictions alone.
        for (auto& t : tracks_) {
            if (t.status == TrackStatus::kPredicted &&
                t.frames_since_update > cfg_.max_predicted_age) {
                t.set_status(TrackStatus::kDisappeared);
                repository_.insert(RepositoryEntry{t.id, t.gallery, frame_index, t.box()});
            }
        }

        // Remaining unmatched detections start new tentative tracks.
        for (int det_index : unmatched_dets) {
            const Detection& det = dets[det_index];
            Track t;
            t.id = next_id_++;
            t.status = 1 >= cfg_.n_init ? TrackStatus::kNormal : TrackStatus::kTentative;
            t.kalman = init_state(det.box, cfg_.noise);
            t.gallery = AppearanceGallery(cfg_.association.gallery_capacity);
            if (det.has_descriptor()) t.gallery.push(det.descriptor);
            tracks_.push_back(std::move(t));
        }

        repository_.evict_stale(frame_index);
        std::erase_if(tracks_, [](const Track& t) {
            return t.status == TrackStatus::kDeleted || t.status == TrackStatus::kDisappeared;
        });
    }

    std::vector<TrackOutput> emit() const {
        std::vector<TrackOutput> out;
        for (const auto& t : tracks_) {
            if (t.status == TrackStatus::kNormal ||
                (t.status == TrackStatus::kPredicted && cfg_.emit_predicted)) {
                out.push_back(TrackOutput{t.id, t.box()});
            }
        }
        std::sort(out.begin(), out.end(),
                  [](const TrackOutput& a, const TrackOutput& b) { return a.id < b.id; });
        return out;
    }

    int frame_width_;
    int frame_height_;
    PipelineConfig cfg_;
    OccupancyGrid probability_map_;
    OccupancyGrid prediction_map_;
    std::vector<Track> tracks_;
    FeatureRepository repository_;
    std::vector<int> predicted_to_disappear_;
    std::vector<int> predicted_to_delete_;
    int next_id_ = 1;
    int last_frame_ = 0;
};

/// SORT-style comparator: constant-velocity Kalman prediction, IoU-gated
/// global assignment, and deletion after a single missed frame.
class BaselineTracker {
public:
    BaselineTracker(int /*frame_width*/, int /*frame_height*/, PipelineConfig cfg)
        : cfg_(std::move(cfg)) {}

    std::vector<TrackOutput> step(int frame_index, const std::vector<Detection>& detections) {
        if (frame_index <= last_frame_) {
            throw std::runtime_error("out-of-order frame " + std::to_string(frame_index));
        }
        last_frame_ = frame_index;

        for (auto& t : tracks_) t.kalman = predict(t.kalman, cfg_.noise);

        std::vector<BoundingBox> track_boxes;
        for (const auto& t : tracks_) track_boxes.push_back(t.kalman.box());
        std::vector<BoundingBox> det_boxes;
        for (const auto& d : detections) det_boxes.push_back(d.box);

        const AssignmentResult res =
            iou_association(track_boxes, det_boxes, cfg_.association.iou_gate);

        std::vector<char> keep(tracks_.size(), 0);
        for (const auto& [r, j] : res.matches) {
            BaselineTrack& t = tracks_[r];
            t.kalman = update(t.kalman, detections[j].box, 1.0, cfg_.noise);
            t.hits += 1;
            keep[r] = 1;
        }
        std::vector<BaselineTrack> survivors;
        for (std::size_t r = 0; r < tracks_.size(); ++r)
            if (keep[r]) survivors.push_back(std::move(tracks_[r]));
        tracks_ = std::move(survivors);

        for (int j : res.unmatched_cols) {
            BaselineTrack t;
            t.id = next_id_++;
            t.kalman = init_state(detections[j].box, cfg_.noise);
            t.hits = 1;
            tracks_.push_back(std::move(t));
        }

        std::vector<TrackOutput> out;
        for (const auto& t : tracks_) {
            if (t.hits >= cfg_.n_init) out.push_back(TrackOutput{t.id, t.kalman.box()});
        }
        std::sort(out.begin(), out.end(),
                  [](const TrackOutput& a, const TrackOutput& b) { return a.id < b.id; });
        return out;
    }

    std::vector<ResultRow> run(const std::vector<FrameDetections>& stream, int frame_count) {
        std::map<int, const FrameDetections*> by_frame;
        int prev = 0;
        for (const auto& f : stream) {
            if (f.frame <= prev) {
                throw std::runtime_error("detection stream not strictly frame-ordered at frame " +
                                         std::to_string(f.frame));
            }
            prev = f.frame;
            by_frame[f.frame] = &f;
        }
        const int last = frame_count > 0 ? frame_count : prev;
        std::vector<ResultRow> rows;
        static const std::vector<Detection> kNoDetections;
        for (int frame = 1; frame <= last; ++frame) {
            const auto it = by_frame.find(frame);
            const auto outputs = step(frame, it == by_frame.end() ? kNoDetections : it->second->entries);
            for (const auto& o : outputs) rows.push_back(ResultRow{frame, o.id, o.box});
        }
        return rows;
    }

private:
    struct BaselineTrack {
        int id = 0;
        KalmanTrackState kalman;
        int hits = 0;
    };

    PipelineConfig cfg_;
    std::vector<BaselineTrack> tracks_;
    int next_id_ = 1;
    int last_frame_ = 0;
};

enum class TrackerMode { kMapTrack, kBaseline };

struct SequenceRunResult {
    std::vector<ResultRow> rows;
    int frames_processed = 0;
    int distinct_ids = 0;
    double seconds = 0.0;
};

/// Runs a full sequence through the selected tracker. Deterministic given
/// identical inputs and configuration.
inline SequenceRunResult run_sequence(const std::vector<FrameDetections>& stream,
                                      const SequenceMeta& meta, const PipelineConfig& cfg,
                                      TrackerMode mode = TrackerMode::kMapTrack) {
    SequenceRunResult result;
    const auto t0 = std::chrono::steady_clock::now();
    if (mode == TrackerMode::kBaseline) {
        BaselineTracker tracker(meta.frame_width, meta.frame_height, cfg);
        result.rows = tracker.run(stream, meta.frame_count);
    } else {
        MapTrackPipeline pipeline(meta.frame_width, meta.frame_height, cfg);
        result.rows = pipeline.run(stream, meta.frame_count);
    }
    const auto t1 = std::chrono::steady_clock::now();
    result.seconds = std::chrono::duration<double>(t1 - t0).count();
    result.frames_processed =
        meta.frame_count > 0 ? meta.frame_count : (stream.empty() ? 0 : stream.back().frame);
    std::set<int> ids;
    for (const auto& row : result.rows) ids.insert(row.id);
    result.distinct_ids = static_cast<int>(ids.size());
    return result;
}

}  // namespace maptrack
