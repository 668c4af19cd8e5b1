#pragma once

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "maptrack/association.hpp"
#include "maptrack/kalman.hpp"

namespace maptrack {

enum class TrackStatus { kTentative, kNormal, kPredicted, kDisappeared, kDeleted };

inline const char* to_string(TrackStatus s) {
    switch (s) {
        case TrackStatus::kTentative: return "tentative";
        case TrackStatus::kNormal: return "normal";
        case TrackStatus::kPredicted: return "predicted";
        case TrackStatus::kDisappeared: return "disappeared";
        case TrackStatus::kDeleted: return "deleted";
    }
    return "?";
}

/// Legal lifecycle moves. Self-transitions are no-ops and always allowed.
inline bool transition_allowed(TrackStatus from, TrackStatus to) {
    if (from == to) return true;
    switch (from) {
        case TrackStatus::kTentative:
            return to == TrackStatus::kNormal || to == TrackStatus::kDeleted;
        case TrackStatus::kNormal:
            return to == TrackStatus::kPredicted || to == TrackStatus::kDisappeared;
        case TrackStatus::kPredicted:
            return to == TrackStatus::kNormal || to == TrackStatus::kDisappeared ||
                   to == TrackStatus::kDeleted;
        case TrackStatus::kDisappeared:
            return to == TrackStatus::kNormal || to == TrackStatus::kDeleted;
        case TrackStatus::kDeleted:
            return false;
    }
    return false;
}

/// One tracked identity. Ids are never reused within a sequence.
struct Track {
    int id = 0;
    TrackStatus status = TrackStatus::kTentative;
    KalmanTrackState kalman;
    AppearanceGallery gallery;
    int hits = 1;                 // consecutive successful associations
    int frames_since_update = 0;
    int frames_isolated = 0;      // consecutive frames with zero IoI vs normal tracks
    int age = 0;                  // frames since creation

    BoundingBox box() const { return kalman.box(); }

    void set_status(TrackStatus to) {
        if (!transition_allowed(status, to)) {
            throw std::logic_error(std::string("illegal track transition ") +
                                   to_string(status) + " -> " + to_string(to));
        }
        status = to;
    }
};

/// Snapshot of a disappeared track held for appearance re-identification.
struct RepositoryEntry {
    int id = 0;
    AppearanceGallery gallery;
    int last_seen_frame = 0;
    BoundingBox last_box;
};

/// Bounded store of disappeared tracks. Evicts by age and, beyond capacity,
/// oldest last-seen first.
class FeatureRepository {
public:
    FeatureRepository(std::size_t capacity, int max_age)
        : capacity_(capacity), max_age_(max_age) {}

    void insert(RepositoryEntry entry) {
        entries_.push_back(std::move(entry));
        while (entries_.size() > capacity_) {
            auto oldest = std::min_element(entries_.begin(), entries_.end(),
                                           [](const RepositoryEntry& a, const RepositoryEntry& b) {
                                               return a.last_seen_frame < b.last_seen_frame;
                                           });
            entries_.erase(oldest);
        }
    }

    /// Drops entries not seen within max_age frames of `current_frame`.
    void evict_stale(int current_frame) {
        std::erase_if(entries_, [&](const RepositoryEntry& e) {
            return current_frame - e.last_seen_frame > max_age_;
        });
    }

    /// Removes and returns the entry at position `index`.
    RepositoryEntry take(std::size_t index) {
        RepositoryEntry out = std::move(entries_.at(index));
        entries_.erase(entries_.begin() + static_cast<std::ptrdiff_t>(index));
        return out;
    }

    const std::vector<RepositoryEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    std::size_t capacity() const { return capacity_; }

private:
    std::size_t capacity_;
    int max_age_;
    std::vector<RepositoryEntry> entries_;
};

}  // namespace maptrack
