#pragma once

#include "maptrack/association.hpp"
#include "maptrack/filtering.hpp"
#include "maptrack/kalman.hpp"
#include "maptrack/occupancy.hpp"

namespace maptrack {

struct PipelineConfig {
    int n_init = 3;                        // consecutive hits for tentative -> normal
    int max_predicted_age = 60;            // frames a track may coast before disappearing
    std::size_t repository_capacity = 200; // disappeared tracks held for re-identification
    int repository_max_age = 900;          // frames before a repository entry is dropped
    bool emit_predicted = true;            // include predicted tracks in results
    double min_confidence = 0.25;          // detector confidence threshold

    // Diagnostic switches for A/B comparisons; both default to the full pipeline.
    bool enable_filters = true;     // IoI-based detection/track filtering stages
    bool baseline_deletion = false; // unmatched normal tracks exit instead of coasting

    NoiseConfig noise;
    MapConfig map;
    AssociationConfig association;
    FilterConfig filter;
};

}  // namespace maptrack
