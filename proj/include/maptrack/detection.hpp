#pragma once

#include "maptrack/association.hpp"
#include "maptrack/geometry.hpp"

#include <vector>

namespace maptrack {

/// One detector output: box, confidence, and (when an embedding sidecar is
/// loaded) a unit-norm appearance descriptor. An empty descriptor means the
/// pipeline runs in motion-only mode for this detection.
struct Detection {
    BoundingBox box;
    double confidence = 1.0;
    Descriptor descriptor;

    bool has_descriptor() const { return descriptor.size() != 0; }
};

/// All detections of one frame, in source-file order.
struct FrameDetections {
    int frame = 0;
    std::vector<Detection> entries;
};

}  // namespace maptrack
