#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>

namespace maptrack {

/// Axis-aligned bounding box in continuous pixel coordinates,
/// stored as (left, top, width, height) following the MOT file convention.
/// Center form is always derived, never stored.
struct BoundingBox {
    double left = 0.0;
    double top = 0.0;
    double width = 0.0;   // > 0
    double height = 0.0;  // > 0

    double area() const { return width * height; }
    double right() const { return left + width; }
    double bottom() const { return top + height; }
    double center_x() const { return left + width / 2.0; }
    double center_y() const { return top + height / 2.0; }

    bool valid() const { return width > 0.0 && height > 0.0; }

    static BoundingBox from_center(double cx, double cy, double w, double h) {
        return BoundingBox{cx - w / 2.0, cy - h / 2.0, w, h};
    }
};

/// Overlap area of two boxes. Touching edges count as zero overlap.
inline double intersection_area(const BoundingBox& a, const BoundingBox& b) {
    const double w = std::min(a.right(), b.right()) - std::max(a.left, b.left);
    const double h = std::min(a.bottom(), b.bottom()) - std::max(a.top, b.top);
    if (w <= 0.0 || h <= 0.0) return 0.0;
    return w * h;
}

/// Intersection over Union. Symmetric, in [0, 1], 0 when disjoint.
inline double iou(const BoundingBox& a, const BoundingBox& b) {
    assert(a.valid() && b.valid());
    const double inter = intersection_area(a, b);
    if (inter <= 0.0) return 0.0;
    return inter / (a.area() + b.area() - inter);
}

/// Intersection over Itself: overlap area divided by the subject's own area.
/// Asymmetric; equals 1 exactly when the subject lies inside `other`.
inline double ioi(const BoundingBox& subject, const BoundingBox& other) {
    assert(subject.valid() && other.valid());
    return intersection_area(subject, other) / subject.area();
}

inline double center_distance(const BoundingBox& a, const BoundingBox& b) {
    const double dx = a.center_x() - b.center_x();
    const double dy = a.center_y() - b.center_y();
    return std::sqrt(dx * dx + dy * dy);
}

}  // namespace maptrack
