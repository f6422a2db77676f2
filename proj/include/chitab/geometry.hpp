#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace chitab {

// Axis-aligned rectangle in image-pixel coordinates. y grows downward.
struct BBox {
    double x_min = 0.0;
    double y_min = 0.0;
    double x_max = 0.0;
    double y_max = 0.0;

    double width() const { return x_max - x_min; }
    double height() const { return y_max - y_min; }
    double center_y() const { return 0.5 * (y_min + y_max); }

    bool valid() const {
        return std::isfinite(x_min) && std::isfinite(y_min) && std::isfinite(x_max) &&
               std::isfinite(y_max) && x_min <= x_max && y_min <= y_max;
    }

    bool operator==(const BBox&) const = default;
};

struct HInterval {
    double lo = 0.0;
    double hi = 0.0;

    double length() const { return hi - lo; }
};

inline HInterval h_projection(const BBox& b) { return {b.x_min, b.x_max}; }

inline HInterval intersect(const HInterval& a, const HInterval& b) {
    double lo = std::max(a.lo, b.lo);
    double hi = std::min(a.hi, b.hi);
    if (hi < lo) return {0.0, 0.0};
    return {lo, hi};
}

// Positive-area overlap; edge or corner contact does not count.
inline bool intersects(const BBox& a, const BBox& b) {
    return std::min(a.x_max, b.x_max) > std::max(a.x_min, b.x_min) &&
           std::min(a.y_max, b.y_max) > std::max(a.y_min, b.y_min);
}

// Fraction of the column's width covered by the cell's x-projection.
inline double h_overlap_fraction(const BBox& cell, const BBox& column) {
    double w = column.width();
    if (!(w > 0.0)) {
        throw std::invalid_argument("h_overlap_fraction: column has zero width");
    }
    HInterval ov = intersect(h_projection(cell), h_projection(column));
    return ov.length() / w;
}

// Non-strict horizontal containment with slack eps.
inline bool h_contains(const BBox& outer, const BBox& inner, double eps) {
    return outer.x_min - eps <= inner.x_min && inner.x_max <= outer.x_max + eps;
}

}  // namespace chitab
