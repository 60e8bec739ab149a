#ifndef TADKIT_GEOMETRY_HPP
#define TADKIT_GEOMETRY_HPP

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "tadkit/errors.hpp"

namespace tadkit {

// Half-open temporal segment [start, end) in seconds. Zero and negative
// length are rejected at construction.
struct Interval {
    double start = 0.0;
    double end = 0.0;

    Interval() = default;
    Interval(double s, double e) : start(s), end(e) {
        if (!(end > start)) {
            throw DataError("interval end must exceed start: [" + std::to_string(s) + ", " +
                            std::to_string(e) + ")");
        }
    }

    double length() const { return end - start; }
    double center() const { return 0.5 * (start + end); }

    bool operator==(const Interval& o) const { return start == o.start && end == o.end; }
};

inline double overlap_length(const Interval& a, const Interval& b) {
    return std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
}

inline double tiou(const Interval& a, const Interval& b) {
    const double inter = overlap_length(a, b);
    const double uni = a.length() + b.length() - inter;
    return inter / uni;
}

// Smallest segment covering both inputs.
inline Interval enclosing(const Interval& a, const Interval& b) {
    return Interval(std::min(a.start, b.start), std::max(a.end, b.end));
}

inline Interval clamp_interval(const Interval& x, double lo, double hi) {
    double s = std::clamp(x.start, lo, hi);
    double e = std::clamp(x.end, lo, hi);
    if (!(e > s)) {
        // Degenerate after clamping; keep a minimal sliver at the border so
        // downstream score sorting still has a valid interval to carry.
        const double eps = 1e-9;
        if (s >= hi) { s = hi - eps; e = hi; }
        else { e = s + eps; }
    }
    return Interval(s, e);
}

}  // namespace tadkit

#endif
