#ifndef TADKIT_TARGETS_HPP
#define TADKIT_TARGETS_HPP

#include <cstddef>
#include <vector>

#include "tadkit/geometry.hpp"
#include "tadkit/types.hpp"

namespace tadkit {

// One pyramid level as seen by the candidate machinery.
struct PyramidLevel {
    double stride_sec = 0.0;  // seconds per feature step
    int t_len = 0;            // temporal length of the level
};

// Translation-invariant multi-scale anchors: at level l, location i, scale k
// the anchor is centered at (i + 0.5) * stride with length
// base * stride * 2^(k / n_scales).
struct AnchorSet {
    std::vector<PyramidLevel> levels;
    double base_factor = 2.0;
    int n_scales = 5;

    double scale(int k) const;
    Interval anchor(int level, int loc, int k) const;
    size_t count() const;
    // Flat order: level-major, then location, then scale. This matches the
    // head output layout (cls channel a*N_C + c at time i).
    size_t flat_index(int level, int loc, int k) const;
};

AnchorSet generate_anchors(const std::vector<PyramidLevel>& levels, double base_factor,
                           int n_scales = 5);
std::vector<Interval> materialize_anchors(const AnchorSet& set);

// Anchor-free locations with per-level regression ranges. Borders are
// unitless; offsets are measured in multiples of `unit` (the first-level
// stride in seconds). Level i accepts max-offsets in (borders[i],
// borders[i+1]] with an implicit +infinity after the last border.
struct PointSet {
    std::vector<PyramidLevel> levels;
    std::vector<double> borders;
    double unit = 1.0;

    double location(int level, int loc) const;
    double range_lo(int level) const { return borders[level]; }
    double range_hi(int level) const;
    size_t count() const;
    size_t flat_index(int level, int loc) const;
};

PointSet build_points(const std::vector<PyramidLevel>& levels, std::vector<double> borders);

enum class CandidateState { kPositive, kNegative, kIgnored };

// One entry per candidate, aligned with the flat candidate order.
struct Assignment {
    std::vector<CandidateState> state;
    std::vector<int> gt_index;  // -1 unless positive
    int num_positives = 0;

    size_t size() const { return state.size(); }
};

// Max-tIoU assignment with an ignore band, plus (optionally) a forced
// positive on each ground truth's single best anchor. Ties break toward the
// lower index on both sides.
Assignment assign_anchor_based(const std::vector<Interval>& anchors,
                               const std::vector<ActionInstance>& gts, double hi = 0.6,
                               double lo = 0.4, bool force_best_match = true);

// A location is positive for the contained ground truth whose max boundary
// offset (in range units) falls inside the level's range; among several the
// shortest wins, earlier input order breaking ties.
Assignment assign_anchor_free(const PointSet& points, const std::vector<ActionInstance>& gts);

// Center/length parameterization against an anchor.
Interval decode_anchor_raw(const Interval& anchor, double t_c, double t_l);
Interval decode_anchor(const Interval& anchor, double t_c, double t_l, double clip_duration);
void encode_anchor(const Interval& gt, const Interval& anchor, double* t_c, double* t_l);

// Exponential boundary offsets from a location, in range units.
Interval decode_point_raw(double x, double raw_l, double raw_r, double unit);
Interval decode_point(double x, double raw_l, double raw_r, double unit, double clip_duration);
void encode_point(const Interval& gt, double x, double unit, double* raw_l, double* raw_r);

}  // namespace tadkit

#endif
