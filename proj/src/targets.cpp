#include "tadkit/targets.hpp"

#include <cmath>
#include <limits>

namespace tadkit {

double AnchorSet::scale(int k) const {
    return std::pow(2.0, static_cast<double>(k) / n_scales);
}

Interval AnchorSet::anchor(int level, int loc, int k) const {
    const auto& lv = levels[level];
    const double center = (loc + 0.5) * lv.stride_sec;
    const double len = base_factor * lv.stride_sec * scale(k);
    return Interval(center - 0.5 * len, center + 0.5 * len);
}

size_t AnchorSet::count() const {
    size_t n = 0;
    for (const auto& lv : levels) n += static_cast<size_t>(lv.t_len) * n_scales;
    return n;
}

size_t AnchorSet::flat_index(int level, int loc, int k) const {
    size_t off = 0;
    for (int l = 0; l < level; ++l) off += static_cast<size_t>(levels[l].t_len) * n_scales;
    return off + static_cast<size_t>(loc) * n_scales + k;
}

AnchorSet generate_anchors(const std::vector<PyramidLevel>& levels, double base_factor,
                           int n_scales) {
    AnchorSet set;
    set.levels = levels;
    set.base_factor = base_factor;
    set.n_scales = n_scales;
    return set;
}

std::vector<Interval> materialize_anchors(const AnchorSet& set) {
    std::vector<Interval> out;
    out.reserve(set.count());
    for (size_t l = 0; l < set.levels.size(); ++l) {
        for (int i = 0; i < set.levels[l].t_len; ++i) {
            for (int k = 0; k < set.n_scales; ++k) {
                out.push_back(set.anchor(static_cast<int>(l), i, k));
            }
        }
    }
    return out;
}

double PointSet::location(int level, int loc) const {
    return (loc + 0.5) * levels[level].stride_sec;
}

double PointSet::range_hi(int level) const {
    return level + 1 < static_cast<int>(borders.size())
               ? borders[level + 1]
               : std::numeric_limits<double>::infinity();
}

size_t PointSet::count() const {
    size_t n = 0;
    for (const auto& lv : levels) n += lv.t_len;
    return n;
}

size_t PointSet::flat_index(int level, int loc) const {
    size_t off = 0;
    for (int l = 0; l < level; ++l) off += levels[l].t_len;
    return off + loc;
}

PointSet build_points(const std::vector<PyramidLevel>& levels, std::vector<double> borders) {
    PointSet ps;
    ps.levels = levels;
    ps.borders = std::move(borders);
    ps.unit = levels.empty() ? 1.0 : levels.front().stride_sec;
    return ps;
}

Assignment assign_anchor_based(const std::vector<Interval>& anchors,
                               const std::vector<ActionInstance>& gts, double hi, double lo,
                               bool force_best_match) {
    const size_t n = anchors.size();
    Assignment out;
    out.state.assign(n, CandidateState::kNegative);
    out.gt_index.assign(n, -1);

    for (size_t i = 0; i < n; ++i) {
        double best = 0.0;
        int best_j = -1;
        for (size_t j = 0; j < gts.size(); ++j) {
            const double t = tiou(anchors[i], gts[j].interval);
            if (t > best) { best = t; best_j = static_cast<int>(j); }
        }
        if (best_j >= 0 && best >= hi) {
            out.state[i] = CandidateState::kPositive;
            out.gt_index[i] = best_j;
        } else if (best < lo) {
            out.state[i] = CandidateState::kNegative;
        } else {
            out.state[i] = CandidateState::kIgnored;
        }
    }

    if (force_best_match && !gts.empty() && n > 0) {
        // Each gt claims its single best anchor; if several gts claim the
        // same anchor, the higher tIoU wins (earlier gt on ties).
        std::vector<int> claimed_gt(n, -1);
        std::vector<double> claimed_tiou(n, -1.0);
        for (size_t j = 0; j < gts.size(); ++j) {
            double best = -1.0;
            size_t best_i = 0;
            for (size_t i = 0; i < n; ++i) {
                const double t = tiou(anchors[i], gts[j].interval);
                if (t > best) { best = t; best_i = i; }
            }
            if (best > claimed_tiou[best_i]) {
                claimed_tiou[best_i] = best;
                claimed_gt[best_i] = static_cast<int>(j);
            }
        }
        for (size_t i = 0; i < n; ++i) {
            if (claimed_gt[i] >= 0) {
                out.state[i] = CandidateState::kPositive;
                out.gt_index[i] = claimed_gt[i];
            }
        }
    }

    for (auto st : out.state) {
        if (st == CandidateState::kPositive) ++out.num_positives;
    }
    return out;
}

Assignment assign_anchor_free(const PointSet& points, const std::vector<ActionInstance>& gts) {
    Assignment out;
    out.state.assign(points.count(), CandidateState::kNegative);
    out.gt_index.assign(points.count(), -1);

    for (size_t l = 0; l < points.levels.size(); ++l) {
        const double lo = points.range_lo(static_cast<int>(l));
        const double hi = points.range_hi(static_cast<int>(l));
        for (int i = 0; i < points.levels[l].t_len; ++i) {
            const double x = points.location(static_cast<int>(l), i);
            int best_j = -1;
            double best_len = std::numeric_limits<double>::infinity();
            for (size_t j = 0; j < gts.size(); ++j) {
                const Interval& g = gts[j].interval;
                if (x < g.start || x > g.end) continue;
                const double off = std::max(x - g.start, g.end - x) / points.unit;
                if (!(off > lo && off <= hi)) continue;
                if (g.length() < best_len) {
                    best_len = g.length();
                    best_j = static_cast<int>(j);
                }
            }
            if (best_j >= 0) {
                const size_t idx = points.flat_index(static_cast<int>(l), i);
                out.state[idx] = CandidateState::kPositive;
                out.gt_index[idx] = best_j;
                ++out.num_positives;
            }
        }
    }
    return out;
}

Interval decode_anchor_raw(const Interval& anchor, double t_c, double t_l) {
    const double center = anchor.center() + t_c * anchor.length();
    const double len = anchor.length() * std::exp(t_l);
    return Interval(center - 0.5 * len, center + 0.5 * len);
}

Interval decode_anchor(const Interval& anchor, double t_c, double t_l, double clip_duration) {
    return clamp_interval(decode_anchor_raw(anchor, t_c, t_l), 0.0, clip_duration);
}

void encode_anchor(const Interval& gt, const Interval& anchor, double* t_c, double* t_l) {
    *t_c = (gt.center() - anchor.center()) / anchor.length();
    *t_l = std::log(gt.length() / anchor.length());
}

Interval decode_point_raw(double x, double raw_l, double raw_r, double unit) {
    return Interval(x - std::exp(raw_l) * unit, x + std::exp(raw_r) * unit);
}

Interval decode_point(double x, double raw_l, double raw_r, double unit, double clip_duration) {
    return clamp_interval(decode_point_raw(x, raw_l, raw_r, unit), 0.0, clip_duration);
}

void encode_point(const Interval& gt, double x, double unit, double* raw_l, double* raw_r) {
    *raw_l = std::log((x - gt.start) / unit);
    *raw_r = std::log((gt.end - x) / unit);
}

}  // namespace tadkit
