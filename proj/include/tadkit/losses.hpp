#ifndef TADKIT_LOSSES_HPP
#define TADKIT_LOSSES_HPP

#include <cmath>
#include <memory>
#include <utility>
#include <vector>

#include "tadkit/config.hpp"
#include "tadkit/network.hpp"
#include "tadkit/tape.hpp"
#include "tadkit/targets.hpp"

namespace tadkit {

// Distance-IoU loss on a decoded segment: 1 - tIoU + (center distance /
// enclosing length)^2, with gradients w.r.t. the segment boundaries.
struct DiouGrad {
    double loss = 0.0;
    double d_p1 = 0.0;
    double d_p2 = 0.0;
};

inline DiouGrad diou_with_grad(double p1, double p2, double g1, double g2) {
    const double inter = std::min(p2, g2) - std::max(p1, g1);
    const double clamped = std::max(0.0, inter);
    const double uni = (p2 - p1) + (g2 - g1) - clamped;
    const double iou = clamped / uni;
    const double cd = 0.5 * (p1 + p2) - 0.5 * (g1 + g2);
    const double c = std::max(p2, g2) - std::min(p1, g1);

    DiouGrad out;
    out.loss = 1.0 - iou + (cd * cd) / (c * c);

    const double di_p1 = (inter > 0.0 && p1 >= g1) ? -1.0 : 0.0;
    const double di_p2 = (inter > 0.0 && p2 <= g2) ? 1.0 : 0.0;
    const double du_p1 = -1.0 - di_p1;
    const double du_p2 = 1.0 - di_p2;
    const double diou_p1 = (di_p1 * uni - clamped * du_p1) / (uni * uni);
    const double diou_p2 = (di_p2 * uni - clamped * du_p2) / (uni * uni);
    const double dc_p1 = (p1 <= g1) ? -1.0 : 0.0;
    const double dc_p2 = (p2 >= g2) ? 1.0 : 0.0;
    const double dpen_p1 = cd / (c * c) - 2.0 * cd * cd * dc_p1 / (c * c * c);
    const double dpen_p2 = cd / (c * c) - 2.0 * cd * cd * dc_p2 / (c * c * c);
    out.d_p1 = -diou_p1 + dpen_p1;
    out.d_p2 = -diou_p2 + dpen_p2;
    return out;
}

inline double diou_loss(const Interval& pred, const Interval& gt) {
    return diou_with_grad(pred.start, pred.end, gt.start, gt.end).loss;
}

// One-vs-all sigmoid focal loss term and its logit gradient.
inline std::pair<double, double> focal_term(double z, bool positive, double alpha, double gamma) {
    const double p = stable_sigmoid(z);
    const double q = stable_sigmoid(-z);  // 1 - p
    if (positive) {
        const double lp = log_sigmoid(z);
        const double mod = std::pow(q, gamma);
        return {-alpha * mod * lp, -alpha * mod * (q - gamma * p * lp)};
    }
    const double lq = log_sigmoid(-z);
    const double mod = std::pow(p, gamma);
    return {-(1.0 - alpha) * mod * lq, (1.0 - alpha) * mod * (p - gamma * q * lq)};
}

template <typename T>
struct LossTerms {
    int cls = -1;  // un-normalized focal sum node
    int reg = -1;  // un-normalized DIoU sum node
    int num_positives = 0;
};

// Builds the classification and regression loss nodes for one clip. The
// assignment is computed here from the clip's ground truth; sums are left
// un-normalized so the batch normalizer can be applied once.
template <typename T>
LossTerms<T> detection_loss_terms(Graph<T>& g, const PyramidOutput<T>& pyr,
                                  const HeadConfig& hd, const LossConfig& lc,
                                  const AnchorSet* anchors, const PointSet* points,
                                  const std::vector<ActionInstance>& gts) {
    const int nc = hd.num_classes;
    const int a_n = hd.kind == HeadKind::kAnchorBased ? hd.anchors_per_location : 1;

    auto asg = std::make_shared<Assignment>(
        hd.kind == HeadKind::kAnchorBased
            ? assign_anchor_based(materialize_anchors(*anchors), gts, hd.assign_hi, hd.assign_lo,
                                  hd.force_best_match)
            : assign_anchor_free(*points, gts));
    auto gts_copy = std::make_shared<std::vector<ActionInstance>>(gts);

    LossTerms<T> out;
    out.num_positives = asg->num_positives;

    // ---- focal classification sum ----
    {
        const double alpha = lc.focal_alpha, gamma = lc.focal_gamma;
        double total = 0.0;
        size_t cand = 0;
        for (const auto& lv : pyr.levels) {
            const Tensor<T>& cls = g.val(lv.cls);
            for (int i = 0; i < lv.t_len; ++i) {
                for (int a = 0; a < a_n; ++a, ++cand) {
                    if (asg->state[cand] == CandidateState::kIgnored) continue;
                    const int tgt = asg->state[cand] == CandidateState::kPositive
                                        ? (*gts_copy)[asg->gt_index[cand]].class_id
                                        : -1;
                    for (int c = 0; c < nc; ++c) {
                        const double z = static_cast<double>(cls.at(a * nc + c, i));
                        total += focal_term(z, c == tgt, alpha, gamma).first;
                    }
                }
            }
        }
        Tensor<T> val(1, 1, 1);
        val.v[0] = static_cast<T>(total);
        std::vector<typename PyramidOutput<T>::Level> levels = pyr.levels;
        out.cls = g.custom(std::move(val), [levels, asg, gts_copy, nc, a_n, alpha,
                                            gamma](const Tensor<T>& dy, Graph<T>& gg) {
            const double seed = static_cast<double>(dy.v[0]);
            size_t cand = 0;
            for (const auto& lv : levels) {
                const Tensor<T>& cls = gg.val(lv.cls);
                Tensor<T>& dcls = gg.grad_buffer(lv.cls);
                for (int i = 0; i < lv.t_len; ++i) {
                    for (int a = 0; a < a_n; ++a, ++cand) {
                        if (asg->state[cand] == CandidateState::kIgnored) continue;
                        const int tgt = asg->state[cand] == CandidateState::kPositive
                                            ? (*gts_copy)[asg->gt_index[cand]].class_id
                                            : -1;
                        for (int c = 0; c < nc; ++c) {
                            const int ch = a * nc + c;
                            const double z = static_cast<double>(cls.at(ch, i));
                            dcls.at(ch, i) += static_cast<T>(
                                seed * focal_term(z, c == tgt, alpha, gamma).second);
                        }
                    }
                }
            }
        });
    }

    // ---- DIoU regression sum over positives ----
    {
        double total = 0.0;
        size_t cand = 0;
        struct Pos {
            int level, time, a;
            double g1, g2;
        };
        auto positives = std::make_shared<std::vector<Pos>>();
        for (size_t l = 0; l < pyr.levels.size(); ++l) {
            const auto& lv = pyr.levels[l];
            for (int i = 0; i < lv.t_len; ++i) {
                for (int a = 0; a < a_n; ++a, ++cand) {
                    if (asg->state[cand] != CandidateState::kPositive) continue;
                    const Interval& gt = (*gts_copy)[asg->gt_index[cand]].interval;
                    positives->push_back({static_cast<int>(l), i, a, gt.start, gt.end});
                }
            }
        }
        const AnchorSet anchors_copy = anchors ? *anchors : AnchorSet{};
        const PointSet points_copy = points ? *points : PointSet{};
        const bool ab = hd.kind == HeadKind::kAnchorBased;

        auto decode_at = [ab, anchors_copy, points_copy](const Pos& p, double rv0, double rv1,
                                                         double* p1, double* p2, double* j11,
                                                         double* j12, double* j21, double* j22) {
            if (ab) {
                const Interval a = anchors_copy.anchor(p.level, p.time, p.a);
                const double len = a.length() * std::exp(rv1);
                const double center = a.center() + rv0 * a.length();
                *p1 = center - 0.5 * len;
                *p2 = center + 0.5 * len;
                // d p1 / d t_c, d p1 / d t_l, same for p2
                *j11 = a.length(); *j12 = -0.5 * len;
                *j21 = a.length(); *j22 = 0.5 * len;
            } else {
                const double x = points_copy.location(p.level, p.time);
                const double u = points_copy.unit;
                *p1 = x - std::exp(rv0) * u;
                *p2 = x + std::exp(rv1) * u;
                *j11 = *p1 - x; *j12 = 0.0;
                *j21 = 0.0; *j22 = *p2 - x;
            }
        };

        for (const auto& p : *positives) {
            const Tensor<T>& reg = g.val(pyr.levels[p.level].reg);
            const double rv0 = static_cast<double>(reg.at(p.a * 2 + 0, p.time));
            const double rv1 = static_cast<double>(reg.at(p.a * 2 + 1, p.time));
            double p1, p2, j11, j12, j21, j22;
            decode_at(p, rv0, rv1, &p1, &p2, &j11, &j12, &j21, &j22);
            total += diou_with_grad(p1, p2, p.g1, p.g2).loss;
        }

        Tensor<T> val(1, 1, 1);
        val.v[0] = static_cast<T>(total);
        std::vector<typename PyramidOutput<T>::Level> levels = pyr.levels;
        out.reg = g.custom(std::move(val), [levels, positives, decode_at](const Tensor<T>& dy,
                                                                          Graph<T>& gg) {
            const double seed = static_cast<double>(dy.v[0]);
            for (const auto& p : *positives) {
                const Tensor<T>& reg = gg.val(levels[p.level].reg);
                Tensor<T>& dreg = gg.grad_buffer(levels[p.level].reg);
                const double rv0 = static_cast<double>(reg.at(p.a * 2 + 0, p.time));
                const double rv1 = static_cast<double>(reg.at(p.a * 2 + 1, p.time));
                double p1, p2, j11, j12, j21, j22;
                decode_at(p, rv0, rv1, &p1, &p2, &j11, &j12, &j21, &j22);
                const DiouGrad dg = diou_with_grad(p1, p2, p.g1, p.g2);
                dreg.at(p.a * 2 + 0, p.time) +=
                    static_cast<T>(seed * (dg.d_p1 * j11 + dg.d_p2 * j21));
                dreg.at(p.a * 2 + 1, p.time) +=
                    static_cast<T>(seed * (dg.d_p1 * j12 + dg.d_p2 * j22));
            }
        });
    }
    return out;
}

// weight * value sum of scalar nodes (used to assemble Eq-style totals).
template <typename T>
int weighted_sum(Graph<T>& g, const std::vector<std::pair<int, T>>& terms) {
    double total = 0.0;
    for (const auto& [id, w] : terms) {
        total += static_cast<double>(g.val(id).v[0]) * static_cast<double>(w);
    }
    Tensor<T> val(1, 1, 1);
    val.v[0] = static_cast<T>(total);
    return g.custom(std::move(val), [terms](const Tensor<T>& dy, Graph<T>& gg) {
        for (const auto& [id, w] : terms) {
            gg.grad_buffer(id).v[0] += dy.v[0] * w;
        }
    });
}

// Scalar total for one clip: L = L_cls + alpha * L_reg with the positive
// count normalizer (used by checks; the trainer normalizes per batch).
template <typename T>
int total_loss_node(Graph<T>& g, const LossTerms<T>& terms, const LossConfig& lc) {
    const T norm = static_cast<T>(1.0 / std::max(1, terms.num_positives));
    return weighted_sum(g, {{terms.cls, norm}, {terms.reg, static_cast<T>(lc.alpha_weight) * norm}});
}

}  // namespace tadkit

#endif
