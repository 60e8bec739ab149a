#ifndef TADKIT_DETECT_HPP
#define TADKIT_DETECT_HPP

#include <algorithm>
#include <vector>

#include "tadkit/clips.hpp"
#include "tadkit/config.hpp"
#include "tadkit/network.hpp"
#include "tadkit/suppress.hpp"
#include "tadkit/synthdata.hpp"
#include "tadkit/targets.hpp"
#include "tadkit/threading.hpp"
#include "tadkit/windows.hpp"

namespace tadkit {

struct TtaOptions {
    bool threecrop = false;
    bool flip = false;
    FusionStage stage = FusionStage::kNeck;
};

struct DetectOptions {
    WindowDirection direction = WindowDirection::kForward;
    TtaOptions tta;
    int threads = 1;
};

template <typename T>
int mean_nodes(Graph<T>& g, const std::vector<int>& nodes) {
    int acc = nodes[0];
    for (size_t i = 1; i < nodes.size(); ++i) acc = g.add(acc, nodes[i]);
    return nodes.size() > 1 ? g.scale(acc, static_cast<T>(1.0 / nodes.size())) : acc;
}

// Runs the model over one window's views, averaging at the requested stage
// (POST fusion is handled by the caller via per-view detection unions).
template <typename T>
PyramidOutput<T> forward_fused(Graph<T>& g, const Model<T>& model,
                               const std::vector<int>& view_inputs, FusionStage stage) {
    if (view_inputs.size() == 1 || stage == FusionStage::kPost) {
        return model.forward(g, view_inputs[0]);
    }
    if (stage == FusionStage::kBackbone) {
        std::vector<std::vector<Staged>> stages;
        for (int v : view_inputs) stages.push_back(model.backbone_forward(g, v));
        std::vector<Staged> merged = stages[0];
        for (size_t s = 0; s < merged.size(); ++s) {
            std::vector<int> nodes;
            for (const auto& sv : stages) nodes.push_back(sv[s].node);
            merged[s].node = mean_nodes(g, nodes);
        }
        return model.head_forward(g, model.neck_forward(g, merged));
    }
    if (stage == FusionStage::kNeck) {
        std::vector<std::vector<Staged>> levels;
        for (int v : view_inputs) {
            levels.push_back(model.neck_forward(g, model.backbone_forward(g, v)));
        }
        std::vector<Staged> merged = levels[0];
        for (size_t l = 0; l < merged.size(); ++l) {
            std::vector<int> nodes;
            for (const auto& lv : levels) nodes.push_back(lv[l].node);
            merged[l].node = mean_nodes(g, nodes);
        }
        return model.head_forward(g, merged);
    }
    // Head-stage fusion: average the raw logits and regressions.
    std::vector<PyramidOutput<T>> outs;
    for (int v : view_inputs) outs.push_back(model.forward(g, v));
    PyramidOutput<T> merged = outs[0];
    for (size_t l = 0; l < merged.levels.size(); ++l) {
        std::vector<int> cls, reg;
        for (const auto& o : outs) {
            cls.push_back(o.levels[l].cls);
            reg.push_back(o.levels[l].reg);
        }
        merged.levels[l].cls = mean_nodes(g, cls);
        merged.levels[l].reg = mean_nodes(g, reg);
    }
    return merged;
}

// Turns head outputs into scored detections in video time. Candidates below
// the score floor are dropped before anything else happens.
template <typename T>
void decode_window(Graph<T>& g, const PyramidOutput<T>& pyr, const HeadConfig& hd,
                   const AnchorSet& anchors, const PointSet& points, double clip_sec,
                   double offset_sec, double score_floor, std::vector<Detection>* out) {
    const int nc = hd.num_classes;
    const bool ab = hd.kind == HeadKind::kAnchorBased;
    const int a_n = ab ? hd.anchors_per_location : 1;
    for (size_t l = 0; l < pyr.levels.size(); ++l) {
        const Tensor<T>& cls = g.val(pyr.levels[l].cls);
        const Tensor<T>& reg = g.val(pyr.levels[l].reg);
        for (int i = 0; i < pyr.levels[l].t_len; ++i) {
            for (int a = 0; a < a_n; ++a) {
                Interval seg(0, 1);
                bool decoded = false;
                for (int c = 0; c < nc; ++c) {
                    const double score =
                        stable_sigmoid(static_cast<double>(cls.at(a * nc + c, i)));
                    if (score < score_floor) continue;
                    if (!decoded) {
                        const double r0 = static_cast<double>(reg.at(a * 2 + 0, i));
                        const double r1 = static_cast<double>(reg.at(a * 2 + 1, i));
                        seg = ab ? decode_anchor(anchors.anchor(static_cast<int>(l), i, a), r0,
                                                 r1, clip_sec)
                                 : decode_point(points.location(static_cast<int>(l), i), r0, r1,
                                                points.unit, clip_sec);
                        decoded = true;
                    }
                    out->emplace_back(Interval(seg.start + offset_sec, seg.end + offset_sec), c,
                                      score);
                }
            }
        }
    }
}

// Sliding-window detection over one video: per-window (and, for POST
// fusion, per-view) forward passes, decoded candidates shifted into video
// time, then one per-class suppression pass over the union.
template <typename T>
std::vector<Detection> detect_video(const Model<T>& model, const DenseArray& features,
                                    const VideoAnnotation& ann, const RunConfig& cfg,
                                    const DetectOptions& opt) {
    const int frames = static_cast<int>(features.shape[1]);
    const double fps = ann.fps;
    const int clip = cfg.clip_frames;
    const double clip_sec = clip / fps;

    // View tensors for the whole video; windows slice from each.
    std::vector<DenseArray> views;
    {
        std::vector<DenseArray> crops;
        if (opt.tta.threecrop) {
            for (int k = 0; k < 3; ++k) {
                crops.push_back(crop_view(features, ann.video_id, k, cfg.data.view_noise_sigma,
                                          cfg.data.seed));
            }
        } else {
            crops.push_back(features);
        }
        for (auto& c : crops) {
            if (opt.tta.flip) views.push_back(flip_view(c));
            views.push_back(std::move(c));
        }
    }

    const auto pyramid = model.pyramid_levels(clip, fps);
    const AnchorSet anchors =
        generate_anchors(pyramid, cfg.head.anchor_base, cfg.head.anchors_per_location);
    const PointSet points = build_points(pyramid, cfg.head.af_range_borders);

    const WindowPlan plan = plan_windows(frames, clip, opt.direction);
    std::vector<std::vector<Detection>> per_window(plan.starts.size());
    parallel_for(static_cast<int>(plan.starts.size()), opt.threads, [&](int w) {
        const int start = plan.starts[w];
        const double offset_sec = start / fps;
        Graph<T> g(nullptr, false);
        std::vector<int> inputs;
        for (const auto& v : views) inputs.push_back(g.input(clip_tensor<T>(v, start, clip)));
        if (opt.tta.stage == FusionStage::kPost && inputs.size() > 1) {
            for (int vi : inputs) {
                const PyramidOutput<T> pyr = model.forward(g, vi);
                decode_window(g, pyr, cfg.head, anchors, points, clip_sec, offset_sec,
                              cfg.post.score_floor, &per_window[w]);
            }
        } else {
            const PyramidOutput<T> pyr = forward_fused(g, model, inputs, opt.tta.stage);
            decode_window(g, pyr, cfg.head, anchors, points, clip_sec, offset_sec,
                          cfg.post.score_floor, &per_window[w]);
        }
    });

    std::vector<Detection> all;
    for (auto& wdets : per_window) {
        for (auto& d : wdets) {
            all.emplace_back(clamp_interval(d.interval, 0.0, ann.duration), d.class_id, d.score);
        }
    }

    const Suppressor sup = cfg.post.resolve(cfg.head.kind);
    std::vector<Detection> kept;
    for (int c = 0; c < cfg.head.num_classes; ++c) {
        std::vector<Detection> cls_dets;
        for (const auto& d : all) {
            if (d.class_id == c) cls_dets.push_back(d);
        }
        std::vector<Detection> sup_out = sup == Suppressor::kNmw
                                             ? nmw(cls_dets, cfg.post.nms_tiou)
                                             : nms(cls_dets, cfg.post.nms_tiou);
        kept.insert(kept.end(), sup_out.begin(), sup_out.end());
    }

    std::sort(kept.begin(), kept.end(), [](const Detection& a, const Detection& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.interval.start != b.interval.start) return a.interval.start < b.interval.start;
        return a.class_id < b.class_id;
    });
    if (static_cast<int>(kept.size()) > cfg.post.max_detections) {
        kept.resize(cfg.post.max_detections);
    }
    return kept;
}

}  // namespace tadkit

#endif
