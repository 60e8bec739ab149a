#ifndef TADKIT_NETWORK_HPP
#define TADKIT_NETWORK_HPP

#include <cmath>
#include <string>
#include <vector>

#include "tadkit/config.hpp"
#include "tadkit/prng.hpp"
#include "tadkit/tape.hpp"
#include "tadkit/targets.hpp"

namespace tadkit {

// Static description of one pyramid level, derived from config alone so
// targets and anchors can be built without running the network.
struct LevelPlan {
    int t_len = 0;
    int stride_frames = 0;
};

struct NetworkPlan {
    int backbone_t = 0;
    int backbone_stride = 1;
    std::vector<int> stage_t;        // per backbone stage
    std::vector<int> stage_stride;   // frames per step at each stage output
    std::vector<int> tfpn_source;    // stage index feeding each retained level (-1: extension)
    std::vector<LevelPlan> levels;
};

inline int halved_len(int t) { return conv_out_len(t, 3, 2, 1); }  // k3 s2 p1 chain step

// Computes stage/level geometry for a clip of the given length and checks
// the structural constraints (divisibility, exact doubling where the
// top-down pathway adds features).
inline NetworkPlan plan_network(const BackboneConfig& bb, const NeckConfig& neck,
                                int clip_frames) {
    NetworkPlan plan;
    const int factor = bb.temporal_factor();
    if (clip_frames % factor != 0) {
        throw ConfigError("clip length " + std::to_string(clip_frames) +
                          " not divisible by backbone temporal factor " + std::to_string(factor));
    }
    int t = clip_frames, stride = 1;
    for (size_t i = 0; i < bb.stage_channels.size(); ++i) {
        for (int d : bb.downsample_before_stage) {
            if (d == static_cast<int>(i)) { t = halved_len(t); stride *= 2; }
        }
        plan.stage_t.push_back(t);
        plan.stage_stride.push_back(stride);
    }
    plan.backbone_t = t;
    plan.backbone_stride = stride;

    std::vector<LevelPlan> lv;
    if (neck.variant == NeckVariant::kTfpnFromBackbone) {
        // Keep the deepest stage at each distinct temporal length, then grow
        // extra low-resolution levels from the last stage.
        for (size_t i = 0; i < plan.stage_t.size(); ++i) {
            if (!lv.empty() && lv.back().t_len == plan.stage_t[i]) {
                lv.back().stride_frames = plan.stage_stride[i];
                plan.tfpn_source.back() = static_cast<int>(i);
            } else {
                lv.push_back({plan.stage_t[i], plan.stage_stride[i]});
                plan.tfpn_source.push_back(static_cast<int>(i));
            }
        }
        while (static_cast<int>(lv.size()) > neck.levels) {
            lv.erase(lv.begin());
            plan.tfpn_source.erase(plan.tfpn_source.begin());
        }
        while (static_cast<int>(lv.size()) < neck.levels) {
            lv.push_back({halved_len(lv.back().t_len), lv.back().stride_frames * 2});
            plan.tfpn_source.push_back(-1);
        }
    } else {
        lv.push_back({plan.backbone_t, plan.backbone_stride});
        for (int l = 1; l < neck.levels; ++l) {
            lv.push_back({halved_len(lv.back().t_len), lv.back().stride_frames * 2});
        }
    }
    const bool has_topdown = neck.variant != NeckVariant::kTdmAfterBackbone;
    for (size_t l = 0; l + 1 < lv.size(); ++l) {
        if (has_topdown && lv[l].t_len != 2 * lv[l + 1].t_len) {
            throw ConfigError("top-down pathway needs exact x2 level lengths; got " +
                              std::to_string(lv[l].t_len) + " over " +
                              std::to_string(lv[l + 1].t_len) +
                              " (pick a clip length divisible by the full pyramid factor)");
        }
        if (lv[l + 1].stride_frames != 2 * lv[l].stride_frames) {
            throw ConfigError("pyramid strides must double per level");
        }
    }
    plan.levels = std::move(lv);
    return plan;
}

// Feature handle moving between model stages.
struct Staged {
    int node = -1;
    int stride_frames = 1;
    int channels = 0;
};

template <typename T>
struct PyramidOutput {
    struct Level {
        int cls = -1;   // (A*N_C, t, 1) or (N_C, t, 1)
        int reg = -1;   // (2A, t, 1) or (2, t, 1)
        int t_len = 0;
        int stride_frames = 1;
    };
    std::vector<Level> levels;
};

// BasicTAD-style detector: configurable backbone stub, one of three neck
// topologies, and a shared-weight anchor-based or anchor-free head.
template <typename T>
class Model {
public:
    Model(const RunConfig& cfg, uint64_t init_seed) : cfg_(cfg) {
        build_params(init_seed);
    }

    const RunConfig& config() const { return cfg_; }
    std::vector<Param<T>>& params() { return params_; }
    const std::vector<Param<T>>& params() const { return params_; }

    std::vector<PyramidLevel> pyramid_levels(int clip_frames, double fps) const {
        NetworkPlan plan = plan_network(cfg_.backbone, cfg_.neck, clip_frames);
        std::vector<PyramidLevel> out;
        for (const auto& lv : plan.levels) {
            out.push_back({lv.stride_frames / fps, lv.t_len});
        }
        return out;
    }

    // input: (in_channels, clip_frames, spatial_cols)
    std::vector<Staged> backbone_forward(Graph<T>& g, int input) const {
        const auto& bb = cfg_.backbone;
        const Tensor<T>& x = g.val(input);
        if (x.c != bb.in_channels) throw ConfigError("backbone input channel mismatch");
        if (x.s != bb.spatial_cols()) throw ConfigError("backbone input spatial mismatch");
        const int factor = bb.temporal_factor();
        if (x.t % factor != 0) {
            throw ConfigError("backbone input length " + std::to_string(x.t) +
                              " not divisible by temporal factor " + std::to_string(factor));
        }
        std::vector<Staged> stages;
        int cur = input, stride = 1;
        for (size_t i = 0; i < bb.stage_channels.size(); ++i) {
            for (int d : bb.downsample_before_stage) {
                if (d == static_cast<int>(i)) {
                    cur = g.maxpool_temporal(cur, 3, 2, 1);
                    stride *= 2;
                }
            }
            cur = g.relu(g.conv_temporal(cur, wref(backbone_[i].w), wref(backbone_[i].b), 1, 1));
            stages.push_back({cur, stride, bb.stage_channels[i]});
        }
        return stages;
    }

    std::vector<Staged> neck_forward(Graph<T>& g, const std::vector<Staged>& stages) const {
        const auto& nk = cfg_.neck;
        std::vector<Staged> feats = stages;
        if (!nk.spatial_preservation) {
            for (auto& f : feats) f.node = squeeze_spatial(g, f.node);
        }

        std::vector<Staged> levels;
        if (nk.variant == NeckVariant::kTdmAfterBackbone) {
            Staged cur = feats.back();
            if (nk.op == NeckOperator::kConv) {
                cur.node = g.relu(g.conv_temporal(cur.node, wref(proj_.w), wref(proj_.b), 1, 1));
                cur.channels = nk.channels;
            }
            levels.push_back(cur);
            for (int l = 1; l < nk.levels; ++l) {
                levels.push_back(apply_operator(g, levels.back(), l - 1));
            }
        } else {
            // Gather the lateral sources: either deduped backbone stages plus
            // extensions, or the TDM chain grown from the last stage.
            std::vector<Staged> src;
            if (nk.variant == NeckVariant::kTfpnFromBackbone) {
                for (const auto& f : feats) {
                    const int tl = g.val(f.node).t;
                    if (!src.empty() && g.val(src.back().node).t == tl) src.back() = f;
                    else src.push_back(f);
                }
                while (static_cast<int>(src.size()) > nk.levels) src.erase(src.begin());
                int ext = 0;
                while (static_cast<int>(src.size()) < nk.levels) {
                    src.push_back(apply_operator(g, src.back(), ext++));
                }
            } else {  // TDM-TFPN
                src.push_back(feats.back());
                for (int l = 1; l < nk.levels; ++l) {
                    src.push_back(apply_operator(g, src.back(), l - 1));
                }
            }
            // Lateral projections to the common width, then top-down fusion.
            std::vector<int> lat(src.size());
            for (size_t l = 0; l < src.size(); ++l) {
                lat[l] = g.conv_temporal(src[l].node, wref(lateral_[l].w), wref(lateral_[l].b),
                                         1, 0);
            }
            std::vector<int> merged(src.size());
            merged.back() = lat.back();
            for (int l = static_cast<int>(src.size()) - 2; l >= 0; --l) {
                merged[l] = g.add(lat[l], g.upsample_x2(merged[l + 1]));
            }
            for (size_t l = 0; l < src.size(); ++l) {
                const int out = g.conv_temporal(merged[l], wref(fpn_[l].w), wref(fpn_[l].b), 1, 1);
                levels.push_back({out, src[l].stride_frames, nk.channels});
            }
        }

        if (nk.spatial_preservation) {
            for (auto& f : levels) f.node = squeeze_spatial(g, f.node);
        }
        return levels;
    }

    PyramidOutput<T> head_forward(Graph<T>& g, const std::vector<Staged>& levels) const {
        const auto& hd = cfg_.head;
        PyramidOutput<T> out;
        const int pad = (hd.tower_kernel - 1) / 2;
        for (const auto& lv : levels) {
            if (g.val(lv.node).c != hd.channels) {
                throw ConfigError("head expects " + std::to_string(hd.channels) +
                                  " channels, level carries " + std::to_string(g.val(lv.node).c));
            }
            int hc = lv.node, hr = lv.node;
            for (int d = 0; d < hd.tower_depth; ++d) {
                hc = g.relu(g.conv_temporal(hc, wref(cls_tower_[d].w), wref(cls_tower_[d].b),
                                            1, pad));
                hr = g.relu(g.conv_temporal(hr, wref(reg_tower_[d].w), wref(reg_tower_[d].b),
                                            1, pad));
            }
            typename PyramidOutput<T>::Level level;
            level.cls = g.conv_temporal(hc, wref(cls_out_.w), wref(cls_out_.b), 1, 1);
            level.reg = g.conv_temporal(hr, wref(reg_out_.w), wref(reg_out_.b), 1, 1);
            level.t_len = g.val(level.cls).t;
            level.stride_frames = lv.stride_frames;
            out.levels.push_back(level);
        }
        return out;
    }

    PyramidOutput<T> forward(Graph<T>& g, int input) const {
        return head_forward(g, neck_forward(g, backbone_forward(g, input)));
    }

private:
    struct Conv {
        int w = -1, b = -1;
    };

    ParamRef<T> wref(int idx) const {
        if (idx < 0) return {nullptr, -1};
        return {&params_[idx].value, idx};
    }

    int squeeze_spatial(Graph<T>& g, int node) const {
        return g.val(node).s == 1 ? node : g.spatial_avg_pool(node);
    }

    // TDM chain step l (0-based among strided steps).
    Staged apply_operator(Graph<T>& g, const Staged& prev, int l) const {
        Staged next;
        next.stride_frames = prev.stride_frames * 2;
        if (cfg_.neck.op == NeckOperator::kConv) {
            next.node = g.relu(g.conv_temporal(prev.node, wref(tdm_[l].w), wref(tdm_[l].b), 2, 1));
            next.channels = params_[tdm_[l].w].value.c;
        } else {
            next.node = g.maxpool_temporal(prev.node, 3, 2, 1);
            next.channels = prev.channels;
        }
        return next;
    }

    Conv add_conv(Prng& rng, const std::string& name, int c_out, int c_in, int k) {
        Conv cp;
        // He-uniform weights: this network has no normalization layers, so
        // the init must preserve activation variance through the relu
        // stack (a plain 1/sqrt(fan_in) bound decays the signal ~0.4x per
        // layer and the heads degenerate to their biases).
        cp.w = add_param(rng, name + ".w", c_out, c_in, k,
                         std::sqrt(6.0 / static_cast<double>(c_in * k)));
        cp.b = add_param(rng, name + ".b", c_out, 1, 1,
                         1.0 / std::sqrt(static_cast<double>(c_in * k)));
        return cp;
    }

    int add_param(Prng& rng, const std::string& name, int c, int t, int s, double bound) {
        Param<T> p;
        p.name = name;
        p.value = Tensor<T>(c, t, s);
        for (auto& v : p.value.v) v = static_cast<T>(rng.uniform(-bound, bound));
        p.index = static_cast<int>(params_.size());
        params_.push_back(std::move(p));
        return static_cast<int>(params_.size()) - 1;
    }

    void build_params(uint64_t seed) {
        Prng rng(mix_seed(seed, 0x696e6974));
        const auto& bb = cfg_.backbone;
        const auto& nk = cfg_.neck;
        const auto& hd = cfg_.head;

        int c_in = bb.in_channels;
        for (size_t i = 0; i < bb.stage_channels.size(); ++i) {
            backbone_.push_back(add_conv(rng, "backbone.stage" + std::to_string(i),
                                         bb.stage_channels[i], c_in, 3));
            c_in = bb.stage_channels[i];
        }
        const int c_bb = c_in;

        // The neck plan fixes which parameters exist; reuse the static plan
        // so shapes and the builder cannot drift apart.
        NetworkPlan plan = plan_network(bb, nk, cfg_.clip_frames);
        if (nk.variant == NeckVariant::kTdmAfterBackbone) {
            if (nk.op == NeckOperator::kConv) {
                proj_ = add_conv(rng, "neck.proj", nk.channels, c_bb, 3);
                for (int l = 1; l < nk.levels; ++l) {
                    tdm_.push_back(add_conv(rng, "neck.tdm" + std::to_string(l), nk.channels,
                                            nk.channels, 3));
                }
            }
        } else if (nk.variant == NeckVariant::kTdmTfpnAfterBackbone) {
            std::vector<int> widths = {c_bb};
            if (nk.op == NeckOperator::kConv) {
                int c = c_bb;
                for (int l = 1; l < nk.levels; ++l) {
                    tdm_.push_back(add_conv(rng, "neck.tdm" + std::to_string(l),
                                            nk.tdm_channels, c, 3));
                    c = nk.tdm_channels;
                    widths.push_back(c);
                }
            } else {
                for (int l = 1; l < nk.levels; ++l) widths.push_back(c_bb);
            }
            add_tfpn(rng, widths);
        } else {  // TFPN from backbone
            std::vector<int> widths;
            for (size_t l = 0; l < plan.levels.size(); ++l) {
                const int src = plan.tfpn_source[l];
                if (src >= 0) {
                    widths.push_back(bb.stage_channels[src]);
                } else if (nk.op == NeckOperator::kConv) {
                    tdm_.push_back(add_conv(rng, "neck.ext" + std::to_string(l),
                                            widths.back(), widths.back(), 3));
                    widths.push_back(widths.back());
                } else {
                    widths.push_back(widths.back());
                }
            }
            add_tfpn(rng, widths);
        }

        for (int d = 0; d < hd.tower_depth; ++d) {
            cls_tower_.push_back(add_conv(rng, "head.cls" + std::to_string(d), hd.channels,
                                          hd.channels, hd.tower_kernel));
            reg_tower_.push_back(add_conv(rng, "head.reg" + std::to_string(d), hd.channels,
                                          hd.channels, hd.tower_kernel));
        }
        const int a = hd.kind == HeadKind::kAnchorBased ? hd.anchors_per_location : 1;
        cls_out_ = add_conv(rng, "head.cls_out", a * hd.num_classes, hd.channels, 3);
        reg_out_ = add_conv(rng, "head.reg_out", a * 2, hd.channels, 3);

        // Focal-loss prior: start every classification score near pi = 0.01.
        const double pi = 0.01;
        const T prior = static_cast<T>(-std::log((1.0 - pi) / pi));
        for (auto& v : params_[cls_out_.b].value.v) v = prior;
    }

    void add_tfpn(Prng& rng, const std::vector<int>& widths) {
        for (size_t l = 0; l < widths.size(); ++l) {
            lateral_.push_back(add_conv(rng, "neck.lateral" + std::to_string(l),
                                        cfg_.neck.channels, widths[l], 1));
        }
        for (size_t l = 0; l < widths.size(); ++l) {
            fpn_.push_back(add_conv(rng, "neck.fpn" + std::to_string(l), cfg_.neck.channels,
                                    cfg_.neck.channels, 3));
        }
    }

    RunConfig cfg_;
    std::vector<Param<T>> params_;
    std::vector<Conv> backbone_;
    Conv proj_;
    std::vector<Conv> tdm_;
    std::vector<Conv> lateral_;
    std::vector<Conv> fpn_;
    std::vector<Conv> cls_tower_;
    std::vector<Conv> reg_tower_;
    Conv cls_out_;
    Conv reg_out_;
};

}  // namespace tadkit

#endif
