#ifndef TADKIT_TRAINER_HPP
#define TADKIT_TRAINER_HPP

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "tadkit/checkpoint.hpp"
#include "tadkit/clips.hpp"
#include "tadkit/losses.hpp"
#include "tadkit/network.hpp"
#include "tadkit/prng.hpp"
#include "tadkit/synthdata.hpp"
#include "tadkit/threading.hpp"

namespace tadkit {

// Linear warmup into a cosine decay that holds at the floor (or restarts
// when cosine_restarts is set).
inline double lr_at(int iter, const OptimConfig& cfg) {
    if (iter < cfg.warmup_iters) {
        return cfg.warmup_start +
               (cfg.lr_peak - cfg.warmup_start) * static_cast<double>(iter) / cfg.warmup_iters;
    }
    int t = iter - cfg.warmup_iters;
    if (cfg.cosine_restarts) t %= cfg.cosine_period;
    else if (t >= cfg.cosine_period) return cfg.lr_floor;
    const double cosine = 0.5 * (1.0 + std::cos(M_PI * static_cast<double>(t) / cfg.cosine_period));
    return cfg.lr_floor + (cfg.lr_peak - cfg.lr_floor) * cosine;
}

template <typename T>
struct SgdState {
    std::vector<Tensor<T>> velocity;

    explicit SgdState(const std::vector<Param<T>>& params) {
        for (const auto& p : params) velocity.emplace_back(p.value.c, p.value.t, p.value.s);
    }
};

// v <- momentum * v + (g + wd * w);  w <- w - lr * v
template <typename T>
void sgd_step(std::vector<Param<T>>& params, const GradStore<T>& grads, SgdState<T>& state,
              double lr, const OptimConfig& cfg) {
    for (size_t pi = 0; pi < params.size(); ++pi) {
        auto& w = params[pi].value;
        auto& v = state.velocity[pi];
        const bool has_grad = pi < grads.size() && !grads[pi].v.empty();
        for (size_t i = 0; i < w.v.size(); ++i) {
            const T g_raw = has_grad ? grads[pi].v[i] : T(0);
            if (!std::isfinite(static_cast<double>(g_raw))) {
                throw NumericError("non-finite gradient in parameter '" + params[pi].name + "'");
            }
            const T g = g_raw + static_cast<T>(cfg.weight_decay) * w.v[i];
            v.v[i] = static_cast<T>(cfg.momentum) * v.v[i] + g;
            w.v[i] -= static_cast<T>(lr) * v.v[i];
        }
    }
}

struct TrainStats {
    double final_loss_cls = 0.0;
    double final_loss_reg = 0.0;
    double final_loss_total = 0.0;
    int iterations = 0;
};

// Deterministic training loop: batch composition, init and gradient
// reduction are all fixed by the seed (the reduction runs in sample order
// regardless of worker count).
template <typename T>
TrainStats train(Model<T>& model, const Dataset& ds, const RunConfig& cfg,
                 const std::string& ckpt_path, const std::string& log_path, int threads) {
    if (ds.annotations.empty()) throw DataError("training dataset is empty");
    const auto& oc = cfg.optim;
    const int clip = cfg.clip_frames;
    const double clip_sec = clip / ds.fps;

    const auto pyramid = model.pyramid_levels(clip, ds.fps);
    AnchorSet anchors = generate_anchors(pyramid, cfg.head.anchor_base,
                                         cfg.head.anchors_per_location);
    PointSet points = build_points(pyramid, cfg.head.af_range_borders);
    const bool ab = cfg.head.kind == HeadKind::kAnchorBased;

    std::ofstream log;
    if (!log_path.empty()) {
        log.open(log_path);
        if (!log) throw DataError("cannot write training log to " + log_path);
    }

    SgdState<T> sgd(model.params());
    const size_t n_params = model.params().size();
    Prng sampler(mix_seed(cfg.seed, 0x74726169));

    struct SampleOut {
        GradStore<T> grads;
        double loss_cls = 0.0, loss_reg = 0.0;
        int npos = 0;
    };

    TrainStats stats;
    for (int iter = 0; iter < oc.iterations; ++iter) {
        const auto t0 = std::chrono::steady_clock::now();
        const double lr = lr_at(iter, oc);

        struct SamplePlan { int video; int offset; };
        std::vector<SamplePlan> plans(oc.batch_size);
        for (auto& p : plans) {
            p.video = static_cast<int>(sampler.next_below(ds.annotations.size()));
            const int frames = static_cast<int>(ds.features[p.video].shape[1]);
            p.offset = frames > clip ? static_cast<int>(sampler.uniform_int(0, frames - clip)) : 0;
        }

        std::vector<SampleOut> outs(oc.batch_size);
        parallel_for(oc.batch_size, threads, [&](int j) {
            const auto& plan = plans[j];
            SampleOut& so = outs[j];
            so.grads.resize(n_params);
            Graph<T> g(&so.grads);
            const int input = g.input(clip_tensor<T>(ds.features[plan.video], plan.offset, clip));
            const PyramidOutput<T> pyr = model.forward(g, input);
            const auto gts = window_instances(ds.annotations[plan.video].instances,
                                              plan.offset / ds.fps, clip_sec,
                                              oc.gt_keep_fraction);
            const LossTerms<T> terms = detection_loss_terms(g, pyr, cfg.head, cfg.loss,
                                                            ab ? &anchors : nullptr,
                                                            ab ? nullptr : &points, gts);
            so.loss_cls = static_cast<double>(g.val(terms.cls).v[0]);
            so.loss_reg = static_cast<double>(g.val(terms.reg).v[0]);
            so.npos = terms.num_positives;
            T seed_cls = T(1), seed_reg = static_cast<T>(cfg.loss.alpha_weight);
            if (cfg.loss.normalizer == LossNormalizer::kBatchMean) {
                const T norm = static_cast<T>(1.0 / std::max(1, terms.num_positives));
                seed_cls *= norm;
                seed_reg *= norm;
            }
            g.backward({{terms.cls, seed_cls}, {terms.reg, seed_reg}});
        });

        int total_pos = 0;
        for (const auto& so : outs) total_pos += so.npos;

        double scale;
        double loss_cls = 0.0, loss_reg = 0.0;
        if (cfg.loss.normalizer == LossNormalizer::kNumPositives) {
            scale = 1.0 / std::max(1, total_pos);
            for (const auto& so : outs) { loss_cls += so.loss_cls; loss_reg += so.loss_reg; }
            loss_cls *= scale;
            loss_reg *= scale;
        } else {
            scale = 1.0 / oc.batch_size;
            for (const auto& so : outs) {
                const double n = std::max(1, so.npos);
                loss_cls += so.loss_cls / n;
                loss_reg += so.loss_reg / n;
            }
            loss_cls *= scale;
            loss_reg *= scale;
        }

        // Fixed-order reduction keeps results independent of thread count.
        GradStore<T> grads(n_params);
        for (const auto& so : outs) {
            for (size_t pi = 0; pi < n_params; ++pi) {
                if (so.grads[pi].v.empty()) continue;
                if (grads[pi].v.empty()) {
                    grads[pi] = so.grads[pi];
                } else {
                    for (size_t i = 0; i < grads[pi].v.size(); ++i) {
                        grads[pi].v[i] += so.grads[pi].v[i];
                    }
                }
            }
        }
        for (auto& gt : grads) {
            for (auto& v : gt.v) v *= static_cast<T>(scale);
        }

        const double loss_total = loss_cls + cfg.loss.alpha_weight * loss_reg;
        if (!std::isfinite(loss_total) || loss_total > 1e4) {
            throw NumericError("training diverged at iteration " + std::to_string(iter) +
                               " (loss " + std::to_string(loss_total) + ")");
        }

        sgd_step(model.params(), grads, sgd, lr, oc);

        const double wall_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        if (log) {
            char line[256];
            std::snprintf(line, sizeof(line),
                          "{\"iter\":%d,\"lr\":%.8f,\"loss_cls\":%.6f,\"loss_reg\":%.6f,"
                          "\"loss_total\":%.6f,\"wall_ms\":%.1f}\n",
                          iter, lr, loss_cls, loss_reg, loss_total, wall_ms);
            log << line;
        }

        stats.final_loss_cls = loss_cls;
        stats.final_loss_reg = loss_reg;
        stats.final_loss_total = loss_total;
        stats.iterations = iter + 1;

        if (!ckpt_path.empty() && oc.checkpoint_every > 0 && (iter + 1) % oc.checkpoint_every == 0) {
            save_checkpoint(ckpt_path, model);
        }
    }
    if (!ckpt_path.empty()) save_checkpoint(ckpt_path, model);
    return stats;
}

}  // namespace tadkit

#endif
